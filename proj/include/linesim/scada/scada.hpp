#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/modbus/client.hpp"
#include "linesim/net/fabric.hpp"
#include "linesim/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace linesim::scada {

struct ScadaSettings {
    int poll_period_ticks = 5;
    int timeout_ticks = 10;
    int retries = 3;
    int backoff_ticks = 2;
    int order_timeout_ticks = 3000;
    std::uint8_t unit = 1;
};

enum class OrderStatus { Queued, Fetching, Firing, Milling, Sorting, Done, Failed };
std::string_view to_string(OrderStatus s) noexcept;

struct Order {
    std::uint32_t id = 0;
    Color color = Color::Red;
    int firing_time_ms = 1000;
    int milling_time_ms = 1000;
    int slot_x = 0;
    int slot_y = 0;
    OrderStatus status = OrderStatus::Queued;
    std::vector<std::pair<OrderStatus, Tick>> history;
    std::string failure;

    bool terminal() const noexcept { return status == OrderStatus::Done || status == OrderStatus::Failed; }
};

// Latest completed poll round of one PLC.
struct StationView {
    bool stale = true;
    bool ever_polled = false;
    Tick round_sent = -1;     // tick the round's first request left SCADA
    Tick sampled_tick = -1;   // tick the round completed
    std::vector<std::uint16_t> input_registers;
    std::vector<std::uint16_t> holding_registers;
};

struct InventorySlot {
    int x;
    int y;
    Color color;
};

enum class RequestOutcome { Pending, Ok, Exception, Timeout };

struct RequestLogEntry {
    std::uint16_t txn;
    StationId plc;
    std::uint8_t function;
    std::uint16_t address;
    Tick sent;
    int attempt;  // 0 for the first try
    RequestOutcome outcome = RequestOutcome::Pending;
    Tick completed = -1;
};

enum class WriteOutcome { Ok, Exception, Timeout };
struct WriteResult {
    WriteOutcome outcome;
    Tick tick;
    std::string detail;
};
using WriteCallback = std::function<void(const WriteResult&)>;

// Supervisory layer. Everything it knows about the plant comes from Modbus
// polls; everything it changes goes out as Modbus writes through the fabric.
class Scada {
public:
    Scada(ScadaSettings settings, std::uint32_t conn_base = 1000);

    const ScadaSettings& settings() const noexcept { return settings_; }

    // Packet delivered to the SCADA node.
    void on_packet(const net::Packet& packet, Tick now);
    // Timeouts, retries, poll rounds and the order pipeline.
    void tick(Tick now, net::Fabric& fabric);

    // Throws InvalidParameter, Unavailable or OutOfStock.
    const Order& place_order(Color color, int firing_time_ms, int milling_time_ms, Tick now);
    // Validates against the register map (UnknownParameter, OutOfBounds) and
    // queues an FC06 write with the retry policy.
    void write_parameter(StationId plc, const std::string& name, int value, WriteCallback done);

    const std::array<StationView, kStationCount>& views() const noexcept { return views_; }
    const StationView& view(StationId s) const noexcept { return views_[index_of(s)]; }
    std::vector<InventorySlot> inventory() const;
    const std::vector<Order>& orders() const noexcept { return orders_; }
    const Order* order(std::uint32_t id) const;
    const std::vector<RequestLogEntry>& request_log() const noexcept { return log_; }
    // Order status transitions since the last call, for event streams.
    std::vector<std::pair<std::uint32_t, OrderStatus>> drain_order_events();
    std::uint64_t snapshot_version() const noexcept { return version_; }

private:
    enum class JobKind { PollInput, PollHolding, Write };
    struct Job {
        JobKind kind;
        StationId plc;
        modbus::Request request;
        int attempt = 0;
        std::optional<std::uint16_t> txn;
        Tick retry_at = 0;
        std::size_t log_index = 0;
        WriteCallback done;
    };
    struct Round {
        bool active = false;
        Tick sent = -1;
        bool have_input = false;
        bool have_holding = false;
        std::vector<std::uint16_t> input;
        std::vector<std::uint16_t> holding;
    };
    struct Dispatch {
        enum class Stage { None, Params, Command, Tracking } stage = Stage::None;
        std::size_t order_index = 0;
        int params_acked = 0;
        Tick acked = -1;
        Tick started = -1;
        int base_fired = 0;
        int base_milled = 0;
        int base_sorted = 0;
    };

    std::uint64_t add_job(JobKind kind, StationId plc, modbus::Request req, WriteCallback done = {});
    void issue(Job& job, Tick now, net::Fabric& fabric);
    void finish_job(std::uint64_t id, const modbus::Completion& c);
    void fail_job(std::uint64_t id, Tick now);
    void start_round(StationId plc, Tick now);
    void commit_round(StationId plc, Tick now);
    void abort_round(StationId plc);
    void run_pipeline(Tick now);
    void advance(Order& o, OrderStatus s, Tick now);
    void fail_order(Order& o, const std::string& why, Tick now);
    int available(Color c) const;
    std::optional<std::pair<int, int>> reserve_slot(Color c) const;

    ScadaSettings settings_;
    modbus::FabricClient client_;
    std::map<std::uint64_t, Job> jobs_;
    std::map<std::uint16_t, std::uint64_t> by_txn_;
    std::uint64_t next_job_ = 1;
    std::array<StationView, kStationCount> views_{};
    std::array<Round, kStationCount> rounds_{};
    std::vector<Order> orders_;
    std::uint32_t next_order_ = 1;
    Dispatch dispatch_;
    std::vector<RequestLogEntry> log_;
    std::vector<std::pair<std::uint32_t, OrderStatus>> order_events_;
    std::uint64_t version_ = 0;
    Tick now_ = 0;
};

}  // namespace linesim::scada
