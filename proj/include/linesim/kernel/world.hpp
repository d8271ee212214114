#pragma once

#include "linesim/attack/engine.hpp"
#include "linesim/kernel/clock.hpp"
#include "linesim/kernel/event_queue.hpp"
#include "linesim/kernel/rng.hpp"
#include "linesim/kernel/scenario.hpp"
#include "linesim/net/fabric.hpp"
#include "linesim/net/tcp.hpp"
#include "linesim/physics/plant.hpp"
#include "linesim/plc/plc.hpp"
#include "linesim/scada/scada.hpp"
#include "linesim/trace/recorder.hpp"

#include "json.hpp"

#include <array>
#include <atomic>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace linesim {

struct TickReport {
    Tick tick = 0;
    std::size_t events_fired = 0;
    std::size_t stations_stepped = 0;
    std::size_t plcs_scanned = 0;
    std::uint64_t state_hash = 0;

    friend bool operator==(const TickReport&, const TickReport&) = default;
};

struct OperationResult {
    Tick tick;
    std::string op;
    bool ok;
    std::string detail;
};

struct WorldOptions {
    std::string out_dir = ".";
    bool keep_records = false;     // retain trace records in memory
    bool force_recorder = false;   // record even when capture is disabled (no file)
};

// Whole-testbed simulation state. Single-threaded: other threads talk to it
// only through post(), drained at the start of each tick.
class World {
public:
    explicit World(ScenarioConfig config, WorldOptions options = {});
    ~World();
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    TickReport advance_tick();
    Tick now() const noexcept { return clock_.now(); }
    const SimClock& clock() const noexcept { return clock_; }
    const ScenarioConfig& config() const noexcept { return config_; }

    // Thread-safe; the function runs on the simulation thread at the next
    // tick boundary.
    void post(std::function<void(World&)> fn);

    // Schedules a callback on the kernel event queue (due >= now).
    std::uint64_t schedule(Tick due, std::function<void(World&)> fn);

    physics::Plant& plant() noexcept { return *plant_; }
    plc::PlcInstance& plc(StationId s) noexcept { return *plcs_[index_of(s)]; }
    const plc::PlcInstance& plc(StationId s) const noexcept { return *plcs_[index_of(s)]; }
    scada::Scada& scada() noexcept { return *scada_; }
    net::Fabric& fabric() noexcept { return *fabric_; }
    attack::Engine* attacks() noexcept { return engine_.get(); }
    trace::Recorder* recorder() noexcept { return recorder_.get(); }
    const std::vector<OperationResult>& operation_log() const noexcept { return ops_log_; }
    const std::vector<physics::PhysicsEvent>& physics_events() const noexcept { return physics_log_; }
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

    // Replaces the SCADA service with a fresh instance (in-flight requests
    // and order tracking are lost; PLC and physics state are untouched).
    void restart_scada();

    // Closes attack intervals, writes ground truth, dataset, manifest and pcap.
    void finish();
    bool finished() const noexcept { return finished_; }

    std::uint64_t state_hash() const;
    std::string dataset_path() const;
    std::string manifest_path() const;
    std::string pcap_path() const;

    // Real-socket PLC endpoints (ports actually bound).
    std::vector<std::pair<StationId, std::uint16_t>> plc_ports() const;
    // Frames handed to real-socket bridges but not yet received back.
    std::uint64_t bridged_in_flight() const;

private:
    struct ScheduledEvent {
        std::function<void(World&)> fn;
    };
    struct Bridge;

    void run_operation(const Operation& op);
    void deliver(std::vector<net::Packet> packets);
    void serve_plcs();
    void drain_external();
    void schedule_followups();
    attack::Context attack_ctx() { return {*plant_, *fabric_}; }
    void setup_real_sockets();

    ScenarioConfig config_;
    WorldOptions options_;
    SimClock clock_;
    RngPool rng_;
    EventQueue<ScheduledEvent> queue_;
    std::unique_ptr<physics::Plant> plant_;
    std::array<std::unique_ptr<plc::PlcInstance>, kStationCount> plcs_;
    std::array<physics::ActuatorImage, kStationCount> actuators_;
    std::array<std::deque<net::Packet>, kStationCount> server_queues_;
    std::unique_ptr<net::Fabric> fabric_;
    std::unique_ptr<scada::Scada> scada_;
    std::uint32_t scada_generation_ = 0;
    std::unique_ptr<attack::Engine> engine_;
    std::unique_ptr<trace::Recorder> recorder_;
    std::vector<OperationResult> ops_log_;
    std::vector<physics::PhysicsEvent> physics_log_;
    std::vector<std::string> diagnostics_;
    bool finished_ = false;

    std::mutex inbox_mu_;
    std::vector<std::function<void(World&)>> inbox_;

    std::array<std::unique_ptr<net::FrameGateway>, kStationCount> gateways_;
    std::vector<std::unique_ptr<Bridge>> bridges_;
};

struct RunOptions {
    std::string out_dir = ".";
    std::optional<RunMode> mode;            // overrides the scenario
    std::optional<std::uint64_t> seed;      // overrides the scenario
    std::optional<Tick> duration;           // overrides the scenario
    bool keep_records = false;
    std::function<void(World&, const TickReport&)> on_tick;
    std::atomic<bool>* stop = nullptr;      // cooperative cancellation
};

struct RunResult {
    Tick ticks = 0;
    double sim_seconds = 0;
    double wall_seconds = 0;
    double max_drift_ms = 0;     // realtime only: worst lateness of a tick
    double mean_drift_ms = 0;
    std::size_t orders_done = 0;
    std::size_t orders_failed = 0;
    std::size_t orders_open = 0;
    std::string dataset;
    std::string manifest;
    std::string pcap;
    std::uint64_t final_hash = 0;
    nlohmann::json attacks = nlohmann::json::array();
    nlohmann::json links = nlohmann::json::object();

    nlohmann::json to_json() const;
};

// Runs a scenario to its duration (or until stopped) and finishes the world.
RunResult run(ScenarioConfig config, const RunOptions& options);

}  // namespace linesim
