#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/modbus/client.hpp"
#include "linesim/net/fabric.hpp"
#include "linesim/physics/plant.hpp"
#include "linesim/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace linesim::attack {

enum class Kind { RemoveCylinder, BlockGripper, CommandInject, ModbusScan, JamLink };
std::string_view to_string(Kind k) noexcept;

struct Trigger {
    std::optional<Tick> at_tick;
    std::string on;                      // physics event kind, e.g. "furnace_fired"
    std::optional<StationId> station;    // optional filter on the event's station
    int occurrence = 1;                  // n-th matching event
    Tick delay = 0;
};

struct Directive {
    Kind kind = Kind::JamLink;
    Trigger trigger;
    std::string target;   // station for physical and Modbus attacks, link id for jams
    std::string label;

    // remove_cylinder
    std::optional<CylinderId> cylinder;
    // block_gripper, jam_link
    Tick duration = 0;
    // command_inject
    std::uint16_t address = 0;
    std::uint16_t value = 0;
    std::uint8_t function = 0x06;
    std::optional<Tick> restore_after;
    std::uint16_t restore_value = 0;
    // modbus_scan
    std::uint16_t scan_start = 0;
    std::uint16_t scan_end = 0;
    std::vector<std::uint8_t> scan_functions{0x03};
    int rate = 1;
};

// Parses attack_script[index]; throws ConfigInvalid("attack_script[i].field").
Directive parse_directive(const nlohmann::json& j, std::size_t index, const net::Topology& topo);
std::vector<Directive> parse_script(const nlohmann::json& script, const net::Topology& topo);

struct GroundTruth {
    std::string label;
    std::string kind;
    std::string target;
    Tick start = 0;
    Tick end = 0;   // inclusive
};

struct DirectiveReport {
    std::string label;
    std::string kind;
    std::string status = "pending";  // pending, active, done, not_triggered, failed
    std::optional<Tick> start;
    std::optional<Tick> end;
    std::uint64_t frames_sent = 0;
    std::uint64_t exceptions = 0;
    std::uint64_t timeouts = 0;
    std::string detail;
};

struct Context {
    physics::Plant& plant;
    net::Fabric& fabric;
};

// Executes directives through the same interfaces a real attacker has: the
// physical injection API, a Modbus client on the attacker node, jam control.
class Engine {
public:
    explicit Engine(std::vector<Directive> directives);

    const std::vector<Directive>& directives() const noexcept { return directives_; }

    // Absolute-tick activations to schedule at start: (due tick, directive index).
    std::vector<std::pair<Tick, std::size_t>> initial_schedule() const;

    // Runs a scheduled activation (absolute tick, predicate delay, or restore).
    void activate(std::size_t index, Tick now, Context ctx);
    void restore(std::size_t index, Tick now, Context ctx);
    // Sends this tick's share of every running scan.
    void pump(Tick now, Context ctx);
    void on_packet(const net::Packet& packet, Tick now);

    struct Followup {
        Tick due;
        std::size_t index;
        bool restore;
    };
    // Evaluates predicates on this tick's physics events and collects
    // responses. Delay-0 predicate triggers run immediately.
    void end_tick(Tick now, const std::vector<physics::PhysicsEvent>& events, Context ctx);
    // Activations and restores the kernel must schedule.
    std::vector<Followup> drain_followups();

    // Called once at the end of a run: closes open intervals and marks
    // predicate directives that never fired.
    void finish(Tick now);

    // Merged per (kind, target); overlapping intervals are joined.
    std::vector<GroundTruth> ground_truth() const;
    const std::vector<DirectiveReport>& reports() const noexcept { return reports_; }

private:
    struct ScanState {
        std::size_t next = 0;    // position in (function, address) sequence
        std::size_t total = 0;
        Tick last_send = -1;
    };
    struct Live {
        std::vector<std::uint16_t> txns;
        int outstanding = 0;
        bool sending_done = false;
        Tick last_event = -1;
        std::optional<CylinderId> event_cylinder;
        int matches = 0;
        bool fired = false;
        ScanState scan;
    };

    void close_if_done(std::size_t index);
    void execute(std::size_t index, Tick now, Context ctx);
    void pump_one(std::size_t index, Tick now, Context ctx);

    std::vector<Directive> directives_;
    std::vector<DirectiveReport> reports_;
    std::vector<Live> live_;
    std::map<std::uint16_t, std::size_t> txn_owner_;
    std::vector<Followup> followups_;
    modbus::FabricClient client_;
};

}  // namespace linesim::attack
