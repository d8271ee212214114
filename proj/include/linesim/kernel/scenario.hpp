#pragma once

#include "linesim/attack/engine.hpp"
#include "linesim/kernel/clock.hpp"
#include "linesim/net/fabric.hpp"
#include "linesim/net/tcp.hpp"
#include "linesim/physics/params.hpp"
#include "linesim/scada/scada.hpp"
#include "linesim/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace linesim {

inline constexpr int kScenarioSchemaVersion = 1;

enum class RunMode { Fast, Realtime };

struct Operation {
    enum class Kind { Spawn, Order, SetParam, RestartScada, Jam, Unjam };
    Tick tick = 0;
    Kind kind = Kind::Spawn;
    Color color = Color::Red;
    int firing_time_ms = 1000;
    int milling_time_ms = 1000;
    StationId station = StationId::FURNACE;
    std::string name;     // parameter name or link id
    int value = 0;
    std::optional<Tick> duration;
};

struct StoredCylinder {
    int x;
    int y;
    Color color;
};

struct CaptureSpec {
    bool enabled = false;
    bool frames = true;
    bool samples = true;
    std::string dataset;    // file name, relative to the output directory
    std::string manifest;
    std::string pcap;
};

struct BridgeSpec {
    std::string link;
    net::Endpoint listen_forward;    // receives frames travelling a -> b
    net::Endpoint listen_backward;   // receives frames travelling b -> a
    std::optional<net::Endpoint> peer_forward;   // where a -> b frames are sent
    std::optional<net::Endpoint> peer_backward;
};

struct RealSockets {
    bool plc_ports = false;
    std::string bind_host = "127.0.0.1";
    int port_offset = 0;            // added to 1502..1506
    std::vector<BridgeSpec> bridges;
};

struct ScenarioConfig {
    int schema_version = kScenarioSchemaVersion;
    std::string name = "scenario";
    std::uint64_t seed = 1;
    RunMode mode = RunMode::Fast;
    std::optional<Tick> duration;   // unbounded when empty
    int tick_ms = kDefaultTickMs;
    physics::PhysicsParams physics;
    physics::NoiseSpec noise;
    net::Topology topology = net::Topology::default_topology();
    scada::ScadaSettings scada;
    int server_capacity = 4;        // Modbus requests served per PLC per tick
    bool attack_engine = true;
    std::vector<StoredCylinder> inventory;
    std::vector<Operation> operations;
    std::vector<attack::Directive> attacks;
    CaptureSpec capture;
    RealSockets real;
    std::string config_hash;        // FNV-1a of the canonical JSON form
    nlohmann::json source;
};

// Throws ConfigInvalid("<field path>").
ScenarioConfig parse_scenario(const nlohmann::json& j);
// Throws IoError (path in message) or ConfigInvalid.
ScenarioConfig load_scenario(const std::string& path);
// Accepts a file path, or a bare name looked up as scenarios/<name>.json and
// then in $LINESIM_SCENARIOS.
std::string resolve_scenario_path(const std::string& name_or_path);

}  // namespace linesim
