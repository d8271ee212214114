#include "linesim/kernel/scenario.hpp"
#include "linesim/error.hpp"
#include "linesim/hash.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace linesim {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path) { throw Error(ErrorKind::ConfigInvalid, path); }

const json& object_at(const json& j, const char* key, const std::string& path) {
    static const json kEmpty = json::object();
    if (!j.contains(key) || j.at(key).is_null()) return kEmpty;
    if (!j.at(key).is_object()) bad(path + key);
    return j.at(key);
}

std::int64_t get_int(const json& j, const char* key, const std::string& path, std::int64_t lo, std::int64_t hi) {
    if (!j.contains(key)) bad(path + key);
    const auto& v = j.at(key);
    if (!v.is_number_integer()) bad(path + key);
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) bad(path + key);
    return x;
}

template <typename T>
void opt_int(const json& j, const char* key, const std::string& path, T& target, std::int64_t lo, std::int64_t hi) {
    if (j.contains(key)) target = static_cast<T>(get_int(j, key, path, lo, hi));
}

void opt_double(const json& j, const char* key, const std::string& path, double& target, double lo, double hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number()) bad(path + key);
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi)) bad(path + key);
    target = x;
}

void opt_bool(const json& j, const char* key, const std::string& path, bool& target) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_boolean()) bad(path + key);
    target = j.at(key).get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key) || !j.at(key).is_string()) bad(path + key);
    return j.at(key).get<std::string>();
}

void opt_string(const json& j, const char* key, const std::string& path, std::string& target) {
    if (j.contains(key)) target = get_string(j, key, path);
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& path) {
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) bad(path + k);
    }
}

Color get_color(const json& j, const std::string& path) {
    const auto s = get_string(j, "color", path);
    auto c = parse_color(s);
    if (!c) bad(path + "color");
    return *c;
}

constexpr std::int64_t kBig = 1'000'000'000;

void parse_physics(const json& j, physics::PhysicsParams& p) {
    const std::string base = "physics.";
    reject_unknown(j, {"vc", "warehouse", "mpu", "sorting", "color"}, base);
    const auto& vc = object_at(j, "vc", base);
    const std::string vp = base + "vc.";
    reject_unknown(vc, {"horizontal_rate", "vertical_rate", "rotation_rate"}, vp);
    opt_int(vc, "horizontal_rate", vp, p.vc.horizontal_rate, 1, kBig);
    opt_int(vc, "vertical_rate", vp, p.vc.vertical_rate, 1, kBig);
    opt_int(vc, "rotation_rate", vp, p.vc.rotation_rate, 1, kBig);

    const auto& wh = object_at(j, "warehouse", base);
    const std::string wp = base + "warehouse.";
    reject_unknown(wh, {"columns", "rows", "belt_rate", "x_rate", "y_rate"}, wp);
    // The warehouse register map has exactly nine inventory registers.
    opt_int(wh, "columns", wp, p.warehouse.columns, 3, 3);
    opt_int(wh, "rows", wp, p.warehouse.rows, 3, 3);
    opt_int(wh, "belt_rate", wp, p.warehouse.belt_rate, 1, kBig);
    opt_int(wh, "x_rate", wp, p.warehouse.x_rate, 1, kBig);
    opt_int(wh, "y_rate", wp, p.warehouse.y_rate, 1, kBig);

    const auto& mpu = object_at(j, "mpu", base);
    const std::string mp = base + "mpu.";
    reject_unknown(mpu, {"platform_travel_ticks", "transport_rate"}, mp);
    opt_int(mpu, "platform_travel_ticks", mp, p.mpu.platform_travel_ticks, 1, kBig);
    opt_int(mpu, "transport_rate", mp, p.mpu.transport_rate, 1, kBig);

    const auto& so = object_at(j, "sorting", base);
    const std::string sp = base + "sorting.";
    reject_unknown(so, {"belt_rate"}, sp);
    opt_int(so, "belt_rate", sp, p.sorting.belt_rate, 1, kBig);

    const auto& co = object_at(j, "color", base);
    const std::string cp = base + "color.";
    reject_unknown(co, {"baseline", "white", "red", "blue"}, cp);
    opt_int(co, "baseline", cp, p.color.baseline, 0, 4095);
    opt_int(co, "white", cp, p.color.nominal[0], 0, 4095);
    opt_int(co, "red", cp, p.color.nominal[1], 0, 4095);
    opt_int(co, "blue", cp, p.color.nominal[2], 0, 4095);
}

void apply_link(const json& lj, const std::string& path, net::LinkSpec& l) {
    opt_double(lj, "latency_ms", path, l.latency_ms, 0, 1e9);
    opt_double(lj, "bandwidth_bytes_per_s", path, l.bandwidth_bytes_per_s, 1e-9, 1e15);
    opt_double(lj, "loss_prob", path, l.loss_prob, 0, 1);
}

void parse_network(const json& j, net::Topology& topo) {
    const std::string base = "network.";
    reject_unknown(j, {"default", "links"}, base);
    const auto& def = object_at(j, "default", base);
    reject_unknown(def, {"latency_ms", "bandwidth_bytes_per_s", "loss_prob"}, base + "default.");
    for (auto& l : topo.links) apply_link(def, base + "default.", l);
    if (!j.contains("links")) return;
    if (!j.at("links").is_array()) bad(base + "links");
    for (std::size_t i = 0; i < j.at("links").size(); ++i) {
        const auto& lj = j.at("links")[i];
        const std::string path = base + "links[" + std::to_string(i) + "].";
        if (!lj.is_object()) bad(path.substr(0, path.size() - 1));
        reject_unknown(lj, {"id", "latency_ms", "bandwidth_bytes_per_s", "loss_prob"}, path);
        const auto id = get_string(lj, "id", path);
        net::LinkSpec* target = nullptr;
        for (auto& l : topo.links) {
            if (l.id == id) target = &l;
        }
        if (!target) bad(path + "id");
        apply_link(lj, path, *target);
    }
}

Operation parse_operation(const json& j, const std::string& path, const net::Topology& topo) {
    if (!j.is_object()) bad(path);
    const std::string p = path + ".";
    Operation op;
    op.tick = get_int(j, "tick", p, 0, INT64_MAX);
    const auto kind = get_string(j, "op", p);
    if (kind == "spawn") {
        reject_unknown(j, {"tick", "op", "color"}, p);
        op.kind = Operation::Kind::Spawn;
        op.color = get_color(j, p);
    } else if (kind == "order") {
        reject_unknown(j, {"tick", "op", "color", "firing_time_ms", "milling_time_ms"}, p);
        op.kind = Operation::Kind::Order;
        op.color = get_color(j, p);
        opt_int(j, "firing_time_ms", p, op.firing_time_ms, INT32_MIN, INT32_MAX);
        opt_int(j, "milling_time_ms", p, op.milling_time_ms, INT32_MIN, INT32_MAX);
    } else if (kind == "set_param") {
        reject_unknown(j, {"tick", "op", "plc", "name", "value"}, p);
        op.kind = Operation::Kind::SetParam;
        auto s = parse_station(get_string(j, "plc", p));
        if (!s) bad(p + "plc");
        op.station = *s;
        op.name = get_string(j, "name", p);
        op.value = static_cast<int>(get_int(j, "value", p, INT32_MIN, INT32_MAX));
    } else if (kind == "restart_scada") {
        reject_unknown(j, {"tick", "op"}, p);
        op.kind = Operation::Kind::RestartScada;
    } else if (kind == "jam" || kind == "unjam") {
        reject_unknown(j, {"tick", "op", "link", "duration_ticks"}, p);
        op.kind = kind == "jam" ? Operation::Kind::Jam : Operation::Kind::Unjam;
        op.name = get_string(j, "link", p);
        if (!topo.find_link(op.name)) bad(p + "link");
        if (j.contains("duration_ticks")) op.duration = get_int(j, "duration_ticks", p, 0, INT64_MAX);
    } else {
        bad(p + "op");
    }
    return op;
}

net::Endpoint endpoint(const json& j, const char* key, const std::string& path) {
    const auto& v = j.at(key);
    if (v.is_number_integer()) {
        net::Endpoint ep;
        ep.port = static_cast<std::uint16_t>(get_int(j, key, path, 0, 65535));
        return ep;
    }
    if (!v.is_string()) bad(path + key);
    try {
        return net::Endpoint::parse(v.get<std::string>());
    } catch (const Error&) {
        bad(path + key);
    }
}

}  // namespace

ScenarioConfig parse_scenario(const json& j) {
    if (!j.is_object()) bad("$");
    reject_unknown(j, {"schema_version", "name", "seed", "run_mode", "duration_ticks", "tick_ms", "physics", "noise",
                       "network", "scada", "plc", "attack_engine", "initial_inventory", "operations",
                       "attack_script", "capture", "real_sockets", "description"},
                   "");
    ScenarioConfig c;
    c.source = j;
    if (!j.contains("schema_version")) bad("schema_version");
    c.schema_version = static_cast<int>(get_int(j, "schema_version", "", kScenarioSchemaVersion, kScenarioSchemaVersion));
    opt_string(j, "name", "", c.name);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) bad("seed");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("run_mode")) {
        const auto m = get_string(j, "run_mode", "");
        if (m == "fast") c.mode = RunMode::Fast;
        else if (m == "realtime") c.mode = RunMode::Realtime;
        else bad("run_mode");
    }
    if (j.contains("duration_ticks") && !j.at("duration_ticks").is_null()) {
        c.duration = get_int(j, "duration_ticks", "", 1, INT64_MAX);
    }
    opt_int(j, "tick_ms", "", c.tick_ms, 1, 60000);

    parse_physics(object_at(j, "physics", ""), c.physics);

    const auto& noise = object_at(j, "noise", "");
    reject_unknown(noise, {"timing_jitter_ticks", "color_sensor_std"}, "noise.");
    opt_double(noise, "timing_jitter_ticks", "noise.", c.noise.timing_jitter_ticks, 0, 1e6);
    opt_double(noise, "color_sensor_std", "noise.", c.noise.color_sensor_std, 0, 1e6);

    parse_network(object_at(j, "network", ""), c.topology);

    const auto& sc = object_at(j, "scada", "");
    reject_unknown(sc, {"poll_period_ticks", "timeout_ticks", "retries", "backoff_ticks", "order_timeout_ticks"}, "scada.");
    opt_int(sc, "poll_period_ticks", "scada.", c.scada.poll_period_ticks, 1, kBig);
    opt_int(sc, "timeout_ticks", "scada.", c.scada.timeout_ticks, 1, kBig);
    opt_int(sc, "retries", "scada.", c.scada.retries, 0, 1000);
    opt_int(sc, "backoff_ticks", "scada.", c.scada.backoff_ticks, 0, kBig);
    opt_int(sc, "order_timeout_ticks", "scada.", c.scada.order_timeout_ticks, 1, kBig);

    const auto& plc = object_at(j, "plc", "");
    reject_unknown(plc, {"server_capacity"}, "plc.");
    opt_int(plc, "server_capacity", "plc.", c.server_capacity, 1, kBig);
    opt_bool(j, "attack_engine", "", c.attack_engine);

    if (j.contains("initial_inventory")) {
        const auto& inv = j.at("initial_inventory");
        if (!inv.is_array()) bad("initial_inventory");
        std::set<std::pair<int, int>> used;
        for (std::size_t i = 0; i < inv.size(); ++i) {
            const std::string p = "initial_inventory[" + std::to_string(i) + "].";
            if (!inv[i].is_object()) bad(p.substr(0, p.size() - 1));
            reject_unknown(inv[i], {"x", "y", "color"}, p);
            StoredCylinder s{static_cast<int>(get_int(inv[i], "x", p, 1, c.physics.warehouse.columns)),
                             static_cast<int>(get_int(inv[i], "y", p, 1, c.physics.warehouse.rows)), get_color(inv[i], p)};
            if (!used.insert({s.x, s.y}).second) bad(p + "x");
            c.inventory.push_back(s);
        }
    }

    if (j.contains("operations")) {
        const auto& ops = j.at("operations");
        if (!ops.is_array()) bad("operations");
        for (std::size_t i = 0; i < ops.size(); ++i) {
            c.operations.push_back(parse_operation(ops[i], "operations[" + std::to_string(i) + "]", c.topology));
        }
    }

    if (j.contains("attack_script")) c.attacks = attack::parse_script(j.at("attack_script"), c.topology);

    const auto& cap = object_at(j, "capture", "");
    reject_unknown(cap, {"enabled", "frames", "samples", "dataset", "manifest", "pcap"}, "capture.");
    c.capture.enabled = j.contains("capture") && !j.at("capture").is_null();
    opt_bool(cap, "enabled", "capture.", c.capture.enabled);
    opt_bool(cap, "frames", "capture.", c.capture.frames);
    opt_bool(cap, "samples", "capture.", c.capture.samples);
    c.capture.dataset = c.name + ".jsonl";
    c.capture.manifest = c.name + ".manifest.json";
    opt_string(cap, "dataset", "capture.", c.capture.dataset);
    opt_string(cap, "manifest", "capture.", c.capture.manifest);
    opt_string(cap, "pcap", "capture.", c.capture.pcap);

    const auto& rs = object_at(j, "real_sockets", "");
    reject_unknown(rs, {"plc_ports", "bind", "port_offset", "bridges"}, "real_sockets.");
    opt_bool(rs, "plc_ports", "real_sockets.", c.real.plc_ports);
    opt_string(rs, "bind", "real_sockets.", c.real.bind_host);
    opt_int(rs, "port_offset", "real_sockets.", c.real.port_offset, -1502, 60000);
    if (rs.contains("bridges")) {
        if (!rs.at("bridges").is_array()) bad("real_sockets.bridges");
        for (std::size_t i = 0; i < rs.at("bridges").size(); ++i) {
            const auto& bj = rs.at("bridges")[i];
            const std::string p = "real_sockets.bridges[" + std::to_string(i) + "].";
            if (!bj.is_object()) bad(p.substr(0, p.size() - 1));
            reject_unknown(bj, {"link", "listen_forward", "listen_backward", "peer_forward", "peer_backward"}, p);
            BridgeSpec b;
            b.link = get_string(bj, "link", p);
            if (!c.topology.find_link(b.link)) bad(p + "link");
            if (!bj.contains("listen_forward")) bad(p + "listen_forward");
            if (!bj.contains("listen_backward")) bad(p + "listen_backward");
            b.listen_forward = endpoint(bj, "listen_forward", p);
            b.listen_backward = endpoint(bj, "listen_backward", p);
            if (bj.contains("peer_forward")) b.peer_forward = endpoint(bj, "peer_forward", p);
            if (bj.contains("peer_backward")) b.peer_backward = endpoint(bj, "peer_backward", p);
            c.real.bridges.push_back(b);
        }
    }

    c.config_hash = hex64(fnv1a(j.dump()));
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read scenario " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, path + ": " + e.what());
    }
    return parse_scenario(j);
}

std::string resolve_scenario_path(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(name_or_path)) return name_or_path;
    std::vector<std::string> candidates{name_or_path + ".json", "scenarios/" + name_or_path + ".json"};
    if (const char* dir = std::getenv("LINESIM_SCENARIOS")) {
        candidates.push_back((fs::path(dir) / (name_or_path + ".json")).string());
    }
    for (const auto& candidate : candidates) {
        if (fs::is_regular_file(candidate)) return candidate;
    }
    return name_or_path;
}

}  // namespace linesim
