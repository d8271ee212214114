#include "linesim/kernel/world.hpp"
#include "linesim/error.hpp"
#include "linesim/hash.hpp"
#include "linesim/modbus/frame.hpp"
#include "linesim/trace/pcap.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

namespace linesim {

using nlohmann::json;

namespace {

constexpr std::uint32_t kExternalConnShift = 24;

std::string join(const std::string& dir, const std::string& file) {
    if (file.empty()) return {};
    return (std::filesystem::path(dir) / file).string();
}

}  // namespace

// Carries one fabric link over host TCP. Frames leave through a client
// socket to the configured peer and come back through our listener for that
// direction; packet metadata travels in a side table keyed by MBAP
// transaction id so the wire carries plain Modbus.
struct World::Bridge {
    std::string link;
    std::array<std::unique_ptr<net::FrameGateway>, 2> listeners;  // [0] forward, [1] backward
    std::array<net::Endpoint, 2> peers;
    std::array<net::Socket, 2> senders;
    std::array<std::map<std::uint16_t, std::deque<net::Packet>>, 2> meta;
    std::array<std::uint64_t, 2> sent{{0, 0}};

    void send(net::Packet packet, bool forward) {
        const int d = forward ? 0 : 1;
        auto& sock = senders[d];
        if (!sock.valid()) sock = net::Socket::connect(peers[d], std::chrono::milliseconds(2000));
        const auto decoded = modbus::decode_one(packet.bytes);
        const std::uint16_t txn = decoded ? decoded->frame.transaction_id : 0;
        const auto bytes = packet.bytes;
        meta[d][txn].push_back(std::move(packet));
        ++sent[d];
        if (!sock.send_all(bytes.data(), bytes.size())) throw Error(ErrorKind::IoError, "bridge " + link + " send failed");
    }

    std::uint64_t in_flight() const {
        return sent[0] + sent[1] - listeners[0]->received() - listeners[1]->received();
    }
};

World::World(ScenarioConfig config, WorldOptions options)
    : config_(std::move(config)),
      options_(std::move(options)),
      clock_(config_.tick_ms),
      rng_(config_.seed) {
    plant_ = std::make_unique<physics::Plant>(config_.physics, config_.noise, rng_);
    for (auto s : kAllStations) {
        const auto port = static_cast<std::uint16_t>(plc::default_port(s) + config_.real.port_offset);
        plcs_[index_of(s)] = std::make_unique<plc::PlcInstance>(s, config_.physics, config_.tick_ms, 1, port);
        actuators_[index_of(s)] = physics::ActuatorImage::zero(s);
    }
    for (const auto& item : config_.inventory) {
        plant_->place_in_rack(item.x, item.y, item.color);
        plcs_[index_of(StationId::WAREHOUSE)]->preset_holding(
            plc::hr::kInventory + static_cast<std::size_t>((item.y - 1) * 3 + (item.x - 1)),
            static_cast<std::uint16_t>(color_code(item.color)));
    }
    fabric_ = std::make_unique<net::Fabric>(config_.topology, config_.tick_ms, rng_);
    scada_ = std::make_unique<scada::Scada>(config_.scada);
    if (config_.attack_engine) engine_ = std::make_unique<attack::Engine>(config_.attacks);

    if (config_.capture.enabled || options_.force_recorder || options_.keep_records) {
        trace::DatasetHeader header;
        header.tick_ms = config_.tick_ms;
        header.scenario = config_.name;
        header.seed = config_.seed;
        header.config_hash = config_.config_hash;
        header.variables = trace::process_variables(config_.physics);
        trace::CaptureOptions opts;
        opts.frames = config_.capture.frames;
        opts.samples = config_.capture.samples;
        opts.keep_in_memory = options_.keep_records;
        if (config_.capture.enabled && !config_.capture.dataset.empty()) {
            std::filesystem::create_directories(options_.out_dir);
            opts.dataset_path = dataset_path();
        }
        recorder_ = std::make_unique<trace::Recorder>(std::move(header), std::move(opts));
        fabric_->set_ingress_tap(net::kSwitch, [this](const net::Packet& p, Tick now, const std::string& link) {
            recorder_->frame(now, p, link);
        });
        for (auto s : kAllStations) {
            recorder_->samples(0, plant_->read_sensors(s, 0), plcs_[index_of(s)]->state_code());
        }
    }

    for (const auto& op : config_.operations) {
        queue_.schedule(0, op.tick, {[op](World& w) { w.run_operation(op); }});
    }
    if (engine_) {
        for (const auto& [due, idx] : engine_->initial_schedule()) {
            const auto i = idx;
            queue_.schedule(0, due, {[i](World& w) { w.engine_->activate(i, w.now(), w.attack_ctx()); }});
        }
    }
    setup_real_sockets();
}

World::~World() {
    for (auto& g : gateways_) {
        if (g) g->stop();
    }
    for (auto& b : bridges_) {
        for (auto& l : b->listeners) {
            if (l) l->stop();
        }
    }
}

void World::setup_real_sockets() {
    if (config_.real.plc_ports) {
        for (auto s : kAllStations) {
            net::Endpoint ep{config_.real.bind_host, plcs_[index_of(s)]->port()};
            gateways_[index_of(s)] = std::make_unique<net::FrameGateway>(ep);
        }
    }
    for (const auto& spec : config_.real.bridges) {
        auto b = std::make_unique<Bridge>();
        b->link = spec.link;
        b->listeners[0] = std::make_unique<net::FrameGateway>(spec.listen_forward);
        b->listeners[1] = std::make_unique<net::FrameGateway>(spec.listen_backward);
        b->peers[0] = spec.peer_forward.value_or(net::Endpoint{"127.0.0.1", b->listeners[0]->port()});
        b->peers[1] = spec.peer_backward.value_or(net::Endpoint{"127.0.0.1", b->listeners[1]->port()});
        auto* raw = b.get();
        fabric_->set_bridge(spec.link, [raw](net::Packet p, bool forward, Tick) { raw->send(std::move(p), forward); });
        bridges_.push_back(std::move(b));
    }
}

std::vector<std::pair<StationId, std::uint16_t>> World::plc_ports() const {
    std::vector<std::pair<StationId, std::uint16_t>> out;
    for (auto s : kAllStations) {
        if (gateways_[index_of(s)]) out.emplace_back(s, gateways_[index_of(s)]->port());
    }
    return out;
}

std::uint64_t World::bridged_in_flight() const {
    std::uint64_t n = 0;
    for (const auto& b : bridges_) n += b->in_flight();
    return n;
}

void World::post(std::function<void(World&)> fn) {
    std::lock_guard lk(inbox_mu_);
    inbox_.push_back(std::move(fn));
}

std::uint64_t World::schedule(Tick due, std::function<void(World&)> fn) {
    return queue_.schedule(now(), due, {std::move(fn)});
}

void World::restart_scada() {
    ++scada_generation_;
    scada_ = std::make_unique<scada::Scada>(config_.scada, 1000 + scada_generation_ * 100);
}

void World::run_operation(const Operation& op) {
    const Tick t = now();
    try {
        switch (op.kind) {
            case Operation::Kind::Spawn: {
                const auto id = plant_->spawn(op.color, t);
                ops_log_.push_back({t, "spawn", true, "cylinder " + std::to_string(id)});
                break;
            }
            case Operation::Kind::Order: {
                const auto& o = scada_->place_order(op.color, op.firing_time_ms, op.milling_time_ms, t);
                ops_log_.push_back({t, "order", true, "order " + std::to_string(o.id)});
                break;
            }
            case Operation::Kind::SetParam: {
                const std::string what = std::string(to_string(op.station)) + "." + op.name;
                scada_->write_parameter(op.station, op.name, op.value, [this, what](const scada::WriteResult& r) {
                    ops_log_.push_back({r.tick, "set_param", r.outcome == scada::WriteOutcome::Ok, what + " " + r.detail});
                });
                break;
            }
            case Operation::Kind::RestartScada:
                restart_scada();
                ops_log_.push_back({t, "restart_scada", true, ""});
                break;
            case Operation::Kind::Jam:
                fabric_->set_jam(op.name, true, op.duration, t);
                ops_log_.push_back({t, "jam", true, op.name});
                break;
            case Operation::Kind::Unjam:
                fabric_->set_jam(op.name, false, std::nullopt, t);
                ops_log_.push_back({t, "unjam", true, op.name});
                break;
        }
    } catch (const Error& e) {
        ops_log_.push_back({t, op.kind == Operation::Kind::Order ? "order" : "operation", false, e.what()});
    }
}

void World::drain_external() {
    std::vector<std::function<void(World&)>> work;
    {
        std::lock_guard lk(inbox_mu_);
        work.swap(inbox_);
    }
    for (auto& fn : work) fn(*this);

    const Tick t = now();
    for (auto s : kAllStations) {
        auto& g = gateways_[index_of(s)];
        if (!g) continue;
        for (auto& in : g->drain()) {
            const std::uint32_t conn = static_cast<std::uint32_t>(index_of(s)) << kExternalConnShift | in.conn;
            fabric_->send(net::Packet{net::kExternal, std::string(to_string(s)), conn, std::move(in.bytes), t}, t);
        }
    }

    if (!bridges_.empty() && config_.mode == RunMode::Fast) {
        // Fast mode has no wall-clock budget for real links; wait for frames
        // still on the wire so runs stay reproducible.
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
        while (bridged_in_flight() > 0 && std::chrono::steady_clock::now() < deadline) {
            std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
    }
    for (auto& b : bridges_) {
        for (int d = 0; d < 2; ++d) {
            for (auto& in : b->listeners[d]->drain()) {
                const auto decoded = modbus::decode_one(in.bytes);
                const std::uint16_t txn = decoded ? decoded->frame.transaction_id : 0;
                auto it = b->meta[d].find(txn);
                if (it == b->meta[d].end() || it->second.empty()) {
                    diagnostics_.push_back("tick " + std::to_string(t) + ": bridge " + b->link + " dropped unmatched frame");
                    continue;
                }
                net::Packet p = std::move(it->second.front());
                it->second.pop_front();
                if (it->second.empty()) b->meta[d].erase(it);
                p.bytes = std::move(in.bytes);  // whatever arrived, possibly altered in transit
                fabric_->inject_arrival(b->link, d == 0, std::move(p), t);
            }
        }
    }
}

void World::deliver(std::vector<net::Packet> packets) {
    const Tick t = now();
    for (auto& p : packets) {
        if (auto s = parse_station(p.dst)) {
            server_queues_[index_of(*s)].push_back(std::move(p));
        } else if (p.dst == net::kScada) {
            scada_->on_packet(p, t);
        } else if (p.dst == net::kAttacker) {
            if (engine_) engine_->on_packet(p, t);
        } else if (p.dst == net::kExternal) {
            const auto s = parse_station(p.src);
            if (!s) continue;
            auto& g = gateways_[index_of(*s)];
            if (g) g->reply(p.conn & ((1u << kExternalConnShift) - 1), p.bytes);
        }
    }
}

void World::serve_plcs() {
    const Tick t = now();
    for (auto s : kAllStations) {
        auto& q = server_queues_[index_of(s)];
        auto& plc = *plcs_[index_of(s)];
        for (int served = 0; served < config_.server_capacity && !q.empty(); ++served) {
            net::Packet req = std::move(q.front());
            q.pop_front();
            const auto decoded = modbus::decode_one(req.bytes);
            if (!decoded || decoded->status != modbus::FrameStatus::Ok) continue;
            const auto resp = plc.handle_request(decoded->frame);
            fabric_->send(net::Packet{req.dst, req.src, req.conn, modbus::encode(resp), t}, t);
        }
    }
}

void World::schedule_followups() {
    if (!engine_) return;
    for (const auto& f : engine_->drain_followups()) {
        const auto i = f.index;
        if (f.restore) {
            queue_.schedule(now(), f.due, {[i](World& w) { w.engine_->restore(i, w.now(), w.attack_ctx()); }});
        } else {
            queue_.schedule(now(), f.due, {[i](World& w) { w.engine_->activate(i, w.now(), w.attack_ctx()); }});
        }
    }
}

TickReport World::advance_tick() {
    if (finished_) throw Error(ErrorKind::InvalidParameter, "world already finished");
    clock_.advance();
    const Tick t = now();
    TickReport rep;
    rep.tick = t;

    drain_external();
    for (auto& p : plcs_) p->apply_pending_writes();

    fabric_->begin_tick(t);
    while (queue_.has_due(t)) {
        auto e = queue_.pop();
        e.payload.fn(*this);
        ++rep.events_fired;
        schedule_followups();
    }
    if (engine_) engine_->pump(t, attack_ctx());

    deliver(fabric_->advance(t));
    serve_plcs();

    for (auto s : kAllStations) {
        auto& plc = *plcs_[index_of(s)];
        if (!plc.scan_due(t)) continue;
        const auto& out = plc.scan(plant_->read_sensors(s, t));
        if (out.station != s) {
            std::fprintf(stderr, "fatal: PLC %s produced outputs for another station\n", std::string(to_string(s)).c_str());
            std::abort();
        }
        actuators_[index_of(s)] = out;
        ++rep.plcs_scanned;
        for (auto& d : plc.drain_diagnostics()) diagnostics_.push_back("tick " + std::to_string(t) + ": " + d);
    }

    for (auto s : kAllStations) {
        plant_->step(s, actuators_[index_of(s)], t);
        ++rep.stations_stepped;
    }
    auto events = plant_->drain_events();

    scada_->tick(t, *fabric_);
    if (engine_) {
        engine_->end_tick(t, events, attack_ctx());
        schedule_followups();
    }
    physics_log_.insert(physics_log_.end(), events.begin(), events.end());

    auto link_events = fabric_->drain_events();
    if (recorder_) {
        for (auto s : kAllStations) recorder_->samples(t, plant_->read_sensors(s, t), plcs_[index_of(s)]->state_code());
        for (const auto& ev : link_events) recorder_->link_event(ev);
    }

    rep.state_hash = state_hash();
    return rep;
}

std::uint64_t World::state_hash() const {
    Fnv1a h;
    h.i64(now());
    h.u64(plant_->state_hash());
    for (const auto& p : plcs_) h.u64(p->state_hash());
    h.u64(fabric_->state_hash());
    h.u64(queue_.size());
    return h.value();
}

std::string World::dataset_path() const {
    return config_.capture.enabled ? join(options_.out_dir, config_.capture.dataset) : std::string();
}
std::string World::manifest_path() const {
    return config_.capture.enabled ? join(options_.out_dir, config_.capture.manifest) : std::string();
}
std::string World::pcap_path() const {
    return config_.capture.enabled ? join(options_.out_dir, config_.capture.pcap) : std::string();
}

void World::finish() {
    if (finished_) return;
    finished_ = true;
    const Tick t = now();
    json truth = json::array();
    if (engine_) {
        engine_->finish(t);
        for (const auto& g : engine_->ground_truth()) {
            if (recorder_) recorder_->ground_truth(t, {g.label, g.kind, g.target, g.start, g.end});
            truth.push_back({{"label", g.label}, {"attack", g.kind}, {"target", g.target}, {"start", g.start}, {"end", g.end}});
        }
    }
    if (!recorder_) return;
    recorder_->close();
    if (!config_.capture.enabled) return;

    json m;
    m["schema_version"] = trace::kSchemaVersion;
    m["scenario"] = config_.name;
    m["seed"] = config_.seed;
    m["config_hash"] = config_.config_hash;
    m["tick_ms"] = config_.tick_ms;
    m["ticks"] = t;
    m["dataset"] = config_.capture.dataset;
    m["dataset_fnv1a"] = hex64(recorder_->content_hash());
    m["records"] = recorder_->record_count();
    m["ground_truth"] = truth;
    json attacks = json::array();
    if (engine_) {
        for (const auto& r : engine_->reports()) attacks.push_back({{"label", r.label}, {"kind", r.kind}, {"status", r.status}});
    }
    m["attacks"] = attacks;
    m["scenario_config"] = config_.source;
    if (!config_.capture.manifest.empty()) {
        std::ofstream out(manifest_path(), std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + manifest_path());
        out << m.dump(2) << '\n';
        if (!out) throw Error(ErrorKind::IoError, "write failed: " + manifest_path());
    }
    if (!config_.capture.pcap.empty() && !config_.capture.dataset.empty()) {
        trace::export_pcap(trace::load_dataset(dataset_path()), pcap_path());
    }
}

json RunResult::to_json() const {
    json j;
    j["ticks"] = ticks;
    j["sim_seconds"] = sim_seconds;
    j["wall_seconds"] = wall_seconds;
    j["max_drift_ms"] = max_drift_ms;
    j["mean_drift_ms"] = mean_drift_ms;
    j["orders"] = {{"done", orders_done}, {"failed", orders_failed}, {"open", orders_open}};
    j["dataset"] = dataset;
    j["manifest"] = manifest;
    j["pcap"] = pcap;
    j["final_state_hash"] = hex64(final_hash);
    j["attacks"] = attacks;
    j["links"] = links;
    return j;
}

RunResult run(ScenarioConfig config, const RunOptions& options) {
    if (options.mode) config.mode = *options.mode;
    if (options.seed) config.seed = *options.seed;
    if (options.duration) config.duration = *options.duration;
    WorldOptions wo;
    wo.out_dir = options.out_dir;
    wo.keep_records = options.keep_records;
    World world(std::move(config), wo);
    const auto& cfg = world.config();

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const auto tick_len = std::chrono::microseconds(static_cast<long>(cfg.tick_ms) * 1000);
    double drift_sum = 0;
    RunResult res;
    while (!cfg.duration || world.now() < *cfg.duration) {
        if (options.stop && options.stop->load()) break;
        const auto rep = world.advance_tick();
        if (options.on_tick) options.on_tick(world, rep);
        if (cfg.mode == RunMode::Realtime) {
            const auto target = start + tick_len * rep.tick;
            const auto late = clock::now() - target;
            const double late_ms = std::chrono::duration<double, std::milli>(late).count();
            if (late_ms > 0) {
                drift_sum += late_ms;
                res.max_drift_ms = std::max(res.max_drift_ms, late_ms);
            }
            std::this_thread::sleep_until(target);
        }
    }
    world.finish();
    res.ticks = world.now();
    res.sim_seconds = static_cast<double>(res.ticks) * cfg.tick_ms / 1000.0;
    res.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    res.mean_drift_ms = res.ticks > 0 ? drift_sum / static_cast<double>(res.ticks) : 0;
    for (const auto& o : world.scada().orders()) {
        if (o.status == scada::OrderStatus::Done) ++res.orders_done;
        else if (o.status == scada::OrderStatus::Failed) ++res.orders_failed;
        else ++res.orders_open;
    }
    res.dataset = world.dataset_path();
    res.manifest = world.manifest_path();
    res.pcap = world.pcap_path();
    res.final_hash = world.state_hash();
    if (auto* e = world.attacks()) {
        for (const auto& r : e->reports()) {
            json a{{"label", r.label}, {"kind", r.kind}, {"status", r.status}, {"frames_sent", r.frames_sent},
                   {"exceptions", r.exceptions}, {"timeouts", r.timeouts}, {"detail", r.detail}};
            if (r.start) a["start"] = *r.start;
            if (r.end) a["end"] = *r.end;
            res.attacks.push_back(a);
        }
    }
    for (const auto& l : cfg.topology.links) {
        const auto& s = world.fabric().stats(l.id);
        json windows = json::array();
        for (const auto& [a, b] : s.jam_windows) windows.push_back({a, b});
        res.links[l.id] = {{"sent", s.sent}, {"delivered", s.delivered}, {"dropped_loss", s.dropped_loss},
                           {"dropped_jam", s.dropped_jam}, {"bytes_delivered", s.bytes_delivered}, {"jam_windows", windows}};
    }
    return res;
}

}  // namespace linesim
