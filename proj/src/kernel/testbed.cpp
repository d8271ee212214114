#include "linesim/kernel/testbed.hpp"
#include "linesim/physics/schema.hpp"
#include "linesim/plc/register_map.hpp"

namespace linesim {

using nlohmann::json;

json order_json(const scada::Order& o) {
    json history = json::array();
    for (const auto& [s, t] : o.history) history.push_back({{"status", std::string(scada::to_string(s))}, {"tick", t}});
    json j{{"id", o.id},
           {"color", std::string(to_string(o.color))},
           {"firing_time_ms", o.firing_time_ms},
           {"milling_time_ms", o.milling_time_ms},
           {"slot", {{"x", o.slot_x}, {"y", o.slot_y}}},
           {"status", std::string(scada::to_string(o.status))},
           {"history", history}};
    if (!o.failure.empty()) j["failure"] = o.failure;
    return j;
}

json factory_snapshot(World& w, std::size_t alert_count) {
    const auto& sc = w.scada();
    json stations = json::object();
    for (auto s : kAllStations) {
        const auto& v = sc.view(s);
        json st{{"stale", v.stale}, {"sampled_tick", v.sampled_tick}, {"round_sent", v.round_sent}};
        json sensors = json::object();
        const auto& schema = physics::schema_for(s);
        for (std::size_t i = 0; i < schema.sensors.size() && i < v.input_registers.size(); ++i) {
            sensors[schema.sensors[i].name] = v.input_registers[i];
        }
        st["sensors"] = sensors;
        if (v.input_registers.size() == schema.sensors.size() + 1) st["plc_state"] = v.input_registers.back();
        json regs = json::object();
        json params = json::object();
        const auto& map = plc::holding_map(s);
        for (std::size_t i = 0; i < map.size() && i < v.holding_registers.size(); ++i) {
            regs[map[i].name] = v.holding_registers[i];
            if (map[i].writable) params[map[i].name] = v.holding_registers[i];
        }
        st["registers"] = regs;
        st["parameters"] = params;
        stations[std::string(to_string(s))] = st;
    }
    json inventory = json::array();
    for (const auto& slot : sc.inventory()) {
        inventory.push_back({{"x", slot.x}, {"y", slot.y}, {"color", std::string(to_string(slot.color))}});
    }
    json active = json::array();
    for (const auto& o : sc.orders()) {
        if (!o.terminal()) active.push_back(order_json(o));
    }
    json links = json::object();
    const auto now = w.now();
    for (const auto& l : w.config().topology.links) {
        const auto& st = w.fabric().stats(l.id);
        links[l.id] = {{"jammed", w.fabric().jammed(l.id, now)},
                       {"sent", st.sent},
                       {"delivered", st.delivered},
                       {"dropped_loss", st.dropped_loss},
                       {"dropped_jam", st.dropped_jam}};
    }
    return {{"api_version", 1},
            {"tick", now},
            {"sim_time_ms", now * w.config().tick_ms},
            {"stations", stations},
            {"inventory", inventory},
            {"active_orders", active},
            {"alerts", alert_count},
            {"links", links}};
}

Testbed::Testbed(ScenarioConfig config, TestbedOptions options) : options_(std::move(options)) {
    if (options_.mode) config.mode = *options_.mode;
    WorldOptions wo;
    wo.out_dir = options_.out_dir;
    wo.force_recorder = !options_.detectors.empty();
    world_ = std::make_unique<World>(std::move(config), wo);
    if (!options_.detectors.empty()) {
        world_->recorder()->subscribe([this](const trace::TraceRecord& r) {
            for (auto& d : options_.detectors) d->observe(r, pending_alerts_);
        });
    }
    std::lock_guard lk(mu_);
    snapshot_ = factory_snapshot(*world_, 0);
    snapshot_seq_ = 1;
}

Testbed::~Testbed() { stop(); }

void Testbed::start() {
    if (running_.exchange(true)) return;
    stop_ = false;
    thread_ = std::thread([this] { loop(); });
}

void Testbed::stop() {
    stop_ = true;
    if (thread_.joinable()) thread_.join();
    cv_.notify_all();
}

void Testbed::wait() {
    if (thread_.joinable()) thread_.join();
}

void Testbed::loop() {
    using clock = std::chrono::steady_clock;
    const auto& cfg = world_->config();
    const auto tick_len = std::chrono::microseconds(static_cast<long>(cfg.tick_ms) * 1000);
    const auto start = clock::now();
    const Tick first = world_->now();
    try {
        while (!stop_) {
            if (options_.honor_duration && cfg.duration && world_->now() >= *cfg.duration) break;
            world_->advance_tick();
            publish();
            if (cfg.mode == RunMode::Realtime) std::this_thread::sleep_until(start + tick_len * (world_->now() - first));
        }
        world_->finish();
        publish();
    } catch (...) {
        std::lock_guard lk(mu_);
        error_ = std::current_exception();
    }
    running_ = false;
    cv_.notify_all();
}

std::exception_ptr Testbed::error() const {
    std::lock_guard lk(mu_);
    return error_;
}

void Testbed::publish() {
    const auto version = world_->scada().snapshot_version();
    const bool fresh_alerts = !pending_alerts_.empty();
    if (version == last_scada_version_ && !fresh_alerts) return;
    last_scada_version_ = version;
    std::size_t count;
    {
        std::lock_guard lk(mu_);
        for (auto& a : pending_alerts_) alerts_.push_back(std::move(a));
        count = alerts_.size();
    }
    pending_alerts_.clear();
    auto snap = factory_snapshot(*world_, count);
    {
        std::lock_guard lk(mu_);
        snapshot_ = std::move(snap);
        ++snapshot_seq_;
    }
    cv_.notify_all();
}

std::pair<std::uint64_t, json> Testbed::snapshot() const {
    std::lock_guard lk(mu_);
    return {snapshot_seq_, snapshot_};
}

std::uint64_t Testbed::wait_snapshot(std::uint64_t seen, std::chrono::milliseconds timeout) const {
    std::unique_lock lk(mu_);
    cv_.wait_for(lk, timeout, [&] { return snapshot_seq_ > seen || !running_.load(); });
    return snapshot_seq_;
}

std::vector<ids::Alert> Testbed::alerts(std::size_t since) const {
    std::lock_guard lk(mu_);
    if (since >= alerts_.size()) return {};
    return {alerts_.begin() + static_cast<std::ptrdiff_t>(since), alerts_.end()};
}

std::size_t Testbed::alert_count() const {
    std::lock_guard lk(mu_);
    return alerts_.size();
}

}  // namespace linesim
