#include "linesim/attack/engine.hpp"
#include "linesim/error.hpp"
#include "linesim/modbus/frame.hpp"
#include "linesim/plc/register_map.hpp"

#include <algorithm>
#include <map>

namespace linesim::attack {

using nlohmann::json;

namespace {

constexpr Tick kAttackTimeout = 10;

std::optional<Kind> parse_kind(const std::string& s) {
    if (s == "remove_cylinder") return Kind::RemoveCylinder;
    if (s == "block_gripper") return Kind::BlockGripper;
    if (s == "command_inject") return Kind::CommandInject;
    if (s == "modbus_scan") return Kind::ModbusScan;
    if (s == "jam_link") return Kind::JamLink;
    return std::nullopt;
}

struct Fields {
    const json& obj;
    std::string path;

    [[noreturn]] void bad(const std::string& field) const { throw Error(ErrorKind::ConfigInvalid, path + "." + field); }

    bool has(const char* key) const { return obj.is_object() && obj.contains(key); }

    std::int64_t integer(const char* key, std::int64_t lo, std::int64_t hi) const {
        if (!has(key)) bad(key);
        const auto& v = obj.at(key);
        if (!v.is_number_integer()) bad(key);
        const auto x = v.get<std::int64_t>();
        if (x < lo || x > hi) bad(key);
        return x;
    }
    std::int64_t integer_or(const char* key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) const {
        return has(key) ? integer(key, lo, hi) : fallback;
    }
    std::string string(const char* key) const {
        if (!has(key) || !obj.at(key).is_string()) bad(key);
        return obj.at(key).get<std::string>();
    }
};

StationId station_target(const std::string& target, const std::string& path) {
    auto s = parse_station(target);
    if (!s) throw Error(ErrorKind::ConfigInvalid, path + ".target");
    return *s;
}

}  // namespace

std::string_view to_string(Kind k) noexcept {
    switch (k) {
        case Kind::RemoveCylinder: return "remove_cylinder";
        case Kind::BlockGripper: return "block_gripper";
        case Kind::CommandInject: return "command_inject";
        case Kind::ModbusScan: return "modbus_scan";
        case Kind::JamLink: return "jam_link";
    }
    return "?";
}

Directive parse_directive(const json& j, std::size_t index, const net::Topology& topo) {
    const std::string path = "attack_script[" + std::to_string(index) + "]";
    if (!j.is_object()) throw Error(ErrorKind::ConfigInvalid, path);
    Fields top{j, path};
    Directive d;
    const auto kind = parse_kind(top.string("kind"));
    if (!kind) top.bad("kind");
    d.kind = *kind;
    d.label = top.has("label") ? top.string("label") : std::string(to_string(d.kind)) + "#" + std::to_string(index);

    if (!top.has("trigger")) top.bad("trigger");
    const auto& tj = j.at("trigger");
    if (tj.is_number_integer()) {
        d.trigger.at_tick = tj.get<Tick>();
        if (*d.trigger.at_tick < 0) top.bad("trigger");
    } else if (tj.is_object()) {
        Fields tf{tj, path + ".trigger"};
        if (tf.has("at_tick")) {
            d.trigger.at_tick = tf.integer("at_tick", 0, INT64_MAX);
        } else if (tf.has("on")) {
            d.trigger.on = tf.string("on");
            if (tf.has("station")) {
                auto s = parse_station(tf.string("station"));
                if (!s) tf.bad("station");
                d.trigger.station = *s;
            }
            d.trigger.occurrence = static_cast<int>(tf.integer_or("occurrence", 1, 1, 1'000'000));
            d.trigger.delay = tf.integer_or("delay", 0, 0, INT64_MAX);
        } else {
            top.bad("trigger");
        }
    } else {
        top.bad("trigger");
    }

    d.target = top.has("target") ? top.string("target") : "";
    static const json kEmpty = json::object();
    const json& pj = top.has("payload") ? j.at("payload") : kEmpty;
    if (!pj.is_object()) top.bad("payload");
    Fields p{pj, path + ".payload"};

    switch (d.kind) {
        case Kind::RemoveCylinder:
            station_target(d.target, path);
            if (p.has("cylinder")) d.cylinder = static_cast<CylinderId>(p.integer("cylinder", 1, UINT32_MAX));
            if (!d.cylinder && d.trigger.on.empty()) p.bad("cylinder");
            break;
        case Kind::BlockGripper:
            if (station_target(d.target.empty() ? "VC" : d.target, path) != StationId::VC) top.bad("target");
            d.target = "VC";
            d.duration = p.integer("duration_ticks", 0, 1'000'000'000);
            break;
        case Kind::CommandInject: {
            const auto st = station_target(d.target, path);
            if (!p.has("register")) p.bad("register");
            const auto& r = pj.at("register");
            if (r.is_string()) {
                const auto addr = plc::holding_address(st, r.get<std::string>());
                if (!addr) p.bad("register");
                d.address = static_cast<std::uint16_t>(*addr);
            } else {
                d.address = static_cast<std::uint16_t>(p.integer("register", 0, 65535));
            }
            d.value = static_cast<std::uint16_t>(p.integer("value", 0, 65535));
            d.function = static_cast<std::uint8_t>(p.integer_or("function", 0x06, 0, 255));
            if (d.function != 0x06 && d.function != 0x10) p.bad("function");
            if (p.has("restore_after_ticks")) {
                d.restore_after = p.integer("restore_after_ticks", 1, 1'000'000'000);
                d.restore_value = static_cast<std::uint16_t>(p.integer("restore_value", 0, 65535));
            }
            break;
        }
        case Kind::ModbusScan: {
            station_target(d.target, path);
            d.scan_start = static_cast<std::uint16_t>(p.integer_or("start", 0, 0, 65535));
            d.scan_end = static_cast<std::uint16_t>(p.integer_or("end", d.scan_start, d.scan_start, 65535));
            d.rate = static_cast<int>(p.integer_or("rate", 1, INT32_MIN, INT32_MAX));
            if (d.rate <= 0) p.bad("rate");
            if (p.has("functions")) {
                const auto& fs = pj.at("functions");
                if (!fs.is_array() || fs.empty()) p.bad("functions");
                d.scan_functions.clear();
                for (const auto& f : fs) {
                    if (!f.is_number_integer()) p.bad("functions");
                    const auto code = f.get<int>();
                    // Scans only read; write codes would mutate the plant.
                    const bool write = code == 0x05 || code == 0x06 || code == 0x0F || code == 0x10;
                    if (code < 1 || code > 127 || write) p.bad("functions");
                    d.scan_functions.push_back(static_cast<std::uint8_t>(code));
                }
            }
            break;
        }
        case Kind::JamLink:
            if (!topo.find_link(d.target)) top.bad("target");
            d.duration = p.integer("duration_ticks", 0, 1'000'000'000);
            break;
    }
    return d;
}

std::vector<Directive> parse_script(const json& script, const net::Topology& topo) {
    std::vector<Directive> out;
    if (script.is_null()) return out;
    if (!script.is_array()) throw Error(ErrorKind::ConfigInvalid, "attack_script");
    for (std::size_t i = 0; i < script.size(); ++i) out.push_back(parse_directive(script[i], i, topo));
    return out;
}

Engine::Engine(std::vector<Directive> directives)
    : directives_(std::move(directives)), reports_(directives_.size()), live_(directives_.size()),
      client_(net::kAttacker, 50000) {
    for (std::size_t i = 0; i < directives_.size(); ++i) {
        reports_[i].label = directives_[i].label;
        reports_[i].kind = std::string(to_string(directives_[i].kind));
    }
}

std::vector<std::pair<Tick, std::size_t>> Engine::initial_schedule() const {
    std::vector<std::pair<Tick, std::size_t>> out;
    for (std::size_t i = 0; i < directives_.size(); ++i) {
        if (directives_[i].trigger.at_tick) out.emplace_back(*directives_[i].trigger.at_tick, i);
    }
    return out;
}

void Engine::activate(std::size_t index, Tick now, Context ctx) {
    if (reports_[index].status != "pending") return;
    execute(index, now, ctx);
}

void Engine::execute(std::size_t i, Tick now, Context ctx) {
    const auto& d = directives_[i];
    auto& rep = reports_[i];
    auto& live = live_[i];
    rep.status = "active";
    rep.start = now;
    switch (d.kind) {
        case Kind::RemoveCylinder: {
            const auto id = d.cylinder ? d.cylinder : live.event_cylinder;
            if (!id) {
                rep.status = "failed";
                rep.detail = "no cylinder selected";
                rep.start.reset();
                return;
            }
            try {
                ctx.plant.remove_cylinder(*id, now);
            } catch (const Error& e) {
                rep.status = "failed";
                rep.detail = e.what();
                rep.start.reset();
                return;
            }
            rep.end = now;
            rep.status = "done";
            rep.detail = "cylinder " + std::to_string(*id);
            return;
        }
        case Kind::BlockGripper:
            ctx.plant.block_gripper(static_cast<int>(d.duration), now);
            if (d.duration <= 0) {
                rep.start.reset();
                rep.status = "done";
                rep.detail = "zero duration";
                return;
            }
            rep.end = now + d.duration - 1;
            rep.status = "done";
            return;
        case Kind::JamLink:
            ctx.fabric.set_jam(d.target, true, d.duration, now);
            if (d.duration <= 0) {
                rep.start.reset();
                rep.status = "done";
                rep.detail = "zero duration";
                return;
            }
            rep.end = now + d.duration - 1;
            rep.status = "done";
            return;
        case Kind::CommandInject: {
            modbus::Request req;
            req.function = static_cast<modbus::Function>(d.function);
            req.address = d.address;
            req.registers = {d.value};
            req.quantity = 1;
            const auto txn = client_.send(ctx.fabric, d.target, req, now, kAttackTimeout);
            txn_owner_[txn] = i;
            ++live.outstanding;
            ++rep.frames_sent;
            if (d.restore_after) {
                followups_.push_back({now + *d.restore_after, i, true});
            } else {
                live.sending_done = true;
            }
            return;
        }
        case Kind::ModbusScan:
            live.scan.total = d.scan_functions.size() * (static_cast<std::size_t>(d.scan_end - d.scan_start) + 1);
            live.scan.next = 0;
            pump_one(i, now, ctx);
            return;
    }
}

void Engine::restore(std::size_t i, Tick now, Context ctx) {
    const auto& d = directives_[i];
    auto& live = live_[i];
    if (reports_[i].status != "active" || live.sending_done) return;
    modbus::Request req;
    req.function = static_cast<modbus::Function>(d.function);
    req.address = d.address;
    req.registers = {d.restore_value};
    req.quantity = 1;
    const auto txn = client_.send(ctx.fabric, d.target, req, now, kAttackTimeout);
    txn_owner_[txn] = i;
    ++live.outstanding;
    ++reports_[i].frames_sent;
    live.sending_done = true;
}

void Engine::pump_one(std::size_t i, Tick now, Context ctx) {
    const auto& d = directives_[i];
    auto& live = live_[i];
    if (live.scan.last_send == now) return;  // a scan sends its share once per tick
    const std::size_t range = static_cast<std::size_t>(d.scan_end - d.scan_start) + 1;
    for (int k = 0; k < d.rate && live.scan.next < live.scan.total; ++k, ++live.scan.next) {
        const auto fn = d.scan_functions[live.scan.next / range];
        const auto addr = static_cast<std::uint16_t>(d.scan_start + live.scan.next % range);
        std::uint16_t txn;
        if (fn >= 0x01 && fn <= 0x04) {
            modbus::Request req;
            req.function = static_cast<modbus::Function>(fn);
            req.address = addr;
            req.quantity = 1;
            txn = client_.send(ctx.fabric, d.target, req, now, kAttackTimeout);
        } else {
            modbus::Bytes body{static_cast<std::uint8_t>(addr >> 8), static_cast<std::uint8_t>(addr & 0xff), 0, 1};
            txn = client_.send_raw(ctx.fabric, d.target, fn, body, now, kAttackTimeout);
        }
        txn_owner_[txn] = i;
        ++live.outstanding;
        ++reports_[i].frames_sent;
        live.scan.last_send = now;
    }
    if (live.scan.next >= live.scan.total) live.sending_done = true;
}

void Engine::pump(Tick now, Context ctx) {
    for (std::size_t i = 0; i < directives_.size(); ++i) {
        if (directives_[i].kind == Kind::ModbusScan && reports_[i].status == "active" && !live_[i].sending_done) {
            pump_one(i, now, ctx);
        }
    }
}

void Engine::on_packet(const net::Packet& packet, Tick now) { client_.on_packet(packet, now); }

void Engine::close_if_done(std::size_t i) {
    auto& live = live_[i];
    auto& rep = reports_[i];
    if (rep.status != "active" || !live.sending_done || live.outstanding > 0) return;
    rep.end = std::max(*rep.start, live.last_event);
    rep.status = "done";
}

void Engine::end_tick(Tick now, const std::vector<physics::PhysicsEvent>& events, Context ctx) {
    client_.expire(now);
    for (const auto& c : client_.drain()) {
        auto it = txn_owner_.find(c.txn);
        if (it == txn_owner_.end()) continue;
        const auto i = it->second;
        txn_owner_.erase(it);
        auto& live = live_[i];
        auto& rep = reports_[i];
        --live.outstanding;
        live.last_event = std::max(live.last_event, c.done);
        if (c.outcome == modbus::Outcome::Timeout) {
            ++rep.timeouts;
        } else if (c.outcome == modbus::Outcome::Exception) {
            ++rep.exceptions;
            if (directives_[i].kind == Kind::CommandInject && rep.detail.empty()) {
                const int code = c.response && c.response->exception ? static_cast<int>(*c.response->exception) : 0;
                rep.detail = Error(ErrorKind::WriteRejected, "exception " + std::to_string(code)).what();
            }
        }
        close_if_done(i);
    }

    for (std::size_t i = 0; i < directives_.size(); ++i) {
        const auto& trig = directives_[i].trigger;
        auto& live = live_[i];
        if (trig.on.empty() || live.fired) continue;
        for (const auto& ev : events) {
            if (ev.kind != trig.on || (trig.station && *trig.station != ev.station)) continue;
            if (++live.matches < trig.occurrence) continue;
            live.fired = true;
            live.event_cylinder = ev.cylinder;
            if (trig.delay == 0) {
                execute(i, now, ctx);
            } else {
                followups_.push_back({now + trig.delay, i, false});
            }
            break;
        }
    }
}

std::vector<Engine::Followup> Engine::drain_followups() {
    std::vector<Followup> out;
    out.swap(followups_);
    return out;
}

void Engine::finish(Tick now) {
    for (std::size_t i = 0; i < directives_.size(); ++i) {
        auto& rep = reports_[i];
        if (rep.status == "pending") {
            rep.status = "not_triggered";
        } else if (rep.status == "active") {
            rep.end = std::max(*rep.start, std::max(live_[i].last_event, now));
            rep.status = "done";
            rep.detail = "still active at end of run";
        }
    }
}

std::vector<GroundTruth> Engine::ground_truth() const {
    std::map<std::pair<std::string, std::string>, std::vector<GroundTruth>> groups;
    for (std::size_t i = 0; i < directives_.size(); ++i) {
        const auto& rep = reports_[i];
        if (!rep.start || !rep.end) continue;
        groups[{rep.kind, directives_[i].target}].push_back({rep.label, rep.kind, directives_[i].target, *rep.start, *rep.end});
    }
    std::vector<GroundTruth> out;
    for (auto& [key, items] : groups) {
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
            return a.start != b.start ? a.start < b.start : a.end < b.end;
        });
        std::vector<GroundTruth> merged;
        for (auto& g : items) {
            if (!merged.empty() && g.start <= merged.back().end) {
                auto& m = merged.back();
                m.end = std::max(m.end, g.end);
                if (m.label != g.label) m.label += "+" + g.label;
            } else {
                merged.push_back(g);
            }
        }
        out.insert(out.end(), merged.begin(), merged.end());
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.start != b.start ? a.start < b.start : a.label < b.label;
    });
    return out;
}

}  // namespace linesim::attack
