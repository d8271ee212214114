// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is the number of failures.
#include "linesim/error.hpp"
#include "linesim/hash.hpp"
#include "linesim/ids/detector.hpp"
#include "linesim/ids/evaluate.hpp"
#include "linesim/kernel/scenario.hpp"
#include "linesim/kernel/world.hpp"
#include "linesim/modbus/frame.hpp"
#include "linesim/modbus/pdu.hpp"
#include "linesim/plc/program.hpp"
#include "linesim/trace/deviation.hpp"

#include "fuzz.hpp"

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

using namespace linesim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool ok = true;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        if (!cond) ok = false;
        notes.push_back((cond ? "" : "NOT ") + what);
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ScenarioConfig scenario(const std::string& name) {
    return load_scenario(std::string(LINESIM_SOURCE_DIR) + "/scenarios/" + name + ".json");
}

ScenarioConfig without_attacks(ScenarioConfig cfg) {
    cfg.attacks.clear();
    return cfg;
}

std::string scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("linesim-acceptance-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

// Runs to the configured duration with every record kept in memory.
struct Run {
    std::unique_ptr<World> world;
    trace::Dataset data;

    trace::Trajectory traj(const std::string& var) const { return trace::trajectory(data, var); }
};

Run simulate(ScenarioConfig cfg, const std::string& tag) {
    cfg.capture.enabled = false;
    WorldOptions wo;
    wo.out_dir = scratch(tag);
    wo.keep_records = true;
    wo.force_recorder = true;
    const auto end = *cfg.duration;
    Run r;
    r.world = std::make_unique<World>(std::move(cfg), wo);
    while (r.world->now() < end) r.world->advance_tick();
    r.world->finish();
    r.data.header = r.world->recorder()->header();
    r.data.records = r.world->recorder()->records();
    return r;
}

// Ticks in [from, to] during which the trajectory is non-zero.
Tick active_ticks(const trace::Trajectory& tr, Tick from = 0, Tick to = INT64_MAX) {
    Tick n = 0;
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        if (tr.samples[i].second == 0) continue;
        const Tick a = std::max(tr.samples[i].first, from);
        const Tick b = std::min(i + 1 < tr.samples.size() ? tr.samples[i + 1].first - 1 : tr.end, to);
        if (b >= a) n += b - a + 1;
    }
    return n;
}

// Ticks at which the trajectory leaves zero.
std::vector<Tick> rises(const trace::Trajectory& tr, Tick from = 0, Tick to = INT64_MAX) {
    std::vector<Tick> out;
    double prev = 0;
    for (const auto& [t, v] : tr.samples) {
        if (prev == 0 && v != 0 && t >= from && t <= to) out.push_back(t);
        prev = v;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::uint64_t fnv(const std::string& s) {
    Fnv1a h;
    h.bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    return h.value();
}

const trace::GroundTruthBody* truth(const trace::Dataset& d, const std::string& label) {
    static std::vector<trace::GroundTruthBody> keep;
    keep = d.ground_truth();
    for (const auto& g : keep) {
        if (g.label == label) return &g;
    }
    return nullptr;
}

int ticks(int ms) { return plc::ms_to_ticks(ms, kDefaultTickMs); }

Verdict production() {
    Verdict v;
    auto r = simulate(scenario("happy_path"), "c1");
    auto& w = *r.world;
    const auto led = active_ticks(r.traj("FURNACE.oven_led"));
    v.expect(led == ticks(1000), fmt("oven LED lit %lld ticks (expected %d)", static_cast<long long>(led), ticks(1000)));
    const auto peaks = rises(r.traj("MILL.transport_pos")).size();
    v.expect(peaks == 2, fmt("%zu transport peaks", peaks));
    bool stored = false;
    for (const auto& e : w.physics_events()) stored |= e.kind == "wh_stored" && e.detail == "rack(1,1)";
    v.expect(stored, "stored at (1,1)");
    const auto& cyls = w.plant().cylinders().all();
    const bool sorted = cyls.size() == 1 && cyls.begin()->second.state == physics::CylinderState::Sorted &&
                        cyls.begin()->second.location.slot == "bay_red";
    v.expect(sorted, "cylinder in the red bay");

    RunOptions ro;
    ro.out_dir = scratch("c1-fast");
    ro.mode = RunMode::Fast;
    const auto res = run(scenario("happy_path"), ro);
    v.expect(res.wall_seconds < 5.0 && res.orders_done == 1, fmt("fast run %.3f s wall", res.wall_seconds));
    return v;
}

Verdict determinism() {
    Verdict v;
    std::string bytes[2];
    for (int i = 0; i < 2; ++i) {
        RunOptions ro;
        ro.out_dir = scratch("c2-" + std::to_string(i));
        const auto res = run(scenario("happy_path"), ro);
        bytes[i] = read_file(res.dataset) + read_file(res.pcap);
    }
    v.expect(!bytes[0].empty() && bytes[0] == bytes[1], "dataset and pcap byte-identical");
    v.expect(fnv(bytes[0]) == fnv(bytes[1]), fmt("hash %016llx", static_cast<unsigned long long>(fnv(bytes[0]))));
    return v;
}

Verdict physical() {
    Verdict v;
    const auto attacked = simulate(scenario("physical_attacks"), "c3a");
    const auto base = simulate(without_attacks(scenario("physical_attacks")), "c3b");

    const auto* rm = truth(attacked.data, "remove_at_mill");
    if (!rm) {
        v.expect(false, "removal happened");
        return v;
    }
    const Tick removed = rm->start;
    const auto after = rises(attacked.traj("MILL.transport_pos"), 1000);
    const auto after_base = rises(base.traj("MILL.transport_pos"), 1000);
    v.expect(after.size() == 1 && after.front() < removed && after_base.size() == 2,
             fmt("second order: %zu transport peak(s), %zu unattacked", after.size(), after_base.size()));

    const auto* blk = truth(attacked.data, "block_gripper_100");
    if (!blk) {
        v.expect(false, "gripper block happened");
        return v;
    }
    const auto a = attacked.traj("VC.rotation");
    const auto b = base.traj("VC.rotation");
    Tick held = 0;
    for (Tick t = blk->start; a.at(t) == a.at(t - 1); ++t) ++held;
    v.expect(held == 100, fmt("rotation plateau %lld ticks", static_cast<long long>(held)));
    bool same_before = true, shifted_after = true;
    for (Tick t = a.start(); t < blk->start; ++t) same_before &= a.at(t) == b.at(t);
    // Up to the second order, whose timing is set by the operator, not the line.
    for (Tick t = blk->end + 1; t < 1000; ++t) shifted_after &= a.at(t) == b.at(t - 100);
    v.expect(same_before, "identical before the block");
    v.expect(shifted_after, "post-release trajectory equals the unattacked one shifted by 100");
    return v;
}

Verdict injection() {
    Verdict v;
    const auto atk = simulate(scenario("command_injection"), "c4a");
    const auto base = simulate(without_attacks(scenario("command_injection")), "c4b");
    const Tick fire_delta = ticks(3000) - ticks(1000);
    const Tick mill_delta = ticks(2000) - ticks(1000);

    const auto led = active_ticks(atk.traj("FURNACE.oven_led")) - active_ticks(base.traj("FURNACE.oven_led"));
    const auto motor = active_ticks(atk.traj("MILL.mill_motor")) - active_ticks(base.traj("MILL.mill_motor"));
    v.expect(led == fire_delta, fmt("oven LED +%lld", static_cast<long long>(led)));
    v.expect(motor == mill_delta, fmt("mill motor +%lld", static_cast<long long>(motor)));

    const auto ta = rises(atk.traj("MILL.transport_pos"));
    const auto tb = rises(base.traj("MILL.transport_pos"));
    const auto pa = rises(atk.traj("MILL.eject_piston"));
    const auto pb = rises(base.traj("MILL.eject_piston"));
    if (ta.size() != 2 || tb.size() != 2 || pa.size() != 1 || pb.size() != 1) {
        v.expect(false, "transport and piston activations present");
        return v;
    }
    v.expect(ta[0] - tb[0] == fire_delta, fmt("transport to mill delayed %lld", static_cast<long long>(ta[0] - tb[0])));
    v.expect(ta[1] - tb[1] == fire_delta + mill_delta,
             fmt("transport back delayed %lld", static_cast<long long>(ta[1] - tb[1])));
    v.expect(pa[0] - pb[0] == fire_delta + mill_delta, fmt("piston delayed %lld", static_cast<long long>(pa[0] - pb[0])));
    return v;
}

Verdict detection() {
    Verdict v;
    const auto train = simulate(scenario("fig7_benign"), "c5a");
    const auto test = simulate(scenario("fig7_attacks"), "c5b");
    std::map<ids::DetectorKind, std::vector<ids::Alert>> alerts;
    for (auto k : ids::kAllDetectors) {
        auto d = ids::make_detector(k);
        d->train(train.data.records);
        alerts[k] = d->detect(test.data.records);
    }
    const auto rep = ids::evaluate(alerts, test.data.ground_truth(), test.data.last_tick());
    std::printf("%s", rep.matrix().c_str());

    auto outcome = [&](ids::DetectorKind k, const std::string& label) -> const ids::AttackOutcome* {
        const auto* d = rep.find(k);
        if (!d) return nullptr;
        for (const auto& a : d->attacks) {
            if (a.truth.label == label) return &a;
        }
        return nullptr;
    };
    using ids::DetectorKind;
    for (auto k : ids::kAllDetectors) {
        const auto name = std::string(ids::to_string(k));
        for (const char* label : {"inject_firing_time", "inject_milling_time"}) {
            const auto* o = outcome(k, label);
            v.expect(o && o->detected, name + " detects " + label);
        }
        const auto* d = rep.find(k);
        v.expect(d && d->benign_alerts == 0, name + fmt(" benign alerts %zu", d ? d->benign_alerts : 0));
    }
    for (auto k : {DetectorKind::Iat, DetectorKind::Dtmc}) {
        const auto* o = outcome(k, "modbus_scan");
        v.expect(o && o->detected, std::string(ids::to_string(k)) + " detects the scan");
    }
    const auto* mm = outcome(DetectorKind::MinMax, "modbus_scan");
    v.expect(mm && mm->alerts == 0, "minmax silent in the scan window");
    const auto* st = outcome(DetectorKind::SteadyTime, "modbus_scan");
    v.expect(st && st->first_alert && *st->delay() > 0,
             fmt("steadytime scan delay %lld", static_cast<long long>(st && st->delay() ? *st->delay() : -1)));
    return v;
}

Verdict jamming() {
    Verdict v;
    const auto r = simulate(scenario("jamming"), "c6");
    auto& w = *r.world;
    const auto* jam = truth(r.data, "jam_scada_uplink");
    if (!jam) {
        v.expect(false, "jam happened");
        return v;
    }
    const auto& log = w.scada().request_log();
    std::size_t in_window = 0, timed_out = 0;
    for (const auto& e : log) {
        if (e.sent < jam->start || e.sent > jam->end) continue;
        ++in_window;
        timed_out += e.outcome == scada::RequestOutcome::Timeout;
    }
    v.expect(in_window > 0 && timed_out == in_window, fmt("%zu/%zu requests in the window timed out", timed_out, in_window));

    bool refused = false;
    for (const auto& op : w.operation_log()) {
        if (op.op == "order" && op.tick >= jam->start && op.tick <= jam->end) {
            refused = !op.ok && op.detail.find("Unavailable") != std::string::npos;
        }
    }
    v.expect(refused, "order during the window refused as Unavailable");

    Tick fired = -1;
    for (const auto& e : w.physics_events()) {
        if (e.kind == "firing_started" && fired < 0) fired = e.tick;
    }
    const auto led = active_ticks(r.traj("FURNACE.oven_led"));
    v.expect(fired >= jam->start && fired <= jam->end && led == ticks(1000),
             fmt("firing inside the window lasted %lld ticks", static_cast<long long>(led)));

    // First request each PLC got answered after the blackout.
    bool recovered = true;
    int worst = 0;
    for (auto s : kAllStations) {
        const scada::RequestLogEntry* first = nullptr;
        for (const auto& e : log) {
            if (e.plc == s && e.sent > jam->end && e.outcome == scada::RequestOutcome::Ok) {
                first = &e;
                break;
            }
        }
        recovered &= first && first->attempt <= 3;
        if (first) worst = std::max(worst, first->attempt);
    }
    const auto& views = w.scada().views();
    for (const auto& sv : views) recovered &= !sv.stale && sv.sampled_tick > jam->end;
    v.expect(recovered, fmt("first poll after the window answered by retry %d", worst));
    return v;
}

Verdict deviation_metric() {
    Verdict v;
    const auto r = simulate(scenario("happy_path"), "c7");
    const auto a = r.traj("MILL.transport_pos");
    const auto self = trace::deviation(a, a, trace::Alignment::ByTick);
    v.expect(self.deviation == 0.0, fmt("deviation(a,a) = %.2f%%", self.deviation * 100));

    trace::Trajectory x{"synthetic", {}, 999, 0, 10000};
    trace::Trajectory y = x;
    for (Tick t = 0; t < 1000; t += 10) {
        const double base = static_cast<double>((t * 37) % 9000);
        x.samples.push_back({t, base});
        y.samples.push_back({t, base + 11});
    }
    const auto off = trace::deviation(x, y, trace::Alignment::ByTick);
    v.expect(off.deviation == 0.0011 && fmt("%.2f%%", off.deviation * 100) == "0.11%",
             fmt("offset 11/10000 = %.2f%%", off.deviation * 100));
    v.notes.push_back("sim-vs-physical comparison excluded (no hardware)");
    return v;
}

Verdict protocol() {
    using namespace modbus;
    Verdict v;
    const Bytes golden{0x00, 0x01, 0x00, 0x00, 0x00, 0x06, 0x01, 0x03, 0x00, 0x00, 0x00, 0x02};
    v.expect(encode(make_request(1, 1, Request{Function::ReadHoldingRegisters, 0, 2, {}, {}})) == golden,
             "golden bytes 00 01 00 00 00 06 01 03 00 00 00 02");

    std::mt19937_64 rng(4242);
    constexpr int kFrames = 100000;
    std::size_t failures = 0;
    for (int i = 0; i < kFrames; ++i) {
        const auto req = testing::random_request(rng);
        const auto bytes = encode(make_request(static_cast<std::uint16_t>(i), 1, req));
        const auto d = decode_one(bytes);
        const auto p = d ? parse_request(d->frame) : ParsedRequest{};
        if (!d || d->raw != bytes || !p.request || !(*p.request == req)) ++failures;

        std::uint16_t asked = 0;
        const auto resp = testing::random_response(rng, asked);
        const auto f = resp.exception ? make_exception(1, 1, resp.function, *resp.exception) : make_response(1, 1, resp);
        const auto dr = decode_one(encode(f));
        const auto back = dr ? parse_response(dr->frame, asked ? std::optional<std::uint16_t>(asked) : std::nullopt)
                             : std::nullopt;
        if (!back || !(*back == resp)) ++failures;
    }
    v.expect(failures == 0, fmt("%d fuzzed frames, %zu failures", 2 * kFrames, failures));
    return v;
}

double cpu_seconds(const rusage& u) {
    auto s = [](const timeval& t) { return static_cast<double>(t.tv_sec) + static_cast<double>(t.tv_usec) / 1e6; };
    return s(u.ru_utime) + s(u.ru_stime);
}

Verdict resources() {
    Verdict v;
    rusage before{}, after{};
    getrusage(RUSAGE_SELF, &before);
    RunOptions ro;
    ro.out_dir = scratch("c9-rt");
    ro.mode = RunMode::Realtime;
    const auto rt = run(scenario("happy_path"), ro);
    getrusage(RUSAGE_SELF, &after);
    const double cores = (cpu_seconds(after) - cpu_seconds(before)) / rt.wall_seconds;
    const double rss_mb = static_cast<double>(after.ru_maxrss) / 1024.0;
    const double tick_ms = kDefaultTickMs;
    v.expect(rt.wall_seconds <= rt.sim_seconds * 1.02 + 0.5 && rt.mean_drift_ms < tick_ms / 2,
             fmt("realtime %.2f s sim in %.2f s wall, drift mean %.3f ms max %.3f ms", rt.sim_seconds, rt.wall_seconds,
                 rt.mean_drift_ms, rt.max_drift_ms));
    v.expect(cores < 1.0, fmt("%.3f cores", cores));
    v.expect(rss_mb < 1024.0, fmt("peak RSS %.1f MB", rss_mb));

    ro.out_dir = scratch("c9-fast");
    ro.mode = RunMode::Fast;
    const auto fast = run(scenario("happy_path"), ro);
    const double speedup = fast.sim_seconds / fast.wall_seconds;
    v.expect(speedup >= 100.0, fmt("fast mode %.0fx realtime", speedup));
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"end-to-end production", production},
        {"determinism", determinism},
        {"physical attacks", physical},
        {"command injection", injection},
        {"ids detection matrix", detection},
        {"jamming", jamming},
        {"deviation metric", deviation_metric},
        {"protocol conformance", protocol},
        {"resource envelope", resources},
    };
    int failed = 0;
    int n = 0;
    for (const auto& [name, fn] : criteria) {
        ++n;
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v.ok = false;
            v.notes.push_back(std::string("error: ") + e.what());
        }
        std::string detail;
        for (const auto& s : v.notes) detail += (detail.empty() ? "" : "; ") + s;
        std::printf("%s %d %s: %s\n", v.ok ? "PASS" : "FAIL", n, name, detail.c_str());
        std::fflush(stdout);
        failed += !v.ok;
    }
    return failed;
}
