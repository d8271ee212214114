#include "linesim/ids/detector.hpp"
#include "linesim/ids/evaluate.hpp"
#include "linesim/ids/stream.hpp"
#include "linesim/modbus/pdu.hpp"
#include "linesim/trace/recorder.hpp"

#include "doctest.h"
#include "support.hpp"

using namespace linesim;
using namespace linesim::ids;
using modbus::Function;
using modbus::Request;
using modbus::Response;

namespace {

struct Builder {
    std::vector<trace::TraceRecord> records;
    std::uint64_t seq = 0;
    std::uint16_t txn = 0;

    void frame(Tick t, const std::string& src, const std::string& dst, const modbus::ModbusFrame& f) {
        trace::FrameBody b;
        b.src = src;
        b.dst = dst;
        b.link = src == "scada" || src == "attacker" ? src + "-switch" : "switch-" + src;
        b.conn = src == "attacker" ? 50000 : 1000;
        b.raw = modbus::encode(f);
        b.framed = true;
        b.txn = f.transaction_id;
        b.unit = f.unit_id;
        b.function = f.function;
        b.unknown_function = !modbus::is_supported_function(f.base_function());
        records.push_back(trace::TraceRecord{t, ++seq, b});
    }

    // Read of FURNACE hr0..1 answered on the next tick.
    void poll(Tick t, std::uint16_t firing, const std::string& client = "scada") {
        ++txn;
        frame(t, client, "FURNACE", modbus::make_request(txn, 1, Request{Function::ReadHoldingRegisters, 0, 2, {}, {}}));
        Response r;
        r.function = 0x03;
        r.registers = {firing, 0};
        frame(t + 1, "FURNACE", client, modbus::make_response(txn, 1, r));
    }
};

std::vector<trace::TraceRecord> benign(Tick until) {
    Builder b;
    for (Tick t = 0; t < until; t += 5) b.poll(t, 1000);
    return b.records;
}

std::map<DetectorKind, std::unique_ptr<Detector>> trained(const std::vector<trace::TraceRecord>& train,
                                                          DetectorOptions opts = {}) {
    std::map<DetectorKind, std::unique_ptr<Detector>> out;
    for (auto k : kAllDetectors) {
        out[k] = make_detector(k, opts);
        out[k]->train(train);
    }
    return out;
}

Alert at(Tick t) {
    Alert a;
    a.tick = t;
    a.subject = "x";
    return a;
}

trace::GroundTruthBody gt(Tick s, Tick e) { return {"atk", "command_inject", "FURNACE", s, e}; }

const std::string& dataset(const std::string& name, std::uint64_t seed) {
    static std::map<std::string, std::string> cache;
    const auto key = name + std::to_string(seed);
    if (!cache.count(key)) {
        auto cfg = testing::scenario(name);
        cfg.seed = seed;
        cache[key] = testing::run_to_end(cfg, testing::scratch("ids-" + key))->dataset_path();
    }
    return cache[key];
}

}  // namespace

TEST_SUITE("ids") {

TEST_CASE("channel keys and process updates from frames") {
    Builder b;
    b.poll(0, 1234);
    TraceInterpreter in;
    auto req = in.interpret(b.records[0]);
    REQUIRE(req);
    CHECK(req->request);
    CHECK(req->key.str() == "scada>FURNACE:03@0");
    CHECK(req->updates.empty());
    auto resp = in.interpret(b.records[1]);
    REQUIRE(resp);
    CHECK_FALSE(resp->request);
    CHECK(resp->key.str() == "FURNACE>scada:03@0");
    REQUIRE(resp->updates.size() == 2);
    CHECK(resp->updates[0].variable == "FURNACE.hr0");
    CHECK(resp->updates[0].value == 1234);
    CHECK(resp->updates[1].variable == "FURNACE.hr1");

    TraceInterpreter bucketed(64);
    CHECK(bucketed.interpret(b.records[0])->key.bucket == 0u);
    trace::TraceRecord sample{0, 1, trace::SampleBody{"VC.rotation", 3}};
    CHECK_FALSE(in.interpret(sample));
}

TEST_CASE("a detector fed its own training stream stays silent") {
    const auto train = benign(2000);
    auto ds = trained(train);
    for (auto& [k, d] : ds) {
        CAPTURE(to_string(k));
        CHECK(d->detect(train).empty());
    }
}

TEST_CASE("injected value trips the range detector") {
    const auto train = benign(2000);
    auto ds = trained(train);
    Builder test;
    for (Tick t = 0; t < 1000; t += 5) test.poll(t, t >= 500 && t < 600 ? 5000 : 1000);
    const auto minmax = ds[DetectorKind::MinMax]->detect(test.records);
    REQUIRE_FALSE(minmax.empty());
    CHECK(minmax.front().tick == 501);
    CHECK(minmax.front().subject == "FURNACE.hr0");
    CHECK(minmax.front().observed == 5000);
    CHECK(minmax.front().limit == doctest::Approx(1050));
    const auto steady = ds[DetectorKind::SteadyTime]->detect(test.records);
    CHECK_FALSE(steady.empty());
    CHECK(ds[DetectorKind::Iat]->detect(test.records).empty());
    CHECK(ds[DetectorKind::Dtmc]->detect(test.records).empty());
}

TEST_CASE("off-cadence and unseen traffic trips the communication detectors") {
    const auto train = benign(2000);
    auto ds = trained(train);
    Builder test;
    for (Tick t = 0; t < 1000; t += 5) test.poll(t, 1000);
    ++test.txn;
    test.frame(502, "attacker", "FURNACE",
               modbus::make_request(test.txn, 1, Request{Function::ReadInputRegisters, 0, 1, {}, {}}));
    std::sort(test.records.begin(), test.records.end(),
              [](const auto& a, const auto& b) { return a.tick < b.tick; });
    const auto iat = ds[DetectorKind::Iat]->detect(test.records);
    REQUIRE_FALSE(iat.empty());
    CHECK(iat.front().tick == 502);
    CHECK(iat.front().subject == "attacker>FURNACE:04@0");
    const auto dtmc = ds[DetectorKind::Dtmc]->detect(test.records);
    REQUIRE_FALSE(dtmc.empty());
    CHECK(dtmc.front().tick == 502);
    CHECK(ds[DetectorKind::MinMax]->detect(test.records).empty());
}

TEST_CASE("model save and reload detect identically") {
    const auto train = trace::load_dataset(dataset("order", 1));
    const auto test = trace::load_dataset(dataset("order", 2));
    for (auto k : kAllDetectors) {
        CAPTURE(to_string(k));
        auto d = make_detector(k, {0.0, 0.0, 1});
        d->train(train.records, {"order", train.header.config_hash, 0});
        const auto saved = d->save();
        CHECK(saved["schema_version"] == kModelSchemaVersion);
        CHECK(saved["detector"] == std::string(to_string(k)));
        auto back = load_detector(nlohmann::json::parse(saved.dump()));
        CHECK(back->kind() == k);
        CHECK(back->save() == saved);
        CHECK(back->detect(test.records) == d->detect(test.records));
    }
}

TEST_CASE("reset starts a new stream with the same model") {
    const auto train = benign(1000);
    auto d = make_detector(DetectorKind::Iat);
    d->train(train);
    const auto first = d->detect(train);
    const auto second = d->detect(train);
    CHECK(first == second);
}

TEST_CASE("wider margins never add alerts") {
    const auto train = trace::load_dataset(dataset("order", 1));
    for (const auto* name : {"order", "command_injection"}) {
        const auto test = trace::load_dataset(dataset(name, 2));
        for (auto k : {DetectorKind::MinMax, DetectorKind::SteadyTime, DetectorKind::Iat}) {
            CAPTURE(name);
            CAPTURE(to_string(k));
            std::size_t prev = SIZE_MAX;
            for (double m : {0.0, 0.01, 0.05, 0.2, 1.0}) {
                auto d = make_detector(k, {m, 0.0, 1});
                d->train(train.records);
                const auto n = d->detect(test.records).size();
                if (m == 0.0 && std::string(name) == "command_injection") CHECK(n > 0);
                CHECK(n <= prev);
                prev = n;
            }
        }
        std::size_t prev = 0;
        for (double p : {0.0, 0.01, 0.1, 0.5}) {
            auto d = make_detector(DetectorKind::Dtmc, {0.05, p, 1});
            d->train(train.records);
            const auto n = d->detect(test.records).size();
            CHECK(n >= prev);
            prev = n;
        }
    }
}

TEST_CASE("training needs something to model") {
    std::vector<trace::TraceRecord> only_samples{{0, 1, trace::SampleBody{"VC.rotation", 0}}};
    for (auto k : kAllDetectors) {
        CAPTURE(to_string(k));
        CHECK_ERROR(make_detector(k)->train(only_samples), ErrorKind::EmptyTraining);
        CHECK_ERROR(make_detector(k)->train({}), ErrorKind::EmptyTraining);
    }
}

TEST_CASE("malformed models") {
    auto d = make_detector(DetectorKind::MinMax);
    d->train(benign(100));
    auto j = d->save();
    j["schema_version"] = 2;
    CHECK_ERROR(load_detector(j), ErrorKind::SchemaUnsupported);
    j = d->save();
    j["detector"] = "oracle";
    CHECK_ERROR(load_detector(j), ErrorKind::CorruptRecord);
    CHECK(parse_detector("dtmc") == DetectorKind::Dtmc);
    CHECK_FALSE(parse_detector("svm"));
}

TEST_CASE("alert json round trip") {
    Alert a{DetectorKind::Iat, 42, "scada>MILL:03@0", 7, "max_gap", 5.25, "gap 7 > 5.25"};
    CHECK(Alert::from_json(a.to_json()) == a);
}

TEST_CASE("evaluation counts alerts up to the end of the grace period") {
    EvalOptions opts;
    opts.grace = 10;
    const std::vector<trace::GroundTruthBody> truth{gt(100, 120)};
    auto r = evaluate({{DetectorKind::MinMax, {at(130)}}}, truth, 1000, opts);
    CHECK(r.find(DetectorKind::MinMax)->attacks[0].detected);
    CHECK(r.find(DetectorKind::MinMax)->attacks[0].delay() == 30);
    CHECK(r.find(DetectorKind::MinMax)->benign_alerts == 0);

    r = evaluate({{DetectorKind::MinMax, {at(131)}}}, truth, 1000, opts);
    CHECK_FALSE(r.find(DetectorKind::MinMax)->attacks[0].detected);
    CHECK(r.find(DetectorKind::MinMax)->benign_alerts == 1);

    r = evaluate({{DetectorKind::MinMax, {at(99)}}}, truth, 1000, opts);
    CHECK_FALSE(r.find(DetectorKind::MinMax)->attacks[0].detected);
}

TEST_CASE("benign regions and false alarm rate") {
    EvalOptions opts;
    opts.grace = 10;
    opts.tick_ms = 20;
    const std::vector<trace::GroundTruthBody> truth{gt(100, 120), gt(125, 200)};
    auto r = evaluate({{DetectorKind::Iat, {at(0), at(2999)}}}, truth, 2999, opts);
    CHECK(r.benign_regions == std::vector<std::pair<Tick, Tick>>{{0, 99}, {211, 2999}});
    CHECK(r.benign_ticks == 100 + 2789);
    const double minutes = (100.0 + 2789.0) * 20.0 / 60000.0;
    CHECK(r.find(DetectorKind::Iat)->false_alarms_per_minute == doctest::Approx(2.0 / minutes));
    CHECK(r.to_json()["detectors"].size() == 1);
    CHECK(r.matrix().find("iat") != std::string::npos);
}

TEST_CASE("alerts and intervals must lie on the timeline") {
    CHECK_ERROR(evaluate({{DetectorKind::Iat, {at(1001)}}}, {}, 1000), ErrorKind::TimelineMismatch);
    CHECK_ERROR(evaluate({}, {gt(900, 1100)}, 1000), ErrorKind::TimelineMismatch);
    CHECK_ERROR(evaluate({}, {gt(50, 40)}, 1000), ErrorKind::TimelineMismatch);
}

}
