#include "linesim/kernel/testbed.hpp"
#include "linesim/scada/api.hpp"

#include "doctest.h"
#include "httplib.h"
#include "support.hpp"

#include <chrono>
#include <thread>

using namespace linesim;
using nlohmann::json;

namespace {

struct Live {
    std::unique_ptr<Testbed> bed;
    std::unique_ptr<scada::ApiServer> api;
    std::unique_ptr<httplib::Client> http;

    explicit Live(TestbedOptions opts = {}) {
        auto cfg = testing::scenario("order");
        cfg.operations.clear();
        cfg.capture.enabled = false;
        opts.out_dir = testing::scratch("api");
        opts.mode = RunMode::Fast;
        bed = std::make_unique<Testbed>(std::move(cfg), std::move(opts));
        api = std::make_unique<scada::ApiServer>(*bed, scada::ApiOptions{"127.0.0.1", 0, std::chrono::seconds(5)});
        api->start();
        bed->start();
        http = std::make_unique<httplib::Client>("127.0.0.1", api->port());
        http->set_read_timeout(10, 0);
    }
    ~Live() {
        api->stop();
        bed->stop();
    }

    json state() {
        auto r = http->Get("/state");
        REQUIRE(r);
        return json::parse(r->body);
    }

    void wait_fresh() {
        for (int i = 0; i < 500; ++i) {
            auto s = state();
            bool fresh = true;
            for (const auto& [name, st] : s["stations"].items()) fresh &= !st["stale"].get<bool>();
            if (fresh) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        FAIL("stations never became fresh");
    }
};

httplib::Result post_json(httplib::Client& c, const std::string& path, const json& body) {
    return c.Post(path, body.dump(), "application/json");
}

httplib::Result put_json(httplib::Client& c, const std::string& path, const json& body) {
    return c.Put(path, body.dump(), "application/json");
}

}  // namespace

TEST_SUITE("api") {

TEST_CASE("state snapshot") {
    Live live;
    live.wait_fresh();
    const auto s = live.state();
    CHECK(s["api_version"] == 1);
    CHECK(s["tick"].get<Tick>() > 0);
    CHECK(s["sim_time_ms"] == s["tick"].get<Tick>() * 20);
    CHECK(s["stations"].size() == 5);
    CHECK(s["stations"]["FURNACE"]["parameters"]["firing_time_ms"] == 1000);
    CHECK(s["stations"]["VC"]["sensors"].contains("rotation"));
    CHECK(s["inventory"] == json::array({{{"x", 1}, {"y", 1}, {"color", "blue"}}}));
    CHECK(s["links"]["scada-switch"]["jammed"] == false);
}

TEST_CASE("orders: create, fetch, conflicts and validation") {
    Live live;
    live.wait_fresh();
    auto& c = *live.http;

    auto r = post_json(c, "/orders", {{"color", "blue"}, {"firing_time_ms", 1000}, {"milling_time_ms", 1000}});
    REQUIRE(r);
    CHECK(r->status == 201);
    CHECK(r->get_header_value("Location") == "/orders/1");
    auto body = json::parse(r->body);
    CHECK(body["id"] == 1);
    CHECK(body["status"] == "queued");
    CHECK(body["slot"] == json{{"x", 1}, {"y", 1}});

    r = post_json(c, "/orders", {{"color", "red"}});
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(json::parse(r->body)["error"] == "OutOfStock");

    r = post_json(c, "/orders", {{"color", "green"}});
    REQUIRE(r);
    CHECK(r->status == 422);
    r = post_json(c, "/orders", {{"color", "blue"}, {"firing_time_ms", -5}});
    REQUIRE(r);
    CHECK(r->status == 422);
    r = c.Post("/orders", "{not json", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);

    r = c.Get("/orders/999");
    REQUIRE(r);
    CHECK(r->status == 404);

    std::string status;
    for (int i = 0; i < 1000 && status != "done"; ++i) {
        r = c.Get("/orders/1");
        REQUIRE(r);
        REQUIRE(r->status == 200);
        status = json::parse(r->body)["status"];
        if (status != "done") std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    CHECK(status == "done");

    r = c.Get("/orders");
    REQUIRE(r);
    CHECK(json::parse(r->body).size() == 1);
}

TEST_CASE("parameter writes") {
    Live live;
    live.wait_fresh();
    auto& c = *live.http;

    auto r = put_json(c, "/plcs/FURNACE/params/firing_time_ms", {{"value", 2000}});
    REQUIRE(r);
    CHECK(r->status == 200);
    auto body = json::parse(r->body);
    CHECK(body["plc"] == "FURNACE");
    CHECK(body["value"] == 2000);

    int seen = 0;
    for (int i = 0; i < 500 && seen != 2000; ++i) {
        seen = live.state()["stations"]["FURNACE"]["parameters"]["firing_time_ms"];
        if (seen != 2000) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    CHECK(seen == 2000);

    r = put_json(c, "/plcs/FURNACE/params/firing_time_ms", {{"value", 60001}});
    REQUIRE(r);
    CHECK(r->status == 422);
    CHECK(json::parse(r->body)["error"] == "OutOfBounds");
    r = put_json(c, "/plcs/PLC9/params/firing_time_ms", {{"value", 1}});
    REQUIRE(r);
    CHECK(r->status == 404);
    r = put_json(c, "/plcs/FURNACE/params/fired_count", {{"value", 1}});
    REQUIRE(r);
    CHECK(r->status == 404);
    r = put_json(c, "/plcs/FURNACE/params/firing_time_ms", {{"value", "fast"}});
    REQUIRE(r);
    CHECK(r->status == 422);
}

TEST_CASE("jammed uplink: writes time out and orders are refused") {
    Live live;
    live.wait_fresh();
    live.bed->call([](World& w) { w.fabric().set_jam("scada-switch", true, std::nullopt, w.now()); }).wait();
    auto r = put_json(*live.http, "/plcs/MILL/params/milling_time_ms", {{"value", 1500}});
    REQUIRE(r);
    CHECK(r->status == 504);
    CHECK(json::parse(r->body)["error"] == "Timeout");

    r = post_json(*live.http, "/orders", {{"color", "blue"}});
    REQUIRE(r);
    CHECK(r->status == 503);
    CHECK(json::parse(r->body)["error"] == "Unavailable");
    const auto s = live.state();
    CHECK(s["links"]["scada-switch"]["jammed"] == true);
    for (const auto& [name, st] : s["stations"].items()) CHECK(st["stale"] == true);
}

TEST_CASE("server-sent events") {
    Live live;
    std::string stream;
    auto r = live.http->Get("/events?limit=3", [&](const char* data, std::size_t n) {
        stream.append(data, n);
        return true;
    });
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type") == "text/event-stream");
    std::size_t events = 0;
    for (auto pos = stream.find("event: snapshot\n"); pos != std::string::npos;
         pos = stream.find("event: snapshot\n", pos + 1)) {
        ++events;
    }
    CHECK(events == 3);
    const auto data = stream.find("data: ");
    REQUIRE(data != std::string::npos);
    const auto line = stream.substr(data + 6, stream.find('\n', data) - data - 6);
    CHECK(json::parse(line)["api_version"] == 1);
}

TEST_CASE("live detector alerts") {
    // A model trained on an idle line flags the first order traffic.
    auto idle = testing::scenario("order");
    idle.operations.clear();
    idle.duration = 300;
    const auto dir = testing::scratch("api-train");
    const auto data = trace::load_dataset(testing::run_to_end(idle, dir)->dataset_path());
    TestbedOptions opts;
    opts.detectors.push_back(ids::make_detector(ids::DetectorKind::Dtmc));
    opts.detectors.back()->train(data.records);

    Live live(std::move(opts));
    live.wait_fresh();
    auto r = post_json(*live.http, "/orders", {{"color", "blue"}});
    REQUIRE(r);
    REQUIRE(r->status == 201);
    std::size_t total = 0;
    for (int i = 0; i < 500 && total == 0; ++i) {
        r = live.http->Get("/alerts");
        REQUIRE(r);
        total = json::parse(r->body)["total"];
        if (total == 0) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    CHECK(total > 0);
    r = live.http->Get("/alerts?since=" + std::to_string(total));
    REQUIRE(r);
    const auto tail = json::parse(r->body);
    CHECK(tail["alerts"].size() + total == tail["total"].get<std::size_t>());
    r = live.http->Get("/alerts");
    const auto first = json::parse(r->body)["alerts"][0];
    CHECK(first["detector"] == "dtmc");
}

TEST_CASE("bind failure") {
    auto cfg = testing::scenario("order");
    cfg.capture.enabled = false;
    Testbed bed(cfg, {});
    scada::ApiServer a(bed, {"127.0.0.1", 0, std::chrono::seconds(1)});
    a.start();
    scada::ApiServer b(bed, {"127.0.0.1", a.port(), std::chrono::seconds(1)});
    CHECK_ERROR(b.start(), ErrorKind::BindFailed);
    a.stop();
}

}
