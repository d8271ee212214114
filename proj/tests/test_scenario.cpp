#include "linesim/kernel/scenario.hpp"

#include "doctest.h"
#include "support.hpp"

#include <filesystem>

using namespace linesim;
using nlohmann::json;

namespace {

json minimal() { return json{{"schema_version", 1}, {"name", "t"}, {"duration_ticks", 10}}; }

std::string config_error(const json& j) {
    try {
        parse_scenario(j);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigInvalid) return e.detail();
        return "other:" + std::string(e.what());
    }
    return "";
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("every shipped scenario parses") {
    for (const auto& entry : std::filesystem::directory_iterator(testing::source_path("scenarios"))) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_scenario(entry.path().string()));
    }
}

TEST_CASE("defaults") {
    const auto c = parse_scenario(minimal());
    CHECK(c.tick_ms == 20);
    CHECK(c.mode == RunMode::Fast);
    CHECK(c.seed == 1);
    CHECK_FALSE(c.capture.enabled);
    CHECK(c.scada.poll_period_ticks == 5);
    CHECK(c.topology.links.size() == 8);
}

TEST_CASE("config hash follows content") {
    auto a = minimal();
    auto b = minimal();
    CHECK(parse_scenario(a).config_hash == parse_scenario(b).config_hash);
    b["seed"] = 2;
    CHECK(parse_scenario(a).config_hash != parse_scenario(b).config_hash);
}

TEST_CASE("field paths in errors") {
    auto j = minimal();
    j["attack_script"] = json::array({{{"kind", "modbus_scan"}, {"trigger", 5}, {"target", "PLC9"}}});
    CHECK(config_error(j) == "attack_script[0].target");

    j = minimal();
    j["bogus"] = 1;
    CHECK(config_error(j) == "bogus");

    j = minimal();
    j.erase("schema_version");
    CHECK(config_error(j) == "schema_version");

    j = minimal();
    j["schema_version"] = 2;
    CHECK(config_error(j) == "schema_version");

    j = minimal();
    j["operations"] = json::array({{{"tick", 1}, {"op", "spawn"}, {"color", "green"}}});
    CHECK(config_error(j) == "operations[0].color");

    j = minimal();
    j["operations"] = json::array({{{"op", "spawn"}, {"color", "red"}}});
    CHECK(config_error(j) == "operations[0].tick");

    j = minimal();
    j["network"] = {{"links", json::array({{{"id", "nowhere"}}})}};
    CHECK(config_error(j) == "network.links[0].id");

    j = minimal();
    j["network"] = {{"default", {{"loss_prob", 1.5}}}};
    CHECK(config_error(j) == "network.default.loss_prob");

    j = minimal();
    j["initial_inventory"] = json::array({{{"x", 1}, {"y", 1}, {"color", "red"}}, {{"x", 1}, {"y", 1}, {"color", "blue"}}});
    CHECK(config_error(j) == "initial_inventory[1].x");

    j = minimal();
    j["initial_inventory"] = json::array({{{"x", 4}, {"y", 1}, {"color", "red"}}});
    CHECK(config_error(j) == "initial_inventory[0].x");

    j = minimal();
    j["physics"] = {{"warehouse", {{"columns", 4}}}};
    CHECK(config_error(j) == "physics.warehouse.columns");

    j = minimal();
    j["attack_script"] = json::array({{{"kind", "jam_link"}, {"trigger", 5}, {"target", "scada-switch"}}});
    CHECK(config_error(j) == "attack_script[0].payload.duration_ticks");

    j = minimal();
    j["attack_script"] = json::array({{{"kind", "modbus_scan"},
                                       {"trigger", 5},
                                       {"target", "MILL"},
                                       {"payload", {{"functions", json::array({6})}}}}});
    CHECK(config_error(j) == "attack_script[0].payload.functions");

    j = minimal();
    j["attack_script"] = json::array({{{"kind", "command_inject"},
                                       {"trigger", 5},
                                       {"target", "FURNACE"},
                                       {"payload", {{"register", "no_such"}, {"value", 1}}}}});
    CHECK(config_error(j) == "attack_script[0].payload.register");
}

TEST_CASE("missing scenario file") {
    CHECK_ERROR(load_scenario("/nonexistent/x.json"), ErrorKind::IoError);
    try {
        load_scenario("/nonexistent/x.json");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("/nonexistent/x.json") != std::string::npos);
    }
}

TEST_CASE("empty capture object enables capture with default names") {
    auto j = minimal();
    j["capture"] = json::object();
    const auto c = parse_scenario(j);
    CHECK(c.capture.enabled);
    CHECK(c.capture.dataset == "t.jsonl");
}

}
