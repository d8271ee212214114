#include "linesim/attack/engine.hpp"
#include "linesim/kernel/world.hpp"

#include "doctest.h"
#include "support.hpp"

using namespace linesim;
using nlohmann::json;

namespace {

std::unique_ptr<World> attacked(json script, Tick ticks, json inventory = json::array()) {
    json j{{"schema_version", 1},
           {"name", "attack_unit"},
           {"duration_ticks", ticks},
           {"initial_inventory", inventory},
           {"attack_script", script}};
    auto w = std::make_unique<World>(parse_scenario(j));
    while (w->now() < ticks) w->advance_tick();
    w->finish();
    return w;
}

const attack::DirectiveReport& report(World& w, const std::string& label) {
    for (const auto& r : w.attacks()->reports()) {
        if (r.label == label) return r;
    }
    FAIL("no report " << label);
    throw;
}

}  // namespace

TEST_SUITE("attack") {

TEST_CASE("command injection writes through Modbus and restores") {
    auto w = attacked(json::array({{{"kind", "command_inject"},
                                    {"label", "inj"},
                                    {"target", "FURNACE"},
                                    {"trigger", 50},
                                    {"payload",
                                     {{"register", "firing_time_ms"},
                                      {"value", 3000},
                                      {"restore_after_ticks", 30},
                                      {"restore_value", 1000}}}}}),
                      120);
    const auto& r = report(*w, "inj");
    CHECK(r.status == "done");
    CHECK(r.frames_sent == 2);
    CHECK(r.exceptions == 0);
    CHECK(r.start == 50);
    CHECK(w->plc(StationId::FURNACE).parameter("firing_time_ms") == 1000);
    const auto gt = w->attacks()->ground_truth();
    REQUIRE(gt.size() == 1);
    CHECK(gt[0].kind == "command_inject");
    CHECK(gt[0].start == 50);
    CHECK(gt[0].end >= 80);
}

TEST_CASE("injected value is live until the restore") {
    json j{{"schema_version", 1},
           {"name", "inj"},
           {"duration_ticks", 200},
           {"attack_script",
            json::array({{{"kind", "command_inject"},
                          {"target", "MILL"},
                          {"trigger", 10},
                          {"payload", {{"register", "milling_time_ms"}, {"value", 2000}}}}})}};
    World w(parse_scenario(j));
    while (w.now() < 30) w.advance_tick();
    CHECK(w.plc(StationId::MILL).parameter("milling_time_ms") == 2000);
}

TEST_CASE("modbus scan walks functions by addresses at the given rate") {
    auto w = attacked(json::array({{{"kind", "modbus_scan"},
                                    {"label", "scan"},
                                    {"target", "MILL"},
                                    {"trigger", 10},
                                    {"payload", {{"start", 0}, {"end", 9}, {"functions", {3, 4}}, {"rate", 4}}}}}),
                      100);
    const auto& r = report(*w, "scan");
    CHECK(r.status == "done");
    CHECK(r.frames_sent == 20);
    CHECK(r.timeouts == 0);
    CHECK(r.exceptions > 0);
    const auto gt = w->attacks()->ground_truth();
    REQUIRE(gt.size() == 1);
    CHECK(gt[0].start == 10);
    // Five ticks of sending at four frames per tick; the interval ends with the last answer.
    CHECK(gt[0].end >= 14);
}

TEST_CASE("jam ground truth is the jam window") {
    auto w = attacked(json::array({{{"kind", "jam_link"},
                                    {"label", "jam"},
                                    {"target", "scada-switch"},
                                    {"trigger", 10},
                                    {"payload", {{"duration_ticks", 5}}}}}),
                      40);
    const auto gt = w->attacks()->ground_truth();
    REQUIRE(gt.size() == 1);
    CHECK(gt[0].start == 10);
    CHECK(gt[0].end == 14);
    REQUIRE(w->fabric().stats("scada-switch").jam_windows.size() == 1);
    CHECK(w->fabric().stats("scada-switch").jam_windows[0] == std::pair<Tick, Tick>{10, 14});
}

TEST_CASE("overlapping intervals of the same kind and target merge") {
    auto w = attacked(json::array({{{"kind", "block_gripper"}, {"trigger", 10}, {"payload", {{"duration_ticks", 20}}}},
                                   {{"kind", "block_gripper"}, {"trigger", 20}, {"payload", {{"duration_ticks", 20}}}}}),
                      60);
    const auto gt = w->attacks()->ground_truth();
    REQUIRE(gt.size() == 1);
    CHECK(gt[0].start == 10);
    CHECK(gt[0].end == 39);
}

TEST_CASE("predicate that never matches is reported and leaves no ground truth") {
    auto w = attacked(json::array({{{"kind", "block_gripper"},
                                    {"label", "never"},
                                    {"trigger", {{"on", "furnace_fired"}}},
                                    {"payload", {{"duration_ticks", 20}}}}}),
                      50);
    CHECK(report(*w, "never").status == "not_triggered");
    CHECK(w->attacks()->ground_truth().empty());
}

TEST_CASE("remove a stored cylinder by id") {
    auto w = attacked(json::array({{{"kind", "remove_cylinder"},
                                    {"label", "rm"},
                                    {"target", "WAREHOUSE"},
                                    {"trigger", 5},
                                    {"payload", {{"cylinder", 1}}}},
                                   {{"kind", "remove_cylinder"},
                                    {"label", "gone"},
                                    {"target", "WAREHOUSE"},
                                    {"trigger", 6},
                                    {"payload", {{"cylinder", 1}}}}}),
                      30, json::array({{{"x", 1}, {"y", 1}, {"color", "red"}}}));
    CHECK(w->plant().cylinders().get(1).state == physics::CylinderState::Removed);
    CHECK(report(*w, "rm").status == "done");
    CHECK(report(*w, "gone").status == "failed");
    // The warehouse PLC was not told; supervision still lists the slot.
    CHECK(w->scada().inventory().size() == 1);
    CHECK(w->plant().rack_colors()[w->plant().rack_index(1, 1)] == 0);
}

TEST_CASE("parse script") {
    const auto topo = net::Topology::default_topology();
    auto d = attack::parse_directive(
        json{{"kind", "modbus_scan"}, {"target", "MILL"}, {"trigger", {{"on", "mill_arrival"}, {"delay", 3}}}}, 0, topo);
    CHECK(d.kind == attack::Kind::ModbusScan);
    CHECK(d.label == "modbus_scan#0");
    CHECK(d.trigger.on == "mill_arrival");
    CHECK(d.trigger.delay == 3);
    CHECK(d.scan_functions == std::vector<std::uint8_t>{0x03});
    CHECK_ERROR(attack::parse_directive(json{{"kind", "teleport"}, {"trigger", 1}}, 2, topo), ErrorKind::ConfigInvalid);
    CHECK_ERROR(attack::parse_script(json{{"kind", "jam_link"}}, topo), ErrorKind::ConfigInvalid);
    CHECK_ERROR(attack::parse_directive(json{{"kind", "block_gripper"}, {"target", "MILL"}, {"trigger", 1},
                                             {"payload", {{"duration_ticks", 1}}}},
                                        0, topo),
                ErrorKind::ConfigInvalid);
}

}
