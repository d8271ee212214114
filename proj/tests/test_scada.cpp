#include "linesim/kernel/world.hpp"
#include "linesim/plc/register_map.hpp"

#include "doctest.h"
#include "support.hpp"

using namespace linesim;
using scada::OrderStatus;

namespace {

std::unique_ptr<World> world(const std::string& name, bool keep_ops = false) {
    auto cfg = testing::scenario(name);
    cfg.capture.enabled = false;
    if (!keep_ops) cfg.operations.clear();
    cfg.attacks.clear();
    return std::make_unique<World>(std::move(cfg));
}

void advance(World& w, int n) {
    for (int i = 0; i < n; ++i) w.advance_tick();
}

}  // namespace

TEST_SUITE("scada") {

TEST_CASE("poll rounds make every station fresh") {
    auto w = world("order");
    for (auto s : kAllStations) CHECK(w->scada().view(s).stale);
    advance(*w, 20);
    for (auto s : kAllStations) {
        const auto& v = w->scada().view(s);
        CHECK_FALSE(v.stale);
        CHECK(v.sampled_tick >= v.round_sent);
        CHECK(v.holding_registers.size() == plc::holding_map(s).size());
    }
    const auto inv = w->scada().inventory();
    REQUIRE(inv.size() == 1);
    CHECK(inv[0].x == 1);
    CHECK(inv[0].y == 1);
    CHECK(inv[0].color == Color::Blue);
}

TEST_CASE("order validation") {
    auto w = world("order");
    CHECK_ERROR(w->scada().place_order(Color::Blue, 1000, 1000, w->now()), ErrorKind::Unavailable);
    advance(*w, 20);
    CHECK_ERROR(w->scada().place_order(Color::Red, 1000, 1000, w->now()), ErrorKind::OutOfStock);
    CHECK_ERROR(w->scada().place_order(Color::Blue, -1, 1000, w->now()), ErrorKind::InvalidParameter);
    CHECK_ERROR(w->scada().place_order(Color::Blue, 1000, 60001, w->now()), ErrorKind::InvalidParameter);
    const auto& o = w->scada().place_order(Color::Blue, 1000, 1000, w->now());
    CHECK(o.status == OrderStatus::Queued);
    // The only blue cylinder is reserved now.
    CHECK_ERROR(w->scada().place_order(Color::Blue, 1000, 1000, w->now()), ErrorKind::OutOfStock);
}

TEST_CASE("order goes through every stage in order") {
    auto w = world("order", true);
    advance(*w, 800);
    REQUIRE(w->scada().orders().size() == 1);
    const auto& o = w->scada().orders()[0];
    CHECK(o.status == OrderStatus::Done);
    std::vector<OrderStatus> seen;
    Tick prev = -1;
    for (const auto& [s, t] : o.history) {
        seen.push_back(s);
        CHECK(t >= prev);
        prev = t;
    }
    CHECK(seen == std::vector<OrderStatus>{OrderStatus::Queued, OrderStatus::Fetching, OrderStatus::Firing,
                                           OrderStatus::Milling, OrderStatus::Sorting, OrderStatus::Done});
    CHECK(w->plant().sorting().bays[bay_index(Color::Blue)].size() == 1);
}

TEST_CASE("parameter write is acknowledged and visible in the PLC") {
    auto w = world("order");
    advance(*w, 10);
    std::optional<scada::WriteResult> result;
    w->scada().write_parameter(StationId::FURNACE, "firing_time_ms", 2500,
                               [&](const scada::WriteResult& r) { result = r; });
    for (int i = 0; i < 20 && !result; ++i) w->advance_tick();
    REQUIRE(result);
    CHECK(result->outcome == scada::WriteOutcome::Ok);
    CHECK(w->plc(StationId::FURNACE).parameter("firing_time_ms") == 2500);
    CHECK_ERROR(w->scada().write_parameter(StationId::FURNACE, "fired_count", 1, {}), ErrorKind::UnknownParameter);
    CHECK_ERROR(w->scada().write_parameter(StationId::FURNACE, "firing_time_ms", 70000, {}), ErrorKind::OutOfBounds);
}

TEST_CASE("timeouts retry with the configured policy, then mark the station stale") {
    auto w = world("order");
    advance(*w, 20);
    const auto& set = w->scada().settings();
    const auto before = w->scada().request_log().size();
    w->fabric().set_jam("scada-switch", true, std::nullopt, w->now());
    std::optional<scada::WriteResult> result;
    w->scada().write_parameter(StationId::MILL, "milling_time_ms", 1500, [&](const scada::WriteResult& r) { result = r; });
    advance(*w, (set.timeout_ticks + set.backoff_ticks) * (set.retries + 1) + 5);
    REQUIRE(result);
    CHECK(result->outcome == scada::WriteOutcome::Timeout);
    for (auto s : kAllStations) CHECK(w->scada().view(s).stale);
    int write_attempts = 0;
    const auto& log = w->scada().request_log();
    for (std::size_t i = before; i < log.size(); ++i) {
        if (log[i].outcome == scada::RequestOutcome::Pending) continue;
        CHECK(log[i].outcome == scada::RequestOutcome::Timeout);
        CHECK(log[i].completed - log[i].sent == set.timeout_ticks);
        if (log[i].function == 0x06) ++write_attempts;
    }
    CHECK(write_attempts == set.retries + 1);
    CHECK(w->plc(StationId::MILL).parameter("milling_time_ms") == 1000);
}

TEST_CASE("restart drops order tracking but leaves the plant alone") {
    auto w = world("order", true);
    advance(*w, 60);
    REQUIRE(w->scada().orders().size() == 1);
    const auto plant_hash = w->plant().state_hash();
    w->restart_scada();
    CHECK(w->scada().orders().empty());
    CHECK(w->plant().state_hash() == plant_hash);
    advance(*w, 20);
    CHECK_FALSE(w->scada().view(StationId::FURNACE).stale);
}

}
