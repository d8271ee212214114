#include "linesim/net/fabric.hpp"

#include "doctest.h"
#include "support.hpp"

using namespace linesim;
using namespace linesim::net;

namespace {

Packet pkt(const std::string& src, const std::string& dst, std::size_t size = 12) {
    Packet p;
    p.src = src;
    p.dst = dst;
    p.bytes.assign(size, 0xAB);
    return p;
}

Topology two_nodes(double latency_ms, double bw = 10e6, double loss = 0.0) {
    Topology t;
    t.nodes = {"a", "b"};
    t.links = {LinkSpec{"a-b", "a", "b", latency_ms, bw, loss}};
    return t;
}

// Ticks at which packets reach their destination, advancing from `from` to `to`.
std::vector<Tick> arrivals(Fabric& f, Tick from, Tick to) {
    std::vector<Tick> out;
    for (Tick t = from; t <= to; ++t) {
        f.begin_tick(t);
        for (auto& p : f.advance(t)) {
            (void)p;
            out.push_back(t);
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("delivery tick rounds latency plus serialization half up") {
    RngPool rng(1);
    Fabric f30(two_nodes(30), 20, rng);
    CHECK(f30.delivery_tick("a-b", 0, 100) == 102);      // 1.5 ticks -> 2
    Fabric f29(two_nodes(29), 20, rng);
    CHECK(f29.delivery_tick("a-b", 0, 100) == 101);      // 1.45 -> 1
    Fabric fbw(two_nodes(0, 1000), 20, rng);
    CHECK(fbw.delivery_tick("a-b", 10, 0) == 1);         // 10 ms of transmission = 0.5 tick
    CHECK(fbw.delivery_tick("a-b", 9, 0) == 0);
}

TEST_CASE("default topology routes through the switch") {
    auto topo = Topology::default_topology();
    CHECK(topo.has_node("FURNACE"));
    CHECK(topo.find_link("scada-switch"));
    Fabric f(topo, 20, RngPool(1));
    auto hop = f.next_hop(kScada, "FURNACE");
    REQUIRE(hop);
    CHECK(hop->first == "scada-switch");
    f.send(pkt(kScada, "FURNACE"), 0);
    // 20 ms per hop, two hops.
    CHECK(arrivals(f, 0, 5) == std::vector<Tick>{2});
    CHECK(f.stats("scada-switch").delivered == 1);
    CHECK(f.stats("switch-FURNACE").delivered == 1);
}

TEST_CASE("unknown route") {
    Fabric f(Topology::default_topology(), 20, RngPool(1));
    CHECK_ERROR(f.send(pkt(kScada, "nowhere"), 0), ErrorKind::UnknownLink);
    CHECK_ERROR(f.stats("nope"), ErrorKind::UnknownLink);
}

TEST_CASE("per-direction FIFO") {
    Fabric f(two_nodes(0, 1000), 20, RngPool(1));
    f.send(pkt("a", "b", 60), 0);   // 3 ticks on the wire
    f.send(pkt("a", "b", 1), 0);    // would arrive at 0 alone
    std::vector<std::size_t> got;
    for (Tick t = 0; t <= 5; ++t) {
        for (auto& p : f.advance(t)) got.push_back(p.bytes.size());
    }
    CHECK(got == std::vector<std::size_t>{60, 1});
}

TEST_CASE("jam with duration covers exactly d ticks") {
    Fabric f(two_nodes(0), 20, RngPool(1));
    f.set_jam("a-b", true, 3, 5);
    std::vector<Tick> jammed;
    for (Tick t = 0; t <= 10; ++t) {
        f.begin_tick(t);
        if (f.jammed("a-b", t)) jammed.push_back(t);
        f.send(pkt("a", "b"), t);
        f.advance(t);
    }
    CHECK(jammed == std::vector<Tick>{5, 6, 7});
    CHECK(f.stats("a-b").dropped_jam == 3);
    CHECK(f.stats("a-b").delivered == 8);
    REQUIRE(f.stats("a-b").jam_windows.size() == 1);
    CHECK(f.stats("a-b").jam_windows[0] == std::pair<Tick, Tick>{5, 7});
    std::vector<std::string> kinds;
    for (const auto& e : f.drain_events()) {
        if (e.kind != "drop_jam") kinds.push_back(e.kind);
    }
    CHECK(kinds == std::vector<std::string>{"jam_on", "jam_off"});
}

TEST_CASE("zero-duration jam is a no-op and manual jam lasts until cleared") {
    Fabric f(two_nodes(0), 20, RngPool(1));
    f.set_jam("a-b", true, 0, 1);
    CHECK_FALSE(f.jammed("a-b", 1));
    f.set_jam("a-b", true, std::nullopt, 2);
    f.begin_tick(1000);
    CHECK(f.jammed("a-b", 1000));
    f.set_jam("a-b", false, std::nullopt, 1001);
    CHECK_FALSE(f.jammed("a-b", 1001));
    CHECK(f.stats("a-b").jam_windows.back() == std::pair<Tick, Tick>{2, 1000});
}

TEST_CASE("packets in flight when a jam starts are lost") {
    Fabric f(two_nodes(60), 20, RngPool(1));
    f.send(pkt("a", "b"), 0);   // due at 3
    f.set_jam("a-b", true, 2, 2);
    CHECK(arrivals(f, 0, 6).empty());
}

TEST_CASE("loss probability") {
    Fabric all(two_nodes(0, 10e6, 1.0), 20, RngPool(1));
    Fabric none(two_nodes(0, 10e6, 0.0), 20, RngPool(1));
    Fabric some(two_nodes(0, 10e6, 0.3), 20, RngPool(1));
    for (int i = 0; i < 10000; ++i) {
        all.send(pkt("a", "b"), 0);
        none.send(pkt("a", "b"), 0);
        some.send(pkt("a", "b"), 0);
    }
    CHECK(all.advance(0).empty());
    CHECK(none.advance(0).size() == 10000);
    const double rate = static_cast<double>(some.stats("a-b").dropped_loss) / 10000.0;
    CHECK(rate == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("loss is reproducible per seed") {
    auto run = [](std::uint64_t seed) {
        Fabric f(two_nodes(0, 10e6, 0.5), 20, RngPool(seed));
        std::vector<bool> kept;
        for (int i = 0; i < 200; ++i) {
            f.send(pkt("a", "b"), i);
            kept.push_back(!f.advance(i).empty());
        }
        return kept;
    };
    CHECK(run(3) == run(3));
    CHECK(run(3) != run(4));
}

TEST_CASE("ingress tap sees packets entering a node") {
    Fabric f(Topology::default_topology(), 20, RngPool(1));
    std::vector<std::string> seen;
    f.set_ingress_tap(kSwitch, [&](const Packet& p, Tick t, const std::string& link) {
        seen.push_back(p.src + ">" + p.dst + "@" + link + ":" + std::to_string(t));
    });
    f.send(pkt(kScada, "MILL"), 0);
    arrivals(f, 0, 3);
    CHECK(seen == std::vector<std::string>{"scada>MILL@scada-switch:1"});
}

}
