#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/kernel/rng.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace linesim::net {

using NodeId = std::string;
using Bytes = std::vector<std::uint8_t>;

inline constexpr const char* kScada = "scada";
inline constexpr const char* kSwitch = "switch";
inline constexpr const char* kAttacker = "attacker";
inline constexpr const char* kExternal = "external";

struct LinkSpec {
    std::string id;
    NodeId a;
    NodeId b;
    double latency_ms = 20.0;
    double bandwidth_bytes_per_s = 10e6;
    double loss_prob = 0.0;
};

struct Topology {
    std::vector<NodeId> nodes;
    std::vector<LinkSpec> links;

    // scada, switch, the five PLCs (named like their stations), attacker and
    // external, each attached to the switch by its own link.
    static Topology default_topology();
    const LinkSpec* find_link(const std::string& id) const;
    bool has_node(const NodeId& n) const;
};

// One application message in flight. `conn` identifies the client
// connection so a server can answer on the right stream.
struct Packet {
    NodeId src;
    NodeId dst;
    std::uint32_t conn = 0;
    Bytes bytes;
    Tick sent_tick = 0;
};

struct LinkStats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped_loss = 0;
    std::uint64_t dropped_jam = 0;
    std::uint64_t bytes_delivered = 0;
    std::vector<std::pair<Tick, Tick>> jam_windows;  // inclusive tick ranges
};

struct LinkEvent {
    Tick tick;
    std::string link;
    std::string kind;  // jam_on, jam_off, jam_noop, drop_jam, drop_loss
    std::string detail;
};

// Observer for every packet entering a node from a link (used for capture at
// the switch and for real-socket bridges).
using TapFn = std::function<void(const Packet&, Tick, const std::string& link)>;

// In-process network: links with latency, bandwidth, loss and jamming, plus
// static shortest-path forwarding. Advanced by the kernel at tick phases.
class Fabric {
public:
    Fabric(Topology topology, int tick_ms, const RngPool& rng);

    const Topology& topology() const noexcept { return topo_; }

    // Auto-clears expired jams.
    void begin_tick(Tick now);

    // Routes a packet from its src node toward dst. Throws UnknownLink if no
    // route exists.
    void send(Packet packet, Tick now);
    // Single-hop send on a named link in the direction a->b (forward=true).
    void send_on_link(const std::string& link, bool forward, Packet packet, Tick now);

    // Delivers every packet due at or before `now` (in (deliver_tick, seq)
    // order), forwarding through intermediate nodes. Returns packets that
    // reached their destination.
    std::vector<Packet> advance(Tick now);

    // Jam with a duration d starting at `now` covers ticks [now, now + d - 1];
    // d == 0 is a no-op. Without a duration the jam lasts until cleared.
    void set_jam(const std::string& link, bool on, std::optional<Tick> duration, Tick now);
    bool jammed(const std::string& link, Tick now) const;

    const LinkStats& stats(const std::string& link) const;
    std::vector<LinkEvent> drain_events();

    void set_ingress_tap(const NodeId& node, TapFn tap);

    // Delivery tick for a payload of `size` bytes sent at `now` (before FIFO
    // adjustment): now + round_half_up((latency + size / bandwidth) / tick).
    Tick delivery_tick(const std::string& link, std::size_t size, Tick now) const;
    // Next hop link id and direction from `from` toward `to`.
    std::optional<std::pair<std::string, bool>> next_hop(const NodeId& from, const NodeId& to) const;

    std::size_t in_flight() const noexcept { return queue_.size(); }
    std::uint64_t state_hash() const;

    // Hook used by real-socket bridges: when set for a link, packets sent on
    // it are handed to the hook instead of the emulated queue.
    using BridgeFn = std::function<void(Packet, bool forward, Tick now)>;
    void set_bridge(const std::string& link, BridgeFn fn);
    // Re-injects a bridged packet at the far end of the link.
    void inject_arrival(const std::string& link, bool forward, Packet packet, Tick now);

private:
    struct LinkState {
        LinkSpec spec;
        bool jam_manual = false;
        std::optional<Tick> jam_until;  // exclusive
        std::optional<Tick> jam_start;
        std::array<Tick, 2> last_delivery{{-1, -1}};
        LinkStats stats;
        RngStream loss_rng;
        BridgeFn bridge;
    };
    struct InFlight {
        Tick deliver;
        std::uint64_t seq;
        std::string link;
        bool forward;
        Packet packet;
    };
    struct Later {
        bool operator()(const InFlight& x, const InFlight& y) const noexcept {
            if (x.deliver != y.deliver) return x.deliver > y.deliver;
            return x.seq > y.seq;
        }
    };

    LinkState& link(const std::string& id);
    const LinkState& link(const std::string& id) const;
    void arrive(const std::string& link, bool forward, Packet packet, Tick now, std::vector<Packet>& out);
    void close_jam_window(LinkState& l, Tick end_inclusive);

    Topology topo_;
    int tick_ms_;
    std::map<std::string, LinkState> links_;
    std::map<std::pair<NodeId, NodeId>, std::pair<std::string, bool>> routes_;
    std::priority_queue<InFlight, std::vector<InFlight>, Later> queue_;
    std::uint64_t seq_ = 0;
    std::vector<LinkEvent> events_;
    std::map<NodeId, TapFn> taps_;
    std::vector<Packet> bridged_ready_;
};

}  // namespace linesim::net
