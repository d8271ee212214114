#include "linesim/net/fabric.hpp"
#include "linesim/error.hpp"
#include "linesim/hash.hpp"
#include "linesim/types.hpp"

#include <cmath>
#include <deque>
#include <set>

namespace linesim::net {

Topology Topology::default_topology() {
    Topology t;
    t.nodes = {kScada, kSwitch};
    t.links.push_back({"scada-switch", kScada, kSwitch});
    for (auto s : kAllStations) {
        const std::string name(to_string(s));
        t.nodes.push_back(name);
        t.links.push_back({"switch-" + name, kSwitch, name});
    }
    t.nodes.push_back(kAttacker);
    t.links.push_back({"attacker-switch", kAttacker, kSwitch});
    t.nodes.push_back(kExternal);
    t.links.push_back({"external-switch", kExternal, kSwitch});
    return t;
}

const LinkSpec* Topology::find_link(const std::string& id) const {
    for (const auto& l : links) {
        if (l.id == id) return &l;
    }
    return nullptr;
}

bool Topology::has_node(const NodeId& n) const {
    for (const auto& x : nodes) {
        if (x == n) return true;
    }
    return false;
}

Fabric::Fabric(Topology topology, int tick_ms, const RngPool& rng) : topo_(std::move(topology)), tick_ms_(tick_ms) {
    for (const auto& l : topo_.links) {
        if (!topo_.has_node(l.a) || !topo_.has_node(l.b)) {
            throw Error(ErrorKind::ConfigInvalid, "network.links." + l.id);
        }
        if (l.latency_ms < 0 || l.bandwidth_bytes_per_s <= 0 || l.loss_prob < 0 || l.loss_prob > 1) {
            throw Error(ErrorKind::ConfigInvalid, "network.links." + l.id);
        }
        LinkState st{l, false, std::nullopt, std::nullopt, {{-1, -1}}, {}, rng.stream("net.loss." + l.id), {}};
        if (!links_.emplace(l.id, std::move(st)).second) throw Error(ErrorKind::ConfigInvalid, "network.links." + l.id);
    }
    // Static forwarding: BFS from every node; links visited in declaration order.
    for (const auto& src : topo_.nodes) {
        std::map<NodeId, std::pair<std::string, bool>> first_hop;
        std::set<NodeId> seen{src};
        std::deque<NodeId> frontier{src};
        while (!frontier.empty()) {
            const auto cur = frontier.front();
            frontier.pop_front();
            for (const auto& l : topo_.links) {
                const bool fwd = l.a == cur;
                if (!fwd && l.b != cur) continue;
                const auto& next = fwd ? l.b : l.a;
                if (!seen.insert(next).second) continue;
                first_hop[next] = cur == src ? std::make_pair(l.id, fwd) : first_hop[cur];
                frontier.push_back(next);
            }
        }
        for (const auto& [dst, hop] : first_hop) routes_[{src, dst}] = hop;
    }
}

Fabric::LinkState& Fabric::link(const std::string& id) {
    auto it = links_.find(id);
    if (it == links_.end()) throw Error(ErrorKind::UnknownLink, id);
    return it->second;
}

const Fabric::LinkState& Fabric::link(const std::string& id) const {
    auto it = links_.find(id);
    if (it == links_.end()) throw Error(ErrorKind::UnknownLink, id);
    return it->second;
}

std::optional<std::pair<std::string, bool>> Fabric::next_hop(const NodeId& from, const NodeId& to) const {
    auto it = routes_.find({from, to});
    if (it == routes_.end()) return std::nullopt;
    return it->second;
}

Tick Fabric::delivery_tick(const std::string& id, std::size_t size, Tick now) const {
    const auto& l = link(id).spec;
    const double ms = l.latency_ms + static_cast<double>(size) * 1000.0 / l.bandwidth_bytes_per_s;
    return now + static_cast<Tick>(std::floor(ms / tick_ms_ + 0.5));
}

void Fabric::close_jam_window(LinkState& l, Tick end_inclusive) {
    if (l.jam_start) {
        l.stats.jam_windows.emplace_back(*l.jam_start, end_inclusive);
        events_.push_back({end_inclusive + 1, l.spec.id, "jam_off", ""});
    }
    l.jam_start.reset();
    l.jam_until.reset();
    l.jam_manual = false;
}

void Fabric::begin_tick(Tick now) {
    for (auto& [id, l] : links_) {
        if (!l.jam_manual && l.jam_until && now >= *l.jam_until) close_jam_window(l, *l.jam_until - 1);
    }
}

bool Fabric::jammed(const std::string& id, Tick now) const {
    const auto& l = link(id);
    return l.jam_manual || (l.jam_until && now < *l.jam_until && l.jam_start && now >= *l.jam_start);
}

void Fabric::set_jam(const std::string& id, bool on, std::optional<Tick> duration, Tick now) {
    auto& l = link(id);
    if (!on) {
        if (l.jam_start) close_jam_window(l, now - 1);
        return;
    }
    if (duration && *duration <= 0) {
        events_.push_back({now, id, "jam_noop", "duration 0"});
        return;
    }
    if (!l.jam_start) {
        l.jam_start = now;
        events_.push_back({now, id, "jam_on", duration ? std::to_string(*duration) : "manual"});
    }
    if (duration) {
        const Tick until = now + *duration;
        if (!l.jam_until || until > *l.jam_until) l.jam_until = until;
    } else {
        l.jam_manual = true;
    }
}

void Fabric::send(Packet packet, Tick now) {
    if (packet.bytes.empty()) throw Error(ErrorKind::InvalidParameter, "empty payload");
    const auto hop = next_hop(packet.src, packet.dst);
    if (!hop) throw Error(ErrorKind::UnknownLink, packet.src + "->" + packet.dst);
    send_on_link(hop->first, hop->second, std::move(packet), now);
}

void Fabric::send_on_link(const std::string& id, bool forward, Packet packet, Tick now) {
    if (packet.bytes.empty()) throw Error(ErrorKind::InvalidParameter, "empty payload");
    auto& l = link(id);
    ++l.stats.sent;
    if (jammed(id, now)) {
        ++l.stats.dropped_jam;
        events_.push_back({now, id, "drop_jam", packet.src + "->" + packet.dst});
        return;
    }
    if (l.bridge) {
        l.bridge(std::move(packet), forward, now);
        return;
    }
    if (l.spec.loss_prob > 0 && l.loss_rng.bernoulli(l.spec.loss_prob)) {
        ++l.stats.dropped_loss;
        events_.push_back({now, id, "drop_loss", packet.src + "->" + packet.dst});
        return;
    }
    Tick due = delivery_tick(id, packet.bytes.size(), now);
    auto& last = l.last_delivery[forward ? 0 : 1];
    if (due < last) due = last;  // FIFO per direction
    last = due;
    queue_.push(InFlight{due, ++seq_, id, forward, std::move(packet)});
}

void Fabric::arrive(const std::string& id, bool forward, Packet packet, Tick now, std::vector<Packet>& out) {
    auto& l = link(id);
    if (jammed(id, now)) {
        ++l.stats.dropped_jam;
        events_.push_back({now, id, "drop_jam", packet.src + "->" + packet.dst});
        return;
    }
    ++l.stats.delivered;
    l.stats.bytes_delivered += packet.bytes.size();
    const NodeId& at = forward ? l.spec.b : l.spec.a;
    if (auto tap = taps_.find(at); tap != taps_.end()) tap->second(packet, now, id);
    if (at == packet.dst) {
        out.push_back(std::move(packet));
        return;
    }
    const auto hop = next_hop(at, packet.dst);
    if (!hop) return;
    send_on_link(hop->first, hop->second, std::move(packet), now);
}

std::vector<Packet> Fabric::advance(Tick now) {
    std::vector<Packet> out;
    out.swap(bridged_ready_);
    while (!queue_.empty() && queue_.top().deliver <= now) {
        auto item = std::move(const_cast<InFlight&>(queue_.top()));
        queue_.pop();
        arrive(item.link, item.forward, std::move(item.packet), now, out);
    }
    return out;
}

void Fabric::inject_arrival(const std::string& id, bool forward, Packet packet, Tick now) {
    std::vector<Packet> out;
    arrive(id, forward, std::move(packet), now, out);
    // A bridged hop that ends at the destination is handed out by the next advance.
    for (auto& p : out) bridged_ready_.push_back(std::move(p));
}

const LinkStats& Fabric::stats(const std::string& id) const { return link(id).stats; }

std::vector<LinkEvent> Fabric::drain_events() {
    std::vector<LinkEvent> out;
    out.swap(events_);
    return out;
}

void Fabric::set_ingress_tap(const NodeId& node, TapFn tap) { taps_[node] = std::move(tap); }

void Fabric::set_bridge(const std::string& id, BridgeFn fn) { link(id).bridge = std::move(fn); }

std::uint64_t Fabric::state_hash() const {
    Fnv1a h;
    h.u64(seq_);
    h.u64(queue_.size());
    for (const auto& [id, l] : links_) {
        h.str(id);
        h.boolean(jammed(id, 0) || l.jam_start.has_value());
        h.u64(l.stats.sent);
        h.u64(l.stats.delivered);
        h.u64(l.stats.dropped_jam);
        h.u64(l.stats.dropped_loss);
    }
    return h.value();
}

}  // namespace linesim::net
