#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/modbus/frame.hpp"
#include "linesim/modbus/pdu.hpp"
#include "linesim/net/fabric.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace linesim::modbus {

enum class Outcome { Ok, Exception, Timeout };

struct Completion {
    std::uint16_t txn = 0;
    net::NodeId server;
    Request request;
    Outcome outcome = Outcome::Timeout;
    std::optional<Response> response;   // set for Ok and Exception
    Tick sent = 0;
    Tick done = 0;
};

// Client endpoint on a fabric node. Requests are pipelined on one connection
// per server and matched to responses by transaction id, not by order.
// Retries are the caller's policy.
class FabricClient {
public:
    FabricClient(net::NodeId self, std::uint32_t conn_base, std::uint8_t unit = 1)
        : self_(std::move(self)), conn_base_(conn_base), unit_(unit) {}

    // Encodes and sends; returns the transaction id.
    std::uint16_t send(net::Fabric& fabric, const net::NodeId& server, const Request& req, Tick now,
                       Tick timeout_ticks);
    // Sends raw PDU bytes (function + payload) as-is, e.g. for unsupported
    // function codes in scans. The completion carries no parsed request.
    std::uint16_t send_raw(net::Fabric& fabric, const net::NodeId& server, std::uint8_t function, Bytes payload,
                           Tick now, Tick timeout_ticks);

    // Feed a packet delivered to this node. Unmatched responses are ignored.
    void on_packet(const net::Packet& packet, Tick now);
    // Moves requests past their deadline into the completion list.
    void expire(Tick now);

    std::vector<Completion> drain();
    std::size_t outstanding() const noexcept { return pending_.size(); }
    std::size_t outstanding_to(const net::NodeId& server) const;
    void reset();  // forget all in-flight requests (client restart)

    const net::NodeId& node() const noexcept { return self_; }

private:
    struct Pending {
        net::NodeId server;
        Request request;
        std::optional<std::uint16_t> quantity;
        Tick sent;
        Tick deadline;
    };

    std::uint32_t conn_for(const net::NodeId& server);
    std::uint16_t next_txn();

    net::NodeId self_;
    std::uint32_t conn_base_;
    std::uint8_t unit_;
    std::uint16_t txn_ = 0;
    std::map<net::NodeId, std::uint32_t> conns_;
    std::map<std::uint16_t, Pending> pending_;
    std::vector<Completion> done_;
};

}  // namespace linesim::modbus
