#include "linesim/modbus/client.hpp"

namespace linesim::modbus {

std::uint32_t FabricClient::conn_for(const net::NodeId& server) {
    auto it = conns_.find(server);
    if (it != conns_.end()) return it->second;
    const auto id = conn_base_ + static_cast<std::uint32_t>(conns_.size());
    conns_.emplace(server, id);
    return id;
}

std::uint16_t FabricClient::next_txn() {
    do {
        ++txn_;
    } while (txn_ == 0 || pending_.count(txn_) != 0);
    return txn_;
}

std::uint16_t FabricClient::send(net::Fabric& fabric, const net::NodeId& server, const Request& req, Tick now,
                                 Tick timeout_ticks) {
    const auto txn = next_txn();
    const auto frame = make_request(txn, unit_, req);
    std::optional<std::uint16_t> qty;
    if (req.function == Function::ReadCoils || req.function == Function::ReadDiscreteInputs) qty = req.quantity;
    pending_[txn] = Pending{server, req, qty, now, now + timeout_ticks};
    fabric.send(net::Packet{self_, server, conn_for(server), encode(frame), now}, now);
    return txn;
}

std::uint16_t FabricClient::send_raw(net::Fabric& fabric, const net::NodeId& server, std::uint8_t function,
                                     Bytes payload, Tick now, Tick timeout_ticks) {
    const auto txn = next_txn();
    ModbusFrame frame;
    frame.transaction_id = txn;
    frame.unit_id = unit_;
    frame.function = function;
    frame.payload = std::move(payload);
    Request placeholder;
    placeholder.function = static_cast<Function>(function);
    pending_[txn] = Pending{server, placeholder, std::nullopt, now, now + timeout_ticks};
    fabric.send(net::Packet{self_, server, conn_for(server), encode(frame), now}, now);
    return txn;
}

void FabricClient::on_packet(const net::Packet& packet, Tick now) {
    const auto decoded = decode_one(packet.bytes);
    if (!decoded || decoded->status != FrameStatus::Ok) return;
    auto it = pending_.find(decoded->frame.transaction_id);
    if (it == pending_.end() || it->second.server != packet.src) return;
    auto resp = parse_response(decoded->frame, it->second.quantity);
    Completion c;
    c.txn = it->first;
    c.server = it->second.server;
    c.request = it->second.request;
    c.sent = it->second.sent;
    c.done = now;
    if (resp) {
        c.outcome = resp->exception ? Outcome::Exception : Outcome::Ok;
        c.response = std::move(resp);
    } else {
        c.outcome = Outcome::Exception;
    }
    pending_.erase(it);
    done_.push_back(std::move(c));
}

void FabricClient::expire(Tick now) {
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (now >= it->second.deadline) {
            Completion c;
            c.txn = it->first;
            c.server = it->second.server;
            c.request = it->second.request;
            c.outcome = Outcome::Timeout;
            c.sent = it->second.sent;
            c.done = now;
            done_.push_back(std::move(c));
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }
}

std::vector<Completion> FabricClient::drain() {
    std::vector<Completion> out;
    out.swap(done_);
    return out;
}

std::size_t FabricClient::outstanding_to(const net::NodeId& server) const {
    std::size_t n = 0;
    for (const auto& [txn, p] : pending_) n += p.server == server;
    return n;
}

void FabricClient::reset() {
    pending_.clear();
    done_.clear();
}

}  // namespace linesim::modbus
