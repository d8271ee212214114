#include "linesim/modbus/tcp_client.hpp"
#include "linesim/error.hpp"

#include <cstdio>

namespace linesim::modbus {

TcpClient::TcpClient(const net::Endpoint& ep, std::chrono::milliseconds timeout, std::uint8_t unit)
    : sock_(net::Socket::connect(ep, timeout)), timeout_(timeout), unit_(unit) {}

DecodedFrame TcpClient::exchange(const ModbusFrame& frame) {
    const auto bytes = encode(frame);
    if (!sock_.send_all(bytes.data(), bytes.size())) throw Error(ErrorKind::IoError, "send failed");
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::uint8_t buf[1024];
    for (;;) {
        while (auto f = decoder_.next()) {
            if (f->status == FrameStatus::Ok && f->frame.transaction_id == frame.transaction_id) return *f;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw Error(ErrorKind::Timeout, "txn " + std::to_string(frame.transaction_id));
        const long n = sock_.recv_some(buf, sizeof buf, left);
        if (n == -1) continue;
        if (n <= 0) throw Error(ErrorKind::IoError, "connection closed");
        decoder_.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    }
}

DecodedFrame TcpClient::call_raw(std::uint8_t function, const Bytes& payload) {
    ModbusFrame f;
    f.transaction_id = ++txn_;
    f.unit_id = unit_;
    f.function = function;
    f.payload = payload;
    return exchange(f);
}

Response TcpClient::call(const Request& req) {
    const auto reply = exchange(make_request(++txn_, unit_, req));
    std::optional<std::uint16_t> qty;
    if (req.function == Function::ReadCoils || req.function == Function::ReadDiscreteInputs) qty = req.quantity;
    auto resp = parse_response(reply.frame, qty);
    if (!resp) throw Error(ErrorKind::IoError, "malformed response");
    if (resp->exception) {
        char code[8];
        std::snprintf(code, sizeof code, "0x%02x", static_cast<unsigned>(*resp->exception));
        throw Error(ErrorKind::ExceptionResponse, code);
    }
    return *resp;
}

std::vector<std::uint16_t> TcpClient::read_holding(std::uint16_t address, std::uint16_t count) {
    Request r;
    r.function = Function::ReadHoldingRegisters;
    r.address = address;
    r.quantity = count;
    return call(r).registers;
}

std::vector<std::uint16_t> TcpClient::read_input(std::uint16_t address, std::uint16_t count) {
    Request r;
    r.function = Function::ReadInputRegisters;
    r.address = address;
    r.quantity = count;
    return call(r).registers;
}

void TcpClient::write_register(std::uint16_t address, std::uint16_t value) {
    Request r;
    r.function = Function::WriteSingleRegister;
    r.address = address;
    r.registers = {value};
    call(r);
}

}  // namespace linesim::modbus
