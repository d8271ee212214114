#pragma once

#include "linesim/modbus/frame.hpp"
#include "linesim/modbus/pdu.hpp"
#include "linesim/net/tcp.hpp"

#include <chrono>
#include <cstdint>

namespace linesim::modbus {

// Blocking client over a real TCP socket. Used by the CLI probe and by
// interoperability tests.
class TcpClient {
public:
    TcpClient(const net::Endpoint& ep, std::chrono::milliseconds timeout, std::uint8_t unit = 1);

    // Throws Timeout, ExceptionResponse(code) or IoError.
    Response call(const Request& req);
    // Raw PDU exchange; returns the decoded response frame.
    DecodedFrame call_raw(std::uint8_t function, const Bytes& payload);

    std::vector<std::uint16_t> read_holding(std::uint16_t address, std::uint16_t count);
    std::vector<std::uint16_t> read_input(std::uint16_t address, std::uint16_t count);
    void write_register(std::uint16_t address, std::uint16_t value);

private:
    DecodedFrame exchange(const ModbusFrame& frame);

    net::Socket sock_;
    std::chrono::milliseconds timeout_;
    std::uint8_t unit_;
    std::uint16_t txn_ = 0;
    StreamDecoder decoder_;
};

}  // namespace linesim::modbus
