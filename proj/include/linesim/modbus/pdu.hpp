#pragma once

#include "linesim/modbus/frame.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace linesim::modbus {

struct QuantityLimit {
    std::uint16_t min;
    std::uint16_t max;
};

// Per-function quantity bounds from the Modbus application protocol.
std::optional<QuantityLimit> quantity_limit(Function f) noexcept;

struct Request {
    Function function = Function::ReadHoldingRegisters;
    std::uint16_t address = 0;
    std::uint16_t quantity = 1;         // reads and multi-writes; 1 for single writes
    std::vector<std::uint16_t> registers;  // 0x06 (one value) and 0x10
    std::vector<bool> bits;                // 0x05 (one value) and 0x0F

    bool is_write() const noexcept;
    friend bool operator==(const Request&, const Request&) = default;
};

struct Response {
    std::uint8_t function = 0;  // base function code, exception bit stripped
    std::optional<ExceptionCode> exception;
    std::uint16_t address = 0;           // write echoes
    std::uint16_t quantity = 0;          // 0x0F / 0x10 echoes
    std::vector<std::uint16_t> registers;  // 0x03/0x04 data, 0x06 echo value
    std::vector<bool> bits;                // 0x01/0x02 data, 0x05 echo value

    friend bool operator==(const Response&, const Response&) = default;
};

// Builders validate quantities (InvalidQuantity) and PDU size (PayloadTooLarge).
ModbusFrame make_request(std::uint16_t txn, std::uint8_t unit, const Request& req);
ModbusFrame make_response(std::uint16_t txn, std::uint8_t unit, const Response& resp);
ModbusFrame make_exception(std::uint16_t txn, std::uint8_t unit, std::uint8_t function, ExceptionCode code);

struct ParsedRequest {
    std::optional<Request> request;
    ExceptionCode error = ExceptionCode::IllegalDataValue;  // valid only when !request
};

// Server-side parse. Unsupported function -> IllegalFunction; malformed body
// or out-of-range quantity -> IllegalDataValue.
ParsedRequest parse_request(const ModbusFrame& frame);

// Client-side parse. `requested_quantity` trims bit reads to the number of bits
// asked for; without it all bits of the returned bytes are kept.
std::optional<Response> parse_response(const ModbusFrame& frame,
                                       std::optional<std::uint16_t> requested_quantity = std::nullopt);

std::string function_name(std::uint8_t code);

}  // namespace linesim::modbus
