#pragma once

#include "linesim/modbus/pdu.hpp"

#include <random>

// Generators of valid requests and responses for round-trip fuzzing.
namespace testing {

using linesim::modbus::ExceptionCode;
using linesim::modbus::Function;
using linesim::modbus::Request;
using linesim::modbus::Response;

inline Request random_request(std::mt19937_64& rng) {
    static const Function fns[] = {Function::ReadCoils,           Function::ReadDiscreteInputs,
                                   Function::ReadHoldingRegisters, Function::ReadInputRegisters,
                                   Function::WriteSingleCoil,     Function::WriteSingleRegister,
                                   Function::WriteMultipleCoils,  Function::WriteMultipleRegisters};
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    Request r;
    r.function = fns[pick(0, 7)];
    r.address = static_cast<std::uint16_t>(pick(0, 65535));
    switch (r.function) {
        case Function::ReadCoils:
        case Function::ReadDiscreteInputs: r.quantity = static_cast<std::uint16_t>(pick(1, 2000)); break;
        case Function::ReadHoldingRegisters:
        case Function::ReadInputRegisters: r.quantity = static_cast<std::uint16_t>(pick(1, 125)); break;
        case Function::WriteSingleCoil: r.bits = {pick(0, 1) == 1}; break;
        case Function::WriteSingleRegister: r.registers = {static_cast<std::uint16_t>(pick(0, 65535))}; break;
        case Function::WriteMultipleCoils:
            r.quantity = static_cast<std::uint16_t>(pick(1, 1968));
            for (int i = 0; i < r.quantity; ++i) r.bits.push_back(pick(0, 1) == 1);
            break;
        case Function::WriteMultipleRegisters:
            r.quantity = static_cast<std::uint16_t>(pick(1, 123));
            for (int i = 0; i < r.quantity; ++i) r.registers.push_back(static_cast<std::uint16_t>(pick(0, 65535)));
            break;
    }
    return r;
}

inline Response random_response(std::mt19937_64& rng, std::uint16_t& asked) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    Response r;
    asked = 0;
    switch (pick(0, 4)) {
        case 0:
            r.function = static_cast<std::uint8_t>(pick(3, 4));
            for (int i = pick(1, 125); i > 0; --i) r.registers.push_back(static_cast<std::uint16_t>(pick(0, 65535)));
            break;
        case 1:
            r.function = static_cast<std::uint8_t>(pick(1, 2));
            asked = static_cast<std::uint16_t>(pick(1, 2000));
            for (int i = 0; i < asked; ++i) r.bits.push_back(pick(0, 1) == 1);
            break;
        case 2:
            r.function = 0x06;
            r.address = static_cast<std::uint16_t>(pick(0, 65535));
            r.registers = {static_cast<std::uint16_t>(pick(0, 65535))};
            break;
        case 3:
            r.function = static_cast<std::uint8_t>(pick(0, 1) ? 0x0F : 0x10);
            r.address = static_cast<std::uint16_t>(pick(0, 65535));
            r.quantity = static_cast<std::uint16_t>(pick(1, 123));
            break;
        default:
            r.function = static_cast<std::uint8_t>(pick(1, 16));
            r.exception = static_cast<ExceptionCode>(pick(1, 4));
            break;
    }
    return r;
}

}  // namespace testing
