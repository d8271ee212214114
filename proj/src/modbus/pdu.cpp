#include "linesim/modbus/pdu.hpp"
#include "linesim/error.hpp"

#include <cstdio>

namespace linesim::modbus {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint16_t get_u16(const Bytes& b, std::size_t at) {
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

Bytes pack_bits(const std::vector<bool>& bits) {
    Bytes out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    return out;
}

std::vector<bool> unpack_bits(const Bytes& b, std::size_t from, std::size_t byte_count, std::size_t nbits) {
    std::vector<bool> out(nbits);
    for (std::size_t i = 0; i < nbits && i / 8 < byte_count; ++i) {
        out[i] = (b[from + i / 8] >> (i % 8)) & 1u;
    }
    return out;
}

void check_quantity(Function f, std::size_t q) {
    const auto lim = quantity_limit(f);
    if (lim && (q < lim->min || q > lim->max)) {
        throw Error(ErrorKind::InvalidQuantity,
                    "function 0x" + [&] {
                        char b[3];
                        std::snprintf(b, sizeof b, "%02x", static_cast<unsigned>(f));
                        return std::string(b);
                    }() + " quantity " + std::to_string(q));
    }
}

ModbusFrame finish(std::uint16_t txn, std::uint8_t unit, std::uint8_t function, Bytes payload) {
    if (payload.size() + 1 > kMaxPduSize) {
        throw Error(ErrorKind::PayloadTooLarge, std::to_string(payload.size() + 1) + " byte PDU");
    }
    ModbusFrame f;
    f.transaction_id = txn;
    f.unit_id = unit;
    f.function = function;
    f.payload = std::move(payload);
    return f;
}

}  // namespace

std::optional<QuantityLimit> quantity_limit(Function f) noexcept {
    switch (f) {
        case Function::ReadCoils:
        case Function::ReadDiscreteInputs: return QuantityLimit{1, 2000};
        case Function::ReadHoldingRegisters:
        case Function::ReadInputRegisters: return QuantityLimit{1, 125};
        case Function::WriteMultipleCoils: return QuantityLimit{1, 1968};
        case Function::WriteMultipleRegisters: return QuantityLimit{1, 123};
        default: return std::nullopt;
    }
}

bool Request::is_write() const noexcept {
    switch (function) {
        case Function::WriteSingleCoil:
        case Function::WriteSingleRegister:
        case Function::WriteMultipleCoils:
        case Function::WriteMultipleRegisters: return true;
        default: return false;
    }
}

ModbusFrame make_request(std::uint16_t txn, std::uint8_t unit, const Request& req) {
    Bytes p;
    put_u16(p, req.address);
    switch (req.function) {
        case Function::ReadCoils:
        case Function::ReadDiscreteInputs:
        case Function::ReadHoldingRegisters:
        case Function::ReadInputRegisters:
            check_quantity(req.function, req.quantity);
            put_u16(p, req.quantity);
            break;
        case Function::WriteSingleCoil:
            if (req.bits.size() != 1) throw Error(ErrorKind::InvalidQuantity, "single coil needs one value");
            put_u16(p, req.bits[0] ? 0xFF00 : 0x0000);
            break;
        case Function::WriteSingleRegister:
            if (req.registers.size() != 1) throw Error(ErrorKind::InvalidQuantity, "single register needs one value");
            put_u16(p, req.registers[0]);
            break;
        case Function::WriteMultipleCoils: {
            check_quantity(req.function, req.bits.size());
            put_u16(p, static_cast<std::uint16_t>(req.bits.size()));
            const auto packed = pack_bits(req.bits);
            p.push_back(static_cast<std::uint8_t>(packed.size()));
            p.insert(p.end(), packed.begin(), packed.end());
            break;
        }
        case Function::WriteMultipleRegisters:
            check_quantity(req.function, req.registers.size());
            put_u16(p, static_cast<std::uint16_t>(req.registers.size()));
            p.push_back(static_cast<std::uint8_t>(req.registers.size() * 2));
            for (auto v : req.registers) put_u16(p, v);
            break;
    }
    return finish(txn, unit, static_cast<std::uint8_t>(req.function), std::move(p));
}

ModbusFrame make_response(std::uint16_t txn, std::uint8_t unit, const Response& resp) {
    if (resp.exception) return make_exception(txn, unit, resp.function, *resp.exception);
    Bytes p;
    switch (static_cast<Function>(resp.function)) {
        case Function::ReadCoils:
        case Function::ReadDiscreteInputs: {
            check_quantity(static_cast<Function>(resp.function), resp.bits.size());
            const auto packed = pack_bits(resp.bits);
            p.push_back(static_cast<std::uint8_t>(packed.size()));
            p.insert(p.end(), packed.begin(), packed.end());
            break;
        }
        case Function::ReadHoldingRegisters:
        case Function::ReadInputRegisters:
            check_quantity(static_cast<Function>(resp.function), resp.registers.size());
            p.push_back(static_cast<std::uint8_t>(resp.registers.size() * 2));
            for (auto v : resp.registers) put_u16(p, v);
            break;
        case Function::WriteSingleCoil:
            put_u16(p, resp.address);
            put_u16(p, (!resp.bits.empty() && resp.bits[0]) ? 0xFF00 : 0x0000);
            break;
        case Function::WriteSingleRegister:
            put_u16(p, resp.address);
            put_u16(p, resp.registers.empty() ? 0 : resp.registers[0]);
            break;
        case Function::WriteMultipleCoils:
        case Function::WriteMultipleRegisters:
            check_quantity(static_cast<Function>(resp.function), resp.quantity);
            put_u16(p, resp.address);
            put_u16(p, resp.quantity);
            break;
        default:
            throw Error(ErrorKind::InvalidQuantity, "unsupported response function " + function_name(resp.function));
    }
    return finish(txn, unit, resp.function, std::move(p));
}

ModbusFrame make_exception(std::uint16_t txn, std::uint8_t unit, std::uint8_t function, ExceptionCode code) {
    return finish(txn, unit, static_cast<std::uint8_t>((function & 0x7F) | kExceptionBit),
                  Bytes{static_cast<std::uint8_t>(code)});
}

ParsedRequest parse_request(const ModbusFrame& frame) {
    ParsedRequest out;
    if (!is_supported_function(frame.function) || frame.is_exception()) {
        out.error = ExceptionCode::IllegalFunction;
        return out;
    }
    const auto& p = frame.payload;
    Request r;
    r.function = static_cast<Function>(frame.function);
    auto bad = [&] {
        out.error = ExceptionCode::IllegalDataValue;
        return out;
    };
    if (p.size() < 4) return bad();
    r.address = get_u16(p, 0);
    switch (r.function) {
        case Function::ReadCoils:
        case Function::ReadDiscreteInputs:
        case Function::ReadHoldingRegisters:
        case Function::ReadInputRegisters: {
            if (p.size() != 4) return bad();
            r.quantity = get_u16(p, 2);
            const auto lim = *quantity_limit(r.function);
            if (r.quantity < lim.min || r.quantity > lim.max) return bad();
            break;
        }
        case Function::WriteSingleCoil: {
            if (p.size() != 4) return bad();
            const auto v = get_u16(p, 2);
            if (v != 0xFF00 && v != 0x0000) return bad();
            r.bits = {v == 0xFF00};
            break;
        }
        case Function::WriteSingleRegister:
            if (p.size() != 4) return bad();
            r.registers = {get_u16(p, 2)};
            break;
        case Function::WriteMultipleCoils: {
            if (p.size() < 5) return bad();
            r.quantity = get_u16(p, 2);
            const std::size_t bc = p[4];
            const auto lim = *quantity_limit(r.function);
            if (r.quantity < lim.min || r.quantity > lim.max) return bad();
            if (bc != (r.quantity + 7u) / 8u || p.size() != 5 + bc) return bad();
            r.bits = unpack_bits(p, 5, bc, r.quantity);
            break;
        }
        case Function::WriteMultipleRegisters: {
            if (p.size() < 5) return bad();
            r.quantity = get_u16(p, 2);
            const std::size_t bc = p[4];
            const auto lim = *quantity_limit(r.function);
            if (r.quantity < lim.min || r.quantity > lim.max) return bad();
            if (bc != r.quantity * 2u || p.size() != 5 + bc) return bad();
            for (std::size_t i = 0; i < r.quantity; ++i) r.registers.push_back(get_u16(p, 5 + 2 * i));
            break;
        }
    }
    out.request = std::move(r);
    return out;
}

std::optional<Response> parse_response(const ModbusFrame& frame, std::optional<std::uint16_t> requested_quantity) {
    Response r;
    r.function = frame.base_function();
    const auto& p = frame.payload;
    if (frame.is_exception()) {
        if (p.size() != 1) return std::nullopt;
        r.exception = static_cast<ExceptionCode>(p[0]);
        return r;
    }
    if (!is_supported_function(frame.function)) return std::nullopt;
    switch (static_cast<Function>(frame.function)) {
        case Function::ReadCoils:
        case Function::ReadDiscreteInputs: {
            if (p.empty() || p.size() != 1u + p[0]) return std::nullopt;
            std::size_t nbits = static_cast<std::size_t>(p[0]) * 8;
            if (requested_quantity && *requested_quantity <= nbits) nbits = *requested_quantity;
            r.bits = unpack_bits(p, 1, p[0], nbits);
            break;
        }
        case Function::ReadHoldingRegisters:
        case Function::ReadInputRegisters: {
            if (p.empty() || p.size() != 1u + p[0] || (p[0] % 2) != 0) return std::nullopt;
            for (std::size_t i = 0; i < p[0] / 2u; ++i) r.registers.push_back(get_u16(p, 1 + 2 * i));
            break;
        }
        case Function::WriteSingleCoil:
            if (p.size() != 4) return std::nullopt;
            r.address = get_u16(p, 0);
            r.bits = {get_u16(p, 2) == 0xFF00};
            break;
        case Function::WriteSingleRegister:
            if (p.size() != 4) return std::nullopt;
            r.address = get_u16(p, 0);
            r.registers = {get_u16(p, 2)};
            break;
        case Function::WriteMultipleCoils:
        case Function::WriteMultipleRegisters:
            if (p.size() != 4) return std::nullopt;
            r.address = get_u16(p, 0);
            r.quantity = get_u16(p, 2);
            break;
    }
    return r;
}

std::string function_name(std::uint8_t code) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02X", static_cast<unsigned>(code));
    return buf;
}

}  // namespace linesim::modbus
