#include "linesim/plc/plc.hpp"
#include "linesim/error.hpp"
#include "linesim/hash.hpp"
#include "linesim/modbus/pdu.hpp"

#include <algorithm>

namespace linesim::plc {

using modbus::ExceptionCode;
using modbus::Function;

PlcInstance::PlcInstance(StationId station, const physics::PhysicsParams& params, int tick_ms,
                         int scan_period_ticks, std::uint16_t port)
    : station_(station),
      tick_ms_(tick_ms),
      scan_period_(scan_period_ticks),
      port_(port == 0 ? default_port(station) : port),
      program_(make_program(station, params)),
      outputs_(physics::ActuatorImage::zero(station)) {
    if (scan_period_ < 1) throw Error(ErrorKind::ConfigInvalid, "scan_period_ticks");
    const auto& schema = physics::schema_for(station);
    image_.discrete_inputs.assign(schema.sensors.size(), false);
    image_.input_registers.assign(schema.sensors.size() + 1, 0);
    image_.coils.assign(schema.coils.size(), false);
    for (const auto& spec : holding_map(station)) image_.holding_registers.push_back(spec.initial);
}

const physics::ActuatorImage& PlcInstance::scan(const physics::SensorFrame& sensors) {
    for (std::size_t i = 0; i < sensors.values.size(); ++i) {
        const int v = std::clamp(sensors.values[i], 0, 65535);
        image_.input_registers[i] = static_cast<std::uint16_t>(v);
        image_.discrete_inputs[i] = v != 0;
    }
    outputs_ = physics::ActuatorImage::zero(station_);
    ScanIo io{sensors, image_.holding_registers, outputs_, diagnostics_, tick_ms_};
    program_->scan(io);
    image_.input_registers.back() = program_->state_code();
    for (std::size_t i = 0; i < outputs_.coils.size(); ++i) image_.coils[i] = outputs_.coils[i];
    return outputs_;
}

std::vector<ParamSpec> PlcInstance::parameters() const {
    std::vector<ParamSpec> out;
    const auto& map = holding_map(station_);
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map[i].writable) out.push_back({map[i].name, i, map[i].lo, map[i].hi});
    }
    return out;
}

void PlcInstance::set_parameter(std::string_view name, int value) {
    for (const auto& p : parameters()) {
        if (p.name != name) continue;
        if (value < p.lo || value > p.hi) {
            throw Error(ErrorKind::OutOfBounds, std::string(name) + "=" + std::to_string(value) + " not in [" +
                                                    std::to_string(p.lo) + ", " + std::to_string(p.hi) + "]");
        }
        image_.holding_registers[p.address] = static_cast<std::uint16_t>(value);
        return;
    }
    throw Error(ErrorKind::UnknownParameter, std::string(to_string(station_)) + "." + std::string(name));
}

int PlcInstance::parameter(std::string_view name) const {
    for (const auto& p : parameters()) {
        if (p.name == name) return image_.holding_registers[p.address];
    }
    throw Error(ErrorKind::UnknownParameter, std::string(to_string(station_)) + "." + std::string(name));
}

void PlcInstance::preset_holding(std::size_t address, std::uint16_t value) {
    image_.holding_registers.at(address) = value;
}

modbus::ModbusFrame PlcInstance::handle_request(const modbus::ModbusFrame& frame) {
    const auto txn = frame.transaction_id;
    const auto unit = frame.unit_id;
    auto fail = [&](ExceptionCode code) { return modbus::make_exception(txn, unit, frame.function, code); };

    const auto parsed = modbus::parse_request(frame);
    if (!parsed.request) return fail(parsed.error);
    const auto& req = *parsed.request;
    const std::size_t addr = req.address;

    auto in_range = [&](std::size_t size, std::size_t count) { return addr + count <= size; };
    modbus::Response resp;
    resp.function = frame.function;
    resp.address = req.address;

    switch (req.function) {
        case Function::ReadCoils:
        case Function::ReadDiscreteInputs: {
            const auto& bits = req.function == Function::ReadCoils ? image_.coils : image_.discrete_inputs;
            if (!in_range(bits.size(), req.quantity)) return fail(ExceptionCode::IllegalDataAddress);
            resp.bits.assign(bits.begin() + static_cast<long>(addr), bits.begin() + static_cast<long>(addr + req.quantity));
            break;
        }
        case Function::ReadHoldingRegisters:
        case Function::ReadInputRegisters: {
            const auto& regs =
                req.function == Function::ReadHoldingRegisters ? image_.holding_registers : image_.input_registers;
            if (!in_range(regs.size(), req.quantity)) return fail(ExceptionCode::IllegalDataAddress);
            resp.registers.assign(regs.begin() + static_cast<long>(addr), regs.begin() + static_cast<long>(addr + req.quantity));
            break;
        }
        case Function::WriteSingleCoil:
        case Function::WriteMultipleCoils: {
            const std::size_t n = req.bits.size();
            if (!in_range(image_.coils.size(), n)) return fail(ExceptionCode::IllegalDataAddress);
            PendingWrite w{true, req.address, {}};
            for (bool b : req.bits) w.values.push_back(b ? 1 : 0);
            pending_.push_back(std::move(w));
            resp.bits = req.bits;
            resp.quantity = static_cast<std::uint16_t>(n);
            break;
        }
        case Function::WriteSingleRegister:
        case Function::WriteMultipleRegisters: {
            const auto& map = holding_map(station_);
            const std::size_t n = req.registers.size();
            if (!in_range(map.size(), n)) return fail(ExceptionCode::IllegalDataAddress);
            for (std::size_t i = 0; i < n; ++i) {
                if (!map[addr + i].writable) return fail(ExceptionCode::IllegalDataAddress);
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto& spec = map[addr + i];
                if (req.registers[i] < spec.lo || req.registers[i] > spec.hi) return fail(ExceptionCode::IllegalDataValue);
            }
            pending_.push_back(PendingWrite{false, req.address, req.registers});
            resp.registers = req.registers;
            resp.quantity = static_cast<std::uint16_t>(n);
            break;
        }
    }
    return modbus::make_response(txn, unit, resp);
}

void PlcInstance::apply_pending_writes() {
    for (const auto& w : pending_) {
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            if (w.coil) image_.coils[w.address + i] = w.values[i] != 0;
            else image_.holding_registers[w.address + i] = w.values[i];
        }
    }
    pending_.clear();
}

std::vector<std::string> PlcInstance::drain_diagnostics() {
    std::vector<std::string> out;
    out.swap(diagnostics_);
    return out;
}

std::uint64_t PlcInstance::state_hash() const {
    Fnv1a h;
    h.u8(static_cast<std::uint8_t>(station_));
    program_->hash(h);
    for (auto v : image_.holding_registers) h.u64(v);
    for (auto v : image_.input_registers) h.u64(v);
    for (bool b : image_.coils) h.boolean(b);
    return h.value();
}

}  // namespace linesim::plc
