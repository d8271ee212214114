#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/modbus/frame.hpp"
#include "linesim/physics/params.hpp"
#include "linesim/physics/schema.hpp"
#include "linesim/plc/program.hpp"
#include "linesim/plc/register_map.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace linesim::plc {

struct RegisterImage {
    std::vector<bool> discrete_inputs;         // sensor != 0, schema order
    std::vector<bool> coils;                   // actuator outputs
    std::vector<std::uint16_t> input_registers;  // sensors in schema order, then plc_state
    std::vector<std::uint16_t> holding_registers;
};

struct ParamSpec {
    std::string name;
    std::size_t address;
    std::uint16_t lo;
    std::uint16_t hi;
};

// Soft-PLC for one station. Scan: inputs from the sensor frame, program,
// outputs to coils. Remote Modbus writes are validated on receipt and applied
// at the next tick boundary, so a remote read never sees a half-done scan.
class PlcInstance {
public:
    PlcInstance(StationId station, const physics::PhysicsParams& params, int tick_ms = kDefaultTickMs,
                int scan_period_ticks = 1, std::uint16_t port = 0);

    StationId station() const noexcept { return station_; }
    std::uint16_t port() const noexcept { return port_; }
    int scan_period() const noexcept { return scan_period_; }
    bool scan_due(Tick now) const noexcept { return now % scan_period_ == 0; }

    const physics::ActuatorImage& scan(const physics::SensorFrame& sensors);
    const physics::ActuatorImage& outputs() const noexcept { return outputs_; }
    const RegisterImage& image() const noexcept { return image_; }
    std::uint16_t state_code() const { return program_->state_code(); }
    std::string_view state_name() const { return program_->state_name(); }

    std::vector<ParamSpec> parameters() const;
    // Throws UnknownParameter / OutOfBounds. Visible to the next scan.
    void set_parameter(std::string_view name, int value);
    int parameter(std::string_view name) const;
    // Direct holding-register preset, used to load warehouse inventory at start.
    void preset_holding(std::size_t address, std::uint16_t value);

    // Modbus server side. Returns the response (possibly an exception).
    modbus::ModbusFrame handle_request(const modbus::ModbusFrame& request);
    void apply_pending_writes();
    std::size_t pending_writes() const noexcept { return pending_.size(); }

    std::vector<std::string> drain_diagnostics();
    std::uint64_t state_hash() const;

private:
    struct PendingWrite {
        bool coil;
        std::uint16_t address;
        std::vector<std::uint16_t> values;  // 0/1 for coils
    };

    StationId station_;
    int tick_ms_;
    int scan_period_;
    std::uint16_t port_;
    std::unique_ptr<ControlProgram> program_;
    RegisterImage image_;
    physics::ActuatorImage outputs_;
    std::vector<PendingWrite> pending_;
    std::vector<std::string> diagnostics_;
};

}  // namespace linesim::plc
