#pragma once

#include "linesim/hash.hpp"
#include "linesim/kernel/clock.hpp"
#include "linesim/physics/params.hpp"
#include "linesim/physics/schema.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace linesim::plc {

// What a program sees and may touch during one scan.
struct ScanIo {
    const physics::SensorFrame& in;
    std::vector<std::uint16_t>& holding;  // parameters live here; programs may update counters/status
    physics::ActuatorImage& out;          // zeroed before every scan
    std::vector<std::string>& diagnostics;
    int tick_ms;
};

// A finite state machine driven only by input-image predicates and parameter
// comparisons. Programs never look at wall-clock or simulated time directly.
class ControlProgram {
public:
    virtual ~ControlProgram() = default;
    virtual void scan(ScanIo& io) = 0;
    virtual std::uint16_t state_code() const = 0;
    virtual std::string_view state_name() const = 0;
    virtual void hash(Fnv1a& h) const = 0;
};

std::unique_ptr<ControlProgram> make_program(StationId station, const physics::PhysicsParams& params);

// Milliseconds to whole ticks, rounding half up.
int ms_to_ticks(int ms, int tick_ms) noexcept;

}  // namespace linesim::plc
