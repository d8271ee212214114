#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/physics/params.hpp"
#include "linesim/types.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace linesim::physics {

struct SignalSpec {
    std::string name;
    int lo = 0;
    int hi = 1;
    std::string unit;  // "counts", "bool", "ticks", "raw", "count"
};

// Sensor and actuator layout of one station. The order is the export order
// of SensorFrame values and the order of PLC input registers / coils.
struct StationSchema {
    StationId station;
    std::vector<SignalSpec> sensors;
    std::vector<SignalSpec> coils;   // boolean actuator outputs
    std::vector<SignalSpec> words;   // word-valued actuator outputs (hardware timers)

    std::optional<std::size_t> sensor_index(std::string_view name) const;
    std::optional<std::size_t> coil_index(std::string_view name) const;
};

// Ranges follow the physics parameters (encoder maxima etc.).
StationSchema build_schema(StationId station, const PhysicsParams& params);
// Schema under default parameters; names and order never depend on parameters.
const StationSchema& schema_for(StationId station);

// Index constants, kept in sync with the tables in schema.cpp.
namespace vc {
enum Sensor : std::size_t { Horizontal, Vertical, Rotation, Suction, Carrying, InputPresent, WhOutPresent, BeltFree, FurnaceReady, kSensors };
enum Coil : std::size_t { HFwd, HBack, VDown, VUp, RotCw, RotCcw, SuctionOn, kCoils };
}  // namespace vc

namespace wh {
enum Sensor : std::size_t { CantX, CantY, Holding, BeltOuter, BeltInner, BeltRunning, OutPresent, ColorReading, kSensors };
enum Coil : std::size_t { BeltIn, XFwd, XBack, YFwd, YBack, ForkPick, ForkPlace, kCoils };
}  // namespace wh

namespace furnace {
enum Sensor : std::size_t { EntryPresent, PlatformInside, PlatformOutside, ChamberPresent, OvenLed, kSensors };
enum Coil : std::size_t { PlatformIn, PlatformOut, OvenStart, kCoils };
enum Word : std::size_t { OvenTicks, kWords };
}  // namespace furnace

namespace mill {
enum Sensor : std::size_t { TransportPos, TransportHome, TransportAtMill, TransportLoaded, TurntablePresent, MillPresent, MillMotor, EjectPiston, kSensors };
enum Coil : std::size_t { TransportFwd, TransportBack, MillStart, EjectPistonOn, kCoils };
enum Word : std::size_t { MillTicks, kWords };
}  // namespace mill

namespace sorting {
enum Sensor : std::size_t { BeltPos, BarrierEntry, BarrierExit, ColorReading, TimerTicks, PistonWhite, PistonRed, PistonBlue, BayWhite, BayRed, BayBlue, kSensors };
enum Coil : std::size_t { BeltOn, FireWhite, FireRed, FireBlue, kCoils };
}  // namespace sorting

struct SensorFrame {
    StationId station = StationId::VC;
    Tick tick = 0;
    std::vector<int> values;

    int operator[](std::size_t i) const { return values.at(i); }
    // Throws Error(UnknownParameter) for a name outside the station schema.
    int get(std::string_view name) const;

    friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

struct ActuatorImage {
    StationId station = StationId::VC;
    std::vector<bool> coils;
    std::vector<int> words;

    static ActuatorImage zero(StationId station);
    bool operator[](std::size_t i) const { return coils.at(i); }
    bool any() const;

    friend bool operator==(const ActuatorImage&, const ActuatorImage&) = default;
};

}  // namespace linesim::physics
