#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/kernel/rng.hpp"
#include "linesim/physics/cylinder.hpp"
#include "linesim/physics/params.hpp"
#include "linesim/physics/schema.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace linesim::physics {

// Something physically noteworthy that happened during a step. Attack
// predicates and tests key off `kind`.
struct PhysicsEvent {
    Tick tick = 0;
    std::string kind;
    StationId station = StationId::VC;
    std::optional<CylinderId> cylinder;
    std::string detail;
};

struct VcState {
    int horizontal = 0;
    int vertical = 0;
    int rotation = 0;
    bool suction_on = false;
    std::optional<CylinderId> carrying;
    int blocked_remaining = 0;
    std::array<int, 3> direction{};   // last commanded direction per axis
    std::array<int, 3> start_delay{}; // remaining jitter delay per axis
    std::array<bool, 3> conflict{};
    std::deque<CylinderId> input;     // material-arrival tray

    bool blocked() const noexcept { return blocked_remaining > 0; }
};

struct WarehouseState {
    struct OnBelt {
        CylinderId id;
        int progress;
    };
    int cantilever_x = 0;
    int cantilever_y = 0;
    std::optional<OnBelt> belt;
    bool belt_running = false;
    std::optional<CylinderId> fork;
    std::vector<std::optional<CylinderId>> rack;  // index (y-1)*columns + (x-1)
    std::optional<CylinderId> out;
    int color_reading = 0;
    bool last_pick = false;
    bool last_place = false;
    std::array<bool, 2> conflict{};
};

struct MpuState {
    int platform_progress = 0;  // 0 = outside, travel = inside
    std::optional<CylinderId> platform;
    int firing_remaining = 0;
    bool last_oven_start = false;
    std::optional<CylinderId> turntable;
    int transport_pos = 0;
    std::optional<CylinderId> carriage;
    std::optional<CylinderId> mill;
    int milling_remaining = 0;
    bool last_mill_start = false;
    bool eject_piston = false;
    bool platform_conflict = false;
    bool transport_conflict = false;

    bool oven_led_on() const noexcept { return firing_remaining > 0; }
    bool mill_motor_on() const noexcept { return milling_remaining > 0; }
};

struct SortingState {
    struct OnBelt {
        CylinderId id;
        int front;  // leading edge; the cylinder spans [front - length, front)
    };
    int belt_pos = 0;
    std::vector<OnBelt> belt;
    bool barrier_entry = false;
    bool barrier_exit = false;
    int color_reading = 0;
    int timer_ticks = 0;
    bool timer_running = false;
    std::array<bool, 3> pistons{};
    std::array<std::vector<CylinderId>, 3> bays;  // white, red, blue
};

// All station states plus the cylinder registry. Stations are stepped one at
// a time by the kernel in a fixed order; hand-offs between stations mutate
// the receiving station's state directly.
class Plant {
public:
    Plant(PhysicsParams params, NoiseSpec noise, const RngPool& rng);

    void step(StationId station, const ActuatorImage& actuators, Tick now);
    SensorFrame read_sensors(StationId station, Tick tick) const;

    // Creates a raw cylinder on the material-arrival tray.
    CylinderId spawn(Color color, Tick now);
    // Initial inventory: a stored cylinder in rack slot (x, y), 1-based.
    CylinderId place_in_rack(int x, int y, Color color);
    // Throws TargetNotFound for an unknown or already removed/sorted cylinder.
    void remove_cylinder(CylinderId id, Tick now);
    void block_gripper(int duration_ticks, Tick now);

    std::vector<PhysicsEvent> drain_events();

    const PhysicsParams& params() const noexcept { return params_; }
    const CylinderRegistry& cylinders() const noexcept { return registry_; }
    const VcState& vc() const noexcept { return vc_; }
    const WarehouseState& warehouse() const noexcept { return wh_; }
    const MpuState& mpu() const noexcept { return mpu_; }
    const SortingState& sorting() const noexcept { return sort_; }

    std::size_t rack_index(int x, int y) const;
    // Color code (0 empty) per rack slot, in rack index order.
    std::vector<int> rack_colors() const;

    std::uint64_t state_hash() const;

private:
    void step_vc(const ActuatorImage& a, Tick now);
    void step_warehouse(const ActuatorImage& a, Tick now);
    void step_furnace(const ActuatorImage& a, Tick now);
    void step_mill(const ActuatorImage& a, Tick now);
    void step_sorting(const ActuatorImage& a, Tick now);

    void vc_pick(Tick now);
    void vc_drop(Tick now);
    bool at_pose(const VcPose& pose) const;
    int jitter_delay();
    int color_value(Color c);
    void emit(Tick now, std::string kind, StationId station, std::optional<CylinderId> cyl = std::nullopt,
              std::string detail = {});
    bool detach(CylinderId id);

    PhysicsParams params_;
    NoiseSpec noise_;
    RngStream jitter_rng_;
    RngStream color_rng_;
    CylinderRegistry registry_;
    VcState vc_;
    WarehouseState wh_;
    MpuState mpu_;
    SortingState sort_;
    std::vector<PhysicsEvent> events_;
};

}  // namespace linesim::physics
