#pragma once

#include <array>
#include <cstdint>

namespace linesim::physics {

// Arm pose of the vacuum gripper in encoder counts.
struct VcPose {
    int horizontal = 0;
    int vertical = 0;
    int rotation = 0;

    friend bool operator==(const VcPose&, const VcPose&) = default;
};

// Default motion rates, ranges and sensor nominals are stand-ins chosen so
// every target is an integer number of ticks away; they carry no claim about
// the reference hardware.
struct VcParams {
    int horizontal_max = 400;
    int vertical_max = 600;
    int rotation_max = 1200;
    int horizontal_rate = 8;
    int vertical_rate = 12;
    int rotation_rate = 12;
    VcPose home{0, 0, 0};
    VcPose input{240, 360, 0};
    VcPose warehouse_in{120, 360, 480};
    VcPose warehouse_out{120, 360, 600};
    VcPose furnace{240, 300, 960};
};

struct WarehouseParams {
    int columns = 3;
    int rows = 3;
    int belt_length = 60;       // progress counts from the outer to the inner end
    int belt_rate = 3;
    int outer_zone = 30;        // outer light barrier sees progress < outer_zone
    int x_max = 400;
    int y_max = 500;
    int x_rate = 10;
    int y_rate = 10;
    int slot_dx = 100;          // rack slot (X, Y) sits at (X*slot_dx, Y*slot_dy)
    int slot_dy = 100;
    int out_x = 0;              // hand-over point for retrieved cylinders
    int out_y = 400;
};

struct MpuParams {
    int platform_travel_ticks = 25;
    int transport_max = 400;
    int transport_rate = 10;
    int mill_position = 300;
};

struct SortingParams {
    int belt_rate = 3;
    int cylinder_length = 30;
    int entry_barrier = 30;
    int enclosure_lo = 90;      // color sensor sees cylinders whose center lies in [lo, hi]
    int enclosure_hi = 120;
    int exit_barrier = 150;
    std::array<int, 3> piston_position{210, 270, 330};  // white, red, blue (cylinder center)
    int piston_reach = 6;
    int belt_end = 420;
    int encoder_modulo = 10000;
};

struct ColorSensorParams {
    int baseline = 900;
    std::array<int, 3> nominal{1200, 1600, 2200};  // white, red, blue
    int max_value = 4095;
};

struct PhysicsParams {
    VcParams vc;
    WarehouseParams warehouse;
    MpuParams mpu;
    SortingParams sorting;
    ColorSensorParams color;
};

struct NoiseSpec {
    double timing_jitter_ticks = 0.0;   // std-dev of the start delay of each gripper axis motion
    double color_sensor_std = 0.0;      // std-dev of color readings
};

}  // namespace linesim::physics
