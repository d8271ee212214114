#include "linesim/physics/schema.hpp"
#include "linesim/error.hpp"

#include <array>

namespace linesim::physics {

namespace {

SignalSpec flag(std::string name) { return {std::move(name), 0, 1, "bool"}; }
SignalSpec counts(std::string name, int hi) { return {std::move(name), 0, hi, "counts"}; }

std::vector<SignalSpec> flags(std::initializer_list<const char*> names) {
    std::vector<SignalSpec> out;
    for (auto n : names) out.push_back(flag(n));
    return out;
}

}  // namespace

std::optional<std::size_t> StationSchema::sensor_index(std::string_view name) const {
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        if (sensors[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> StationSchema::coil_index(std::string_view name) const {
    for (std::size_t i = 0; i < coils.size(); ++i) {
        if (coils[i].name == name) return i;
    }
    return std::nullopt;
}

StationSchema build_schema(StationId station, const PhysicsParams& p) {
    StationSchema s{station, {}, {}, {}};
    const int color_hi = p.color.max_value;
    switch (station) {
        case StationId::VC:
            s.sensors = {counts("horizontal", p.vc.horizontal_max),
                         counts("vertical", p.vc.vertical_max),
                         counts("rotation", p.vc.rotation_max),
                         flag("suction"),
                         flag("carrying"),
                         flag("input_present"),
                         flag("wh_out_present"),
                         flag("belt_free"),
                         flag("furnace_ready")};
            s.coils = flags({"h_fwd", "h_back", "v_down", "v_up", "rot_cw", "rot_ccw", "suction"});
            break;
        case StationId::WAREHOUSE:
            s.sensors = {counts("cant_x", p.warehouse.x_max),
                         counts("cant_y", p.warehouse.y_max),
                         flag("holding"),
                         flag("belt_outer"),
                         flag("belt_inner"),
                         flag("belt_running"),
                         flag("out_present"),
                         {"color_reading", 0, color_hi, "raw"}};
            s.coils = flags({"belt_in", "x_fwd", "x_back", "y_fwd", "y_back", "fork_pick", "fork_place"});
            break;
        case StationId::FURNACE:
            s.sensors = flags({"entry_present", "platform_inside", "platform_outside", "chamber_present", "oven_led"});
            s.coils = flags({"platform_in", "platform_out", "oven_start"});
            s.words = {{"oven_ticks", 0, 65535, "ticks"}};
            break;
        case StationId::MILL:
            s.sensors = {counts("transport_pos", p.mpu.transport_max),
                         flag("transport_home"),
                         flag("transport_at_mill"),
                         flag("transport_loaded"),
                         flag("turntable_present"),
                         flag("mill_present"),
                         flag("mill_motor"),
                         flag("eject_piston")};
            s.coils = flags({"transport_fwd", "transport_back", "mill_start", "eject_piston"});
            s.words = {{"mill_ticks", 0, 65535, "ticks"}};
            break;
        case StationId::SORTING:
            s.sensors = {counts("belt_pos", p.sorting.encoder_modulo - 1),
                         flag("barrier_entry"),
                         flag("barrier_exit"),
                         {"color_reading", 0, color_hi, "raw"},
                         {"timer_ticks", 0, 9999, "ticks"},
                         flag("piston_white"),
                         flag("piston_red"),
                         flag("piston_blue"),
                         {"bay_white", 0, 9999, "count"},
                         {"bay_red", 0, 9999, "count"},
                         {"bay_blue", 0, 9999, "count"}};
            s.coils = flags({"belt_on", "piston_white", "piston_red", "piston_blue"});
            break;
    }
    return s;
}

const StationSchema& schema_for(StationId station) {
    static const auto table = [] {
        const PhysicsParams defaults;
        std::array<StationSchema, kStationCount> t{};
        for (auto s : kAllStations) t[index_of(s)] = build_schema(s, defaults);
        return t;
    }();
    return table[index_of(station)];
}

int SensorFrame::get(std::string_view name) const {
    const auto idx = schema_for(station).sensor_index(name);
    if (!idx) throw Error(ErrorKind::UnknownParameter, std::string(to_string(station)) + "." + std::string(name));
    return values.at(*idx);
}

ActuatorImage ActuatorImage::zero(StationId station) {
    const auto& s = schema_for(station);
    ActuatorImage a;
    a.station = station;
    a.coils.assign(s.coils.size(), false);
    a.words.assign(s.words.size(), 0);
    return a;
}

bool ActuatorImage::any() const {
    for (bool b : coils) {
        if (b) return true;
    }
    for (int w : words) {
        if (w != 0) return true;
    }
    return false;
}

}  // namespace linesim::physics
