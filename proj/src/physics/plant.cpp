#include "linesim/physics/plant.hpp"
#include "linesim/error.hpp"
#include "linesim/hash.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace linesim::physics {

namespace {

const char* kAxisName[3] = {"horizontal", "vertical", "rotation"};
const char* kBaySlot[3] = {"bay_white", "bay_red", "bay_blue"};

bool covers(int front, int length, int x) { return front - length <= x && x < front; }

std::string rack_slot(int x, int y) {
    return "rack(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

void hash_opt(Fnv1a& h, const std::optional<CylinderId>& c) {
    h.boolean(c.has_value());
    h.u64(c.value_or(0));
}

}  // namespace

Plant::Plant(PhysicsParams params, NoiseSpec noise, const RngPool& rng)
    : params_(params),
      noise_(noise),
      jitter_rng_(rng.stream("physics.jitter")),
      color_rng_(rng.stream("physics.color")) {
    if (noise_.timing_jitter_ticks < 0 || noise_.color_sensor_std < 0) {
        throw Error(ErrorKind::ConfigInvalid, "noise");
    }
    wh_.rack.assign(static_cast<std::size_t>(params_.warehouse.columns * params_.warehouse.rows), std::nullopt);
    wh_.color_reading = params_.color.baseline;
    sort_.color_reading = params_.color.baseline;
}

void Plant::emit(Tick now, std::string kind, StationId station, std::optional<CylinderId> cyl, std::string detail) {
    events_.push_back(PhysicsEvent{now, std::move(kind), station, cyl, std::move(detail)});
}

std::vector<PhysicsEvent> Plant::drain_events() {
    std::vector<PhysicsEvent> out;
    out.swap(events_);
    return out;
}

std::size_t Plant::rack_index(int x, int y) const {
    const auto& w = params_.warehouse;
    if (x < 1 || x > w.columns || y < 1 || y > w.rows) {
        throw Error(ErrorKind::OutOfBounds, "rack slot " + rack_slot(x, y));
    }
    return static_cast<std::size_t>((y - 1) * w.columns + (x - 1));
}

std::vector<int> Plant::rack_colors() const {
    std::vector<int> out;
    out.reserve(wh_.rack.size());
    for (const auto& slot : wh_.rack) out.push_back(slot ? color_code(registry_.get(*slot).color) : 0);
    return out;
}

CylinderId Plant::spawn(Color color, Tick now) {
    const auto id = registry_.create(color, CylinderState::Raw, Location{StationId::VC, "input"});
    vc_.input.push_back(id);
    emit(now, "spawned", StationId::VC, id, std::string(to_string(color)));
    return id;
}

CylinderId Plant::place_in_rack(int x, int y, Color color) {
    const auto idx = rack_index(x, y);
    if (wh_.rack[idx]) throw Error(ErrorKind::ConfigInvalid, "rack slot " + rack_slot(x, y) + " occupied");
    const auto id = registry_.create(color, CylinderState::Stored, Location{StationId::WAREHOUSE, rack_slot(x, y)});
    wh_.rack[idx] = id;
    return id;
}

bool Plant::detach(CylinderId id) {
    auto take = [id](std::optional<CylinderId>& slot) {
        if (slot == id) {
            slot.reset();
            return true;
        }
        return false;
    };
    if (take(vc_.carrying)) return true;
    if (auto it = std::find(vc_.input.begin(), vc_.input.end(), id); it != vc_.input.end()) {
        vc_.input.erase(it);
        return true;
    }
    if (wh_.belt && wh_.belt->id == id) {
        wh_.belt.reset();
        return true;
    }
    if (take(wh_.fork) || take(wh_.out)) return true;
    for (auto& slot : wh_.rack) {
        if (take(slot)) return true;
    }
    if (take(mpu_.platform) || take(mpu_.turntable) || take(mpu_.carriage) || take(mpu_.mill)) return true;
    auto it = std::find_if(sort_.belt.begin(), sort_.belt.end(), [id](const auto& b) { return b.id == id; });
    if (it != sort_.belt.end()) {
        sort_.belt.erase(it);
        return true;
    }
    // A cylinder dropped on the floor has no holder but is still physically present.
    return registry_.contains(id) && registry_.get(id).location.slot == "floor";
}

void Plant::remove_cylinder(CylinderId id, Tick now) {
    if (!registry_.contains(id)) throw Error(ErrorKind::TargetNotFound, "cylinder " + std::to_string(id));
    const auto state = registry_.get(id).state;
    if (state == CylinderState::Removed || state == CylinderState::Sorted) {
        throw Error(ErrorKind::TargetNotFound, "cylinder " + std::to_string(id) + " is " + std::string(to_string(state)));
    }
    const auto where = registry_.get(id).location;
    detach(id);
    registry_.mark_removed(id);
    emit(now, "removed", where.station, id, where.slot);
}

void Plant::block_gripper(int duration_ticks, Tick now) {
    if (duration_ticks < 0) throw Error(ErrorKind::InvalidParameter, "block duration " + std::to_string(duration_ticks));
    if (duration_ticks == 0) return;
    vc_.blocked_remaining = std::max(vc_.blocked_remaining, duration_ticks);
    emit(now, "gripper_blocked", StationId::VC, std::nullopt, std::to_string(duration_ticks));
}

void Plant::step(StationId station, const ActuatorImage& a, Tick now) {
    switch (station) {
        case StationId::VC: step_vc(a, now); break;
        case StationId::WAREHOUSE: step_warehouse(a, now); break;
        case StationId::FURNACE: step_furnace(a, now); break;
        case StationId::MILL: step_mill(a, now); break;
        case StationId::SORTING: step_sorting(a, now); break;
    }
}

int Plant::jitter_delay() {
    if (noise_.timing_jitter_ticks <= 0) return 0;
    return static_cast<int>(std::lround(std::fabs(jitter_rng_.normal(0.0, noise_.timing_jitter_ticks))));
}

int Plant::color_value(Color c) {
    double v = params_.color.nominal[bay_index(c)];
    if (noise_.color_sensor_std > 0) v += color_rng_.normal(0.0, noise_.color_sensor_std);
    return std::clamp(static_cast<int>(std::lround(v)), 0, params_.color.max_value);
}

bool Plant::at_pose(const VcPose& p) const {
    const auto& c = params_.vc;
    return std::abs(vc_.horizontal - p.horizontal) < c.horizontal_rate &&
           std::abs(vc_.vertical - p.vertical) < c.vertical_rate &&
           std::abs(vc_.rotation - p.rotation) < c.rotation_rate;
}

// ---------------------------------------------------------------- VC

void Plant::step_vc(const ActuatorImage& a, Tick now) {
    const auto& c = params_.vc;
    int* pos[3] = {&vc_.horizontal, &vc_.vertical, &vc_.rotation};
    const int rate[3] = {c.horizontal_rate, c.vertical_rate, c.rotation_rate};
    const int max[3] = {c.horizontal_max, c.vertical_max, c.rotation_max};
    const bool fwd[3] = {a[vc::HFwd], a[vc::VDown], a[vc::RotCw]};
    const bool back[3] = {a[vc::HBack], a[vc::VUp], a[vc::RotCcw]};

    const bool blocked = vc_.blocked();
    for (int i = 0; i < 3; ++i) {
        const bool conflict = fwd[i] && back[i];
        if (conflict && !vc_.conflict[i]) emit(now, "conflicting_command", StationId::VC, std::nullopt, kAxisName[i]);
        vc_.conflict[i] = conflict;
        const int dir = conflict ? 0 : fwd[i] ? 1 : back[i] ? -1 : 0;
        if (dir != vc_.direction[i]) {
            vc_.direction[i] = dir;
            vc_.start_delay[i] = dir != 0 ? jitter_delay() : 0;
        }
        if (blocked || dir == 0) continue;
        if (vc_.start_delay[i] > 0) {
            --vc_.start_delay[i];
            continue;
        }
        *pos[i] = std::clamp(*pos[i] + dir * rate[i], 0, max[i]);
    }
    if (blocked && --vc_.blocked_remaining == 0) emit(now, "gripper_released", StationId::VC);

    const bool suction = a[vc::SuctionOn];
    if (suction && !vc_.suction_on) {
        vc_.suction_on = true;
        vc_pick(now);
    } else if (!suction && vc_.suction_on) {
        vc_.suction_on = false;
        vc_drop(now);
    }
}

void Plant::vc_pick(Tick now) {
    const auto& c = params_.vc;
    if (vc_.carrying) return;
    if (at_pose(c.input) && !vc_.input.empty()) {
        const auto id = vc_.input.front();
        vc_.input.pop_front();
        vc_.carrying = id;
        registry_.move(id, {StationId::VC, "gripper"});
        emit(now, "vc_pick_input", StationId::VC, id);
    } else if (at_pose(c.warehouse_out) && wh_.out) {
        const auto id = *wh_.out;
        wh_.out.reset();
        vc_.carrying = id;
        registry_.move(id, {StationId::VC, "gripper"});
        emit(now, "vc_pick_warehouse", StationId::VC, id);
    } else {
        emit(now, "vc_pick_empty", StationId::VC);
    }
}

void Plant::vc_drop(Tick now) {
    if (!vc_.carrying) return;
    const auto id = *vc_.carrying;
    vc_.carrying.reset();
    const auto& c = params_.vc;
    if (at_pose(c.warehouse_in) && !wh_.belt) {
        wh_.belt = WarehouseState::OnBelt{id, 0};
        registry_.move(id, {StationId::WAREHOUSE, "belt"});
        emit(now, "vc_drop_warehouse", StationId::VC, id);
    } else if (at_pose(c.furnace) && mpu_.platform_progress == 0 && !mpu_.platform) {
        mpu_.platform = id;
        registry_.move(id, {StationId::FURNACE, "platform"});
        emit(now, "vc_drop_furnace", StationId::VC, id);
    } else if (at_pose(c.input)) {
        vc_.input.push_front(id);
        registry_.move(id, {StationId::VC, "input"});
        emit(now, "vc_drop_input", StationId::VC, id);
    } else {
        registry_.move(id, {StationId::VC, "floor"});
        emit(now, "vc_drop_floor", StationId::VC, id);
    }
}

// ---------------------------------------------------------------- warehouse

void Plant::step_warehouse(const ActuatorImage& a, Tick now) {
    const auto& w = params_.warehouse;
    wh_.belt_running = a[wh::BeltIn];
    if (wh_.belt_running && wh_.belt) wh_.belt->progress = std::min(wh_.belt->progress + w.belt_rate, w.belt_length);

    auto axis = [&](int& pos, bool f, bool b, int rate, int max, bool& conflict, const char* name) {
        const bool both = f && b;
        if (both && !conflict) emit(now, "conflicting_command", StationId::WAREHOUSE, std::nullopt, name);
        conflict = both;
        if (both || (!f && !b)) return;
        pos = std::clamp(pos + (f ? rate : -rate), 0, max);
    };
    axis(wh_.cantilever_x, a[wh::XFwd], a[wh::XBack], w.x_rate, w.x_max, wh_.conflict[0], "cant_x");
    axis(wh_.cantilever_y, a[wh::YFwd], a[wh::YBack], w.y_rate, w.y_max, wh_.conflict[1], "cant_y");

    auto slot_here = [&]() -> std::optional<std::pair<int, int>> {
        if (wh_.cantilever_x % w.slot_dx != 0 || wh_.cantilever_y % w.slot_dy != 0) return std::nullopt;
        const int x = wh_.cantilever_x / w.slot_dx;
        const int y = wh_.cantilever_y / w.slot_dy;
        if (x < 1 || x > w.columns || y < 1 || y > w.rows) return std::nullopt;
        return std::make_pair(x, y);
    };

    const bool pick = a[wh::ForkPick];
    if (pick && !wh_.last_pick && !wh_.fork) {
        if (wh_.cantilever_x == 0 && wh_.cantilever_y == 0 && wh_.belt && wh_.belt->progress >= w.belt_length) {
            const auto id = wh_.belt->id;
            wh_.belt.reset();
            wh_.fork = id;
            registry_.move(id, {StationId::WAREHOUSE, "fork"});
            emit(now, "wh_pick_belt", StationId::WAREHOUSE, id);
        } else if (auto s = slot_here()) {
            auto& slot = wh_.rack[rack_index(s->first, s->second)];
            if (slot) {
                const auto id = *slot;
                slot.reset();
                wh_.fork = id;
                registry_.advance(id, CylinderState::InTransit);
                registry_.move(id, {StationId::WAREHOUSE, "fork"});
                emit(now, "wh_pick_rack", StationId::WAREHOUSE, id, rack_slot(s->first, s->second));
            }
        }
    }
    wh_.last_pick = pick;

    const bool place = a[wh::ForkPlace];
    if (place && !wh_.last_place && wh_.fork) {
        const auto id = *wh_.fork;
        if (wh_.cantilever_x == w.out_x && wh_.cantilever_y == w.out_y && !wh_.out) {
            wh_.fork.reset();
            wh_.out = id;
            registry_.move(id, {StationId::WAREHOUSE, "out"});
            emit(now, "wh_retrieved", StationId::WAREHOUSE, id);
        } else if (auto s = slot_here()) {
            auto& slot = wh_.rack[rack_index(s->first, s->second)];
            if (!slot) {
                wh_.fork.reset();
                slot = id;
                registry_.advance(id, CylinderState::Stored);
                registry_.move(id, {StationId::WAREHOUSE, rack_slot(s->first, s->second)});
                emit(now, "wh_stored", StationId::WAREHOUSE, id, rack_slot(s->first, s->second));
            }
        }
    }
    wh_.last_place = place;

    if (wh_.belt && wh_.belt->progress >= w.belt_length) {
        wh_.color_reading = color_value(registry_.get(wh_.belt->id).color);
    } else {
        wh_.color_reading = params_.color.baseline;
    }
}

// ---------------------------------------------------------------- furnace

void Plant::step_furnace(const ActuatorImage& a, Tick now) {
    const auto& m = params_.mpu;
    if (mpu_.firing_remaining > 0 && --mpu_.firing_remaining == 0) {
        emit(now, "furnace_fired", StationId::FURNACE, mpu_.platform);
    }

    const bool in = a[furnace::PlatformIn];
    const bool out = a[furnace::PlatformOut];
    const bool both = in && out;
    if (both && !mpu_.platform_conflict) emit(now, "conflicting_command", StationId::FURNACE, std::nullopt, "platform");
    mpu_.platform_conflict = both;
    const int before = mpu_.platform_progress;
    if (!both && in) mpu_.platform_progress = std::min(before + 1, m.platform_travel_ticks);
    if (!both && out) mpu_.platform_progress = std::max(before - 1, 0);

    if (before < m.platform_travel_ticks && mpu_.platform_progress == m.platform_travel_ticks && mpu_.platform) {
        registry_.advance(*mpu_.platform, CylinderState::Firing);
        registry_.move(*mpu_.platform, {StationId::FURNACE, "chamber"});
        emit(now, "furnace_entered", StationId::FURNACE, mpu_.platform);
    }
    if (before > 0 && mpu_.platform_progress == 0 && mpu_.platform) {
        const auto id = *mpu_.platform;
        if (registry_.get(id).state == CylinderState::Firing && !mpu_.turntable) {
            mpu_.platform.reset();
            mpu_.turntable = id;
            registry_.move(id, {StationId::MILL, "turntable"});
            emit(now, "furnace_exit", StationId::FURNACE, id);
        } else {
            registry_.move(id, {StationId::FURNACE, "platform"});
        }
    }

    const bool start = a[furnace::OvenStart];
    if (start && !mpu_.last_oven_start) {
        const int ticks = a.words.at(furnace::OvenTicks);
        if (ticks > 0 && mpu_.firing_remaining == 0 && mpu_.platform_progress == m.platform_travel_ticks &&
            mpu_.platform) {
            mpu_.firing_remaining = ticks;
            emit(now, "firing_started", StationId::FURNACE, mpu_.platform, std::to_string(ticks));
        }
    }
    mpu_.last_oven_start = start;
}

// ---------------------------------------------------------------- mill + transport

void Plant::step_mill(const ActuatorImage& a, Tick now) {
    const auto& m = params_.mpu;
    if (mpu_.milling_remaining > 0 && --mpu_.milling_remaining == 0) {
        emit(now, "milling_done", StationId::MILL, mpu_.mill);
    }

    const bool fwd = a[mill::TransportFwd];
    const bool back = a[mill::TransportBack];
    const bool both = fwd && back;
    if (both && !mpu_.transport_conflict) emit(now, "conflicting_command", StationId::MILL, std::nullopt, "transport");
    mpu_.transport_conflict = both;
    const int prev = mpu_.transport_pos;
    if (!both && fwd) mpu_.transport_pos = std::min(prev + m.transport_rate, m.transport_max);
    if (!both && back) mpu_.transport_pos = std::max(prev - m.transport_rate, 0);
    const int pos = mpu_.transport_pos;

    if (prev == 0 && pos > 0 && mpu_.turntable && !mpu_.carriage) {
        mpu_.carriage = mpu_.turntable;
        mpu_.turntable.reset();
        registry_.move(*mpu_.carriage, {StationId::MILL, "transport"});
        emit(now, "transport_loaded", StationId::MILL, mpu_.carriage);
    }
    if (pos == m.mill_position && prev != m.mill_position) {
        if (mpu_.carriage && !mpu_.mill) {
            const auto id = *mpu_.carriage;
            mpu_.carriage.reset();
            mpu_.mill = id;
            registry_.advance(id, CylinderState::Milling);
            registry_.move(id, {StationId::MILL, "mill"});
            emit(now, "mill_arrival", StationId::MILL, id);
        } else if (!mpu_.carriage && mpu_.mill && mpu_.milling_remaining == 0) {
            const auto id = *mpu_.mill;
            mpu_.mill.reset();
            mpu_.carriage = id;
            registry_.advance(id, CylinderState::Finished);
            registry_.move(id, {StationId::MILL, "transport"});
            emit(now, "mill_pickup", StationId::MILL, id);
        }
    }
    if (prev != 0 && pos == 0 && mpu_.carriage && !mpu_.turntable) {
        mpu_.turntable = mpu_.carriage;
        mpu_.carriage.reset();
        registry_.move(*mpu_.turntable, {StationId::MILL, "turntable"});
        emit(now, "transport_unloaded", StationId::MILL, mpu_.turntable);
    }

    const bool start = a[mill::MillStart];
    if (start && !mpu_.last_mill_start) {
        const int ticks = a.words.at(mill::MillTicks);
        if (ticks > 0 && mpu_.milling_remaining == 0 && mpu_.mill) {
            mpu_.milling_remaining = ticks;
            emit(now, "milling_started", StationId::MILL, mpu_.mill, std::to_string(ticks));
        }
    }
    mpu_.last_mill_start = start;

    const bool eject = a[mill::EjectPistonOn];
    if (eject && !mpu_.eject_piston && mpu_.turntable && pos == 0) {
        const auto id = *mpu_.turntable;
        mpu_.turntable.reset();
        sort_.belt.push_back(SortingState::OnBelt{id, params_.sorting.entry_barrier + 1});
        registry_.move(id, {StationId::SORTING, "belt"});
        emit(now, "ejected", StationId::MILL, id);
    }
    mpu_.eject_piston = eject;
}

// ---------------------------------------------------------------- sorting

void Plant::step_sorting(const ActuatorImage& a, Tick now) {
    const auto& s = params_.sorting;
    if (a[sorting::BeltOn]) {
        sort_.belt_pos = (sort_.belt_pos + s.belt_rate) % s.encoder_modulo;
        for (auto& item : sort_.belt) item.front = std::min(item.front + s.belt_rate, s.belt_end);
    }

    const bool fire[3] = {a[sorting::FireWhite], a[sorting::FireRed], a[sorting::FireBlue]};
    for (std::size_t k = 0; k < 3; ++k) {
        if (fire[k] && !sort_.pistons[k]) {
            const int target = s.piston_position[k];
            auto it = std::find_if(sort_.belt.begin(), sort_.belt.end(), [&](const auto& item) {
                return std::abs(item.front - s.cylinder_length / 2 - target) <= s.piston_reach;
            });
            if (it != sort_.belt.end()) {
                const auto id = it->id;
                sort_.belt.erase(it);
                sort_.bays[k].push_back(id);
                registry_.advance(id, CylinderState::Sorted);
                registry_.move(id, {StationId::SORTING, kBaySlot[k]});
                const auto color = registry_.get(id).color;
                emit(now, "cylinder_sorted", StationId::SORTING, id, kBaySlot[k]);
                if (bay_index(color) != k) emit(now, "missorted", StationId::SORTING, id, std::string(to_string(color)));
            }
        }
        sort_.pistons[k] = fire[k];
    }

    const bool was_exit = sort_.barrier_exit;
    sort_.barrier_entry = std::any_of(sort_.belt.begin(), sort_.belt.end(),
                                      [&](const auto& i) { return covers(i.front, s.cylinder_length, s.entry_barrier); });
    sort_.barrier_exit = std::any_of(sort_.belt.begin(), sort_.belt.end(),
                                     [&](const auto& i) { return covers(i.front, s.cylinder_length, s.exit_barrier); });
    if (sort_.barrier_exit && !was_exit) {
        sort_.timer_running = true;
        sort_.timer_ticks = 0;
    } else if (sort_.timer_running) {
        sort_.timer_ticks = std::min(sort_.timer_ticks + 1, 9999);
    }

    sort_.color_reading = params_.color.baseline;
    for (const auto& item : sort_.belt) {
        const int center = item.front - s.cylinder_length / 2;
        if (center >= s.enclosure_lo && center <= s.enclosure_hi) {
            sort_.color_reading = color_value(registry_.get(item.id).color);
            break;
        }
    }
}

// ---------------------------------------------------------------- sensors

SensorFrame Plant::read_sensors(StationId station, Tick tick) const {
    SensorFrame f;
    f.station = station;
    f.tick = tick;
    auto& v = f.values;
    auto b = [](bool x) { return x ? 1 : 0; };
    switch (station) {
        case StationId::VC:
            v.resize(vc::kSensors);
            v[vc::Horizontal] = vc_.horizontal;
            v[vc::Vertical] = vc_.vertical;
            v[vc::Rotation] = vc_.rotation;
            v[vc::Suction] = b(vc_.suction_on);
            v[vc::Carrying] = b(vc_.carrying.has_value());
            v[vc::InputPresent] = b(!vc_.input.empty());
            v[vc::WhOutPresent] = b(wh_.out.has_value());
            v[vc::BeltFree] = b(!wh_.belt.has_value());
            v[vc::FurnaceReady] = b(mpu_.platform_progress == 0 && !mpu_.platform);
            break;
        case StationId::WAREHOUSE: {
            const auto& w = params_.warehouse;
            v.resize(wh::kSensors);
            v[wh::CantX] = wh_.cantilever_x;
            v[wh::CantY] = wh_.cantilever_y;
            v[wh::Holding] = b(wh_.fork.has_value());
            v[wh::BeltOuter] = b(wh_.belt && wh_.belt->progress < w.outer_zone);
            v[wh::BeltInner] = b(wh_.belt && wh_.belt->progress >= w.belt_length);
            v[wh::BeltRunning] = b(wh_.belt_running);
            v[wh::OutPresent] = b(wh_.out.has_value());
            v[wh::ColorReading] = wh_.color_reading;
            break;
        }
        case StationId::FURNACE: {
            const int travel = params_.mpu.platform_travel_ticks;
            v.resize(furnace::kSensors);
            v[furnace::EntryPresent] = b(mpu_.platform && mpu_.platform_progress == 0);
            v[furnace::PlatformInside] = b(mpu_.platform_progress == travel);
            v[furnace::PlatformOutside] = b(mpu_.platform_progress == 0);
            v[furnace::ChamberPresent] = b(mpu_.platform && mpu_.platform_progress == travel);
            v[furnace::OvenLed] = b(mpu_.oven_led_on());
            break;
        }
        case StationId::MILL:
            v.resize(mill::kSensors);
            v[mill::TransportPos] = mpu_.transport_pos;
            v[mill::TransportHome] = b(mpu_.transport_pos == 0);
            v[mill::TransportAtMill] = b(mpu_.transport_pos == params_.mpu.mill_position);
            v[mill::TransportLoaded] = b(mpu_.carriage.has_value());
            v[mill::TurntablePresent] = b(mpu_.turntable.has_value());
            v[mill::MillPresent] = b(mpu_.mill.has_value());
            v[mill::MillMotor] = b(mpu_.mill_motor_on());
            v[mill::EjectPiston] = b(mpu_.eject_piston);
            break;
        case StationId::SORTING:
            v.resize(sorting::kSensors);
            v[sorting::BeltPos] = sort_.belt_pos;
            v[sorting::BarrierEntry] = b(sort_.barrier_entry);
            v[sorting::BarrierExit] = b(sort_.barrier_exit);
            v[sorting::ColorReading] = sort_.color_reading;
            v[sorting::TimerTicks] = sort_.timer_ticks;
            v[sorting::PistonWhite] = b(sort_.pistons[0]);
            v[sorting::PistonRed] = b(sort_.pistons[1]);
            v[sorting::PistonBlue] = b(sort_.pistons[2]);
            v[sorting::BayWhite] = static_cast<int>(sort_.bays[0].size());
            v[sorting::BayRed] = static_cast<int>(sort_.bays[1].size());
            v[sorting::BayBlue] = static_cast<int>(sort_.bays[2].size());
            break;
    }
    return f;
}

std::uint64_t Plant::state_hash() const {
    Fnv1a h;
    h.i64(vc_.horizontal);
    h.i64(vc_.vertical);
    h.i64(vc_.rotation);
    h.boolean(vc_.suction_on);
    hash_opt(h, vc_.carrying);
    h.i64(vc_.blocked_remaining);
    for (int i = 0; i < 3; ++i) {
        h.i64(vc_.direction[i]);
        h.i64(vc_.start_delay[i]);
    }
    for (auto id : vc_.input) h.u64(id);
    h.i64(wh_.cantilever_x);
    h.i64(wh_.cantilever_y);
    h.boolean(wh_.belt.has_value());
    if (wh_.belt) {
        h.u64(wh_.belt->id);
        h.i64(wh_.belt->progress);
    }
    h.boolean(wh_.belt_running);
    hash_opt(h, wh_.fork);
    for (const auto& s : wh_.rack) hash_opt(h, s);
    hash_opt(h, wh_.out);
    h.i64(wh_.color_reading);
    h.i64(mpu_.platform_progress);
    hash_opt(h, mpu_.platform);
    h.i64(mpu_.firing_remaining);
    hash_opt(h, mpu_.turntable);
    h.i64(mpu_.transport_pos);
    hash_opt(h, mpu_.carriage);
    hash_opt(h, mpu_.mill);
    h.i64(mpu_.milling_remaining);
    h.boolean(mpu_.eject_piston);
    h.i64(sort_.belt_pos);
    for (const auto& item : sort_.belt) {
        h.u64(item.id);
        h.i64(item.front);
    }
    h.boolean(sort_.barrier_entry);
    h.boolean(sort_.barrier_exit);
    h.i64(sort_.color_reading);
    h.i64(sort_.timer_ticks);
    for (bool p : sort_.pistons) h.boolean(p);
    for (const auto& bay : sort_.bays) {
        h.u64(bay.size());
        for (auto id : bay) h.u64(id);
    }
    for (const auto& [id, c] : registry_.all()) {
        h.u64(id);
        h.u8(static_cast<std::uint8_t>(c.color));
        h.u8(static_cast<std::uint8_t>(c.state));
        h.str(c.location.slot);
    }
    return h.value();
}

}  // namespace linesim::physics
