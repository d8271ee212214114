#include "linesim/plc/program.hpp"
#include "linesim/plc/register_map.hpp"

#include <array>
#include <cstdlib>

namespace linesim::plc {

using physics::ActuatorImage;
using physics::SensorFrame;

int ms_to_ticks(int ms, int tick_ms) noexcept {
    if (ms <= 0 || tick_ms <= 0) return 0;
    return (ms + tick_ms / 2) / tick_ms;
}

namespace {

// Direction to drive an axis toward `target`; stops once within one step.
int toward(int pos, int target, int rate) {
    if (std::abs(pos - target) < rate) return 0;
    return target > pos ? 1 : -1;
}

void drive(ActuatorImage& out, std::size_t fwd, std::size_t back, int dir) {
    if (dir > 0) out.coils[fwd] = true;
    if (dir < 0) out.coils[back] = true;
}

void bump(std::vector<std::uint16_t>& hr, std::size_t addr) {
    hr[addr] = static_cast<std::uint16_t>(hr[addr] + 1);
}

constexpr int kMaxChain = 32;     // transitions per scan before yielding
constexpr int kHandshakeScans = 10;

// ------------------------------------------------------------------ VC

class VcProgram final : public ControlProgram {
public:
    explicit VcProgram(const physics::VcParams& p) : p_(p) {}

    void scan(ScanIo& io) override {
        const auto& in = io.in;
        for (int guard = 0; guard < kMaxChain; ++guard) {
            if (step_ == kIdle) {
                if (in[physics::vc::WhOutPresent] && in[physics::vc::FurnaceReady]) {
                    start(p_.warehouse_out, p_.furnace);
                } else if (in[physics::vc::InputPresent] && in[physics::vc::BeltFree]) {
                    start(p_.input, p_.warehouse_in);
                } else {
                    return;
                }
                continue;
            }
            if (!run_step(io)) return;
            ++step_;
            wait_ = 0;
            if (step_ == kSteps) {
                step_ = kIdle;
                bump(io.holding, hr::kJobCount);
            }
        }
    }

    std::uint16_t state_code() const override {
        if (step_ == kIdle) return 0;
        if (step_ <= 4) return 1;   // FETCH
        if (step_ == 5) return 2;   // PICK
        if (step_ <= 10) return 3;  // DELIVER
        if (step_ == 11) return 4;  // RELEASE
        return 5;                   // RETURN
    }

    std::string_view state_name() const override {
        static constexpr std::array<std::string_view, 6> names = {"IDLE", "FETCH", "PICK", "DELIVER", "RELEASE", "RETURN"};
        return names[state_code()];
    }

    void hash(Fnv1a& h) const override {
        h.i64(step_);
        h.i64(wait_);
        h.i64(from_.horizontal);
        h.i64(from_.vertical);
        h.i64(from_.rotation);
        h.i64(to_.horizontal);
        h.i64(to_.vertical);
        h.i64(to_.rotation);
    }

private:
    static constexpr int kIdle = -1;
    static constexpr int kSteps = 15;
    static constexpr int kPickTimeout = 25;

    void start(const physics::VcPose& from, const physics::VcPose& to) {
        from_ = from;
        to_ = to;
        step_ = 0;
        wait_ = 0;
    }

    // Returns true when the current step is complete; otherwise sets outputs.
    bool run_step(ScanIo& io) {
        namespace s = physics::vc;
        const auto& in = io.in;
        auto& out = io.out;
        auto move = [&](std::size_t sensor, int target, int rate, std::size_t fwd, std::size_t back) {
            const int dir = toward(in[sensor], target, rate);
            if (dir == 0) return true;
            drive(out, fwd, back, dir);
            return false;
        };
        auto vertical = [&](int t) { return move(s::Vertical, t, p_.vertical_rate, s::VDown, s::VUp); };
        auto horizontal = [&](int t) { return move(s::Horizontal, t, p_.horizontal_rate, s::HFwd, s::HBack); };
        auto rotate = [&](int t) { return move(s::Rotation, t, p_.rotation_rate, s::RotCw, s::RotCcw); };
        const bool holding = step_ >= 5 && step_ <= 11;
        if (holding) out.coils[s::SuctionOn] = true;

        switch (step_) {
            case 0: return vertical(0);
            case 1: return horizontal(0);
            case 2: return rotate(from_.rotation);
            case 3: return horizontal(from_.horizontal);
            case 4: return vertical(from_.vertical);
            case 5:
                if (in[s::Carrying]) return true;
                if (++wait_ > kPickTimeout) {
                    io.diagnostics.push_back("VC pick failed");
                    out.coils[s::SuctionOn] = false;
                    step_ = 11;  // continues with the return moves
                    return true;
                }
                return false;
            case 6: return vertical(0);
            case 7: return horizontal(0);
            case 8: return rotate(to_.rotation);
            case 9: return horizontal(to_.horizontal);
            case 10: return vertical(to_.vertical);
            case 11:
                out.coils[s::SuctionOn] = false;
                return !in[s::Suction];
            case 12: return vertical(0);
            case 13: return horizontal(0);
            case 14: return rotate(p_.home.rotation);
        }
        return true;
    }

    physics::VcParams p_;
    physics::VcPose from_{};
    physics::VcPose to_{};
    int step_ = kIdle;
    int wait_ = 0;
};

// ------------------------------------------------------------------ warehouse

class WarehouseProgram final : public ControlProgram {
public:
    explicit WarehouseProgram(const physics::PhysicsParams& p) : p_(p.warehouse), color_(p.color) {}

    void scan(ScanIo& io) override {
        namespace s = physics::wh;
        const auto& in = io.in;
        auto& hr = io.holding;
        if (!in[s::BeltInner] && !in[s::BeltOuter]) store_blocked_ = false;

        for (int guard = 0; guard < kMaxChain; ++guard) {
            const State before = state_;
            switch (state_) {
                case State::Idle:
                    if (hr[hr::kCommand] == 1) {
                        hr[hr::kCommand] = 0;
                        const int x = hr[hr::kTargetX];
                        const int y = hr[hr::kTargetY];
                        const int color = hr[hr::kColor];
                        if (x < 1 || x > 3 || y < 1 || y > 3 || color < 1 || color > 3 ||
                            hr[slot_addr(x, y)] != color) {
                            hr[hr::kStatus] = static_cast<std::uint16_t>(WarehouseStatus::Rejected);
                            io.diagnostics.push_back("WAREHOUSE retrieve rejected");
                            break;
                        }
                        tx_ = x;
                        ty_ = y;
                        hr[hr::kStatus] = static_cast<std::uint16_t>(WarehouseStatus::Retrieving);
                        state_ = State::ToSlot;
                    } else if ((in[s::BeltOuter] || in[s::BeltInner]) && !store_blocked_) {
                        hr[hr::kStatus] = static_cast<std::uint16_t>(WarehouseStatus::Storing);
                        state_ = State::Convey;
                    }
                    break;
                case State::Convey:
                    if (!in[s::BeltInner]) {
                        io.out.coils[s::BeltIn] = true;
                        break;
                    }
                    {
                        const int code = classify(in[s::ColorReading]);
                        const auto free = first_free(hr);
                        if (code == 0 || !free) {
                            hr[hr::kStatus] = static_cast<std::uint16_t>(WarehouseStatus::Rejected);
                            io.diagnostics.push_back(code == 0 ? "WAREHOUSE color unreadable" : "WAREHOUSE rack full");
                            store_blocked_ = true;
                            state_ = State::Idle;
                            break;
                        }
                        store_color_ = code;
                        tx_ = free->first;
                        ty_ = free->second;
                        state_ = State::ToBelt;
                    }
                    break;
                case State::ToBelt:
                    if (move_to(io, 0, 0)) state_ = State::PickBelt;
                    break;
                case State::PickBelt:
                    if (pulse(io, s::ForkPick, in[s::Holding])) state_ = State::ToRack;
                    break;
                case State::ToRack:
                    if (move_to(io, tx_ * p_.slot_dx, ty_ * p_.slot_dy)) state_ = State::PlaceRack;
                    break;
                case State::PlaceRack:
                    if (pulse(io, s::ForkPlace, !in[s::Holding])) {
                        hr[slot_addr(tx_, ty_)] = static_cast<std::uint16_t>(store_color_);
                        state_ = State::Home;
                    }
                    break;
                case State::ToSlot:
                    if (move_to(io, tx_ * p_.slot_dx, ty_ * p_.slot_dy)) state_ = State::PickSlot;
                    break;
                case State::PickSlot:
                    if (pulse(io, s::ForkPick, in[s::Holding])) {
                        hr[slot_addr(tx_, ty_)] = 0;
                        state_ = State::ToOut;
                    }
                    break;
                case State::ToOut:
                    if (move_to(io, p_.out_x, p_.out_y) && !in[s::OutPresent]) state_ = State::PlaceOut;
                    break;
                case State::PlaceOut:
                    if (pulse(io, s::ForkPlace, !in[s::Holding])) state_ = State::Home;
                    break;
                case State::Home:
                    if (move_to(io, 0, 0)) {
                        if (hr[hr::kStatus] != static_cast<std::uint16_t>(WarehouseStatus::Rejected)) {
                            hr[hr::kStatus] = static_cast<std::uint16_t>(WarehouseStatus::Idle);
                        }
                        state_ = State::Idle;
                    }
                    break;
            }
            if (state_ == before) return;
            waited_ = 0;
        }
    }

    std::uint16_t state_code() const override { return static_cast<std::uint16_t>(state_); }

    std::string_view state_name() const override {
        static constexpr std::array<std::string_view, 11> names = {
            "IDLE", "CONVEY", "TO_BELT", "PICK_BELT", "TO_RACK", "PLACE_RACK", "TO_SLOT", "PICK_SLOT", "TO_OUT", "PLACE_OUT", "HOME"};
        return names[static_cast<std::size_t>(state_)];
    }

    void hash(Fnv1a& h) const override {
        h.u8(static_cast<std::uint8_t>(state_));
        h.i64(tx_);
        h.i64(ty_);
        h.i64(store_color_);
        h.i64(waited_);
        h.boolean(store_blocked_);
    }

private:
    enum class State : std::uint8_t { Idle, Convey, ToBelt, PickBelt, ToRack, PlaceRack, ToSlot, PickSlot, ToOut, PlaceOut, Home };

    static std::size_t slot_addr(int x, int y) { return hr::kInventory + static_cast<std::size_t>((y - 1) * 3 + (x - 1)); }

    static std::optional<std::pair<int, int>> first_free(const std::vector<std::uint16_t>& hr) {
        for (int y = 1; y <= 3; ++y) {
            for (int x = 1; x <= 3; ++x) {
                if (hr[slot_addr(x, y)] == 0) return std::make_pair(x, y);
            }
        }
        return std::nullopt;
    }

    int classify(int reading) const {
        int best = 0;
        int best_dist = 0;
        for (int k = 0; k < 3; ++k) {
            const int d = std::abs(reading - color_.nominal[k]);
            if (best == 0 || d < best_dist) {
                best = k + 1;
                best_dist = d;
            }
        }
        return std::abs(reading - color_.baseline) < best_dist ? 0 : best;
    }

    bool move_to(ScanIo& io, int x, int y) {
        namespace s = physics::wh;
        const int dx = toward(io.in[s::CantX], x, p_.x_rate);
        const int dy = toward(io.in[s::CantY], y, p_.y_rate);
        drive(io.out, s::XFwd, s::XBack, dx);
        drive(io.out, s::YFwd, s::YBack, dy);
        return dx == 0 && dy == 0;
    }

    // Holds a fork coil until `done`; gives up after a few scans.
    bool pulse(ScanIo& io, std::size_t coil, bool done) {
        if (done) return true;
        if (++waited_ > kHandshakeScans) {
            io.diagnostics.push_back("WAREHOUSE fork handshake timeout");
            io.holding[hr::kStatus] = static_cast<std::uint16_t>(WarehouseStatus::Rejected);
            state_ = State::Home;
            return false;
        }
        io.out.coils[coil] = waited_ % 2 == 1;  // re-pulse on retries
        return false;
    }

    physics::WarehouseParams p_;
    physics::ColorSensorParams color_;
    State state_ = State::Idle;
    int tx_ = 0;
    int ty_ = 0;
    int store_color_ = 0;
    int waited_ = 0;
    bool store_blocked_ = false;
};

// ------------------------------------------------------------------ furnace

class FurnaceProgram final : public ControlProgram {
public:
    void scan(ScanIo& io) override {
        namespace s = physics::furnace;
        const auto& in = io.in;
        auto& out = io.out;
        for (int guard = 0; guard < kMaxChain; ++guard) {
            const State before = state_;
            switch (state_) {
                case State::Idle:
                    if (in[s::EntryPresent]) state_ = State::MovingIn;
                    break;
                case State::MovingIn:
                    if (in[s::PlatformInside]) {
                        state_ = State::Firing;
                        started_ = false;
                        waited_ = 0;
                    } else {
                        out.coils[s::PlatformIn] = true;
                    }
                    break;
                case State::Firing: {
                    if (!started_) {
                        const int ticks = ms_to_ticks(io.holding[hr::kFiringTime], io.tick_ms);
                        if (ticks == 0) {
                            finish(io);
                            break;
                        }
                        if (in[s::OvenLed]) {
                            started_ = true;
                            break;
                        }
                        if (++waited_ > kHandshakeScans) {
                            io.diagnostics.push_back("FURNACE oven did not start");
                            state_ = State::MovingOut;
                            break;
                        }
                        out.coils[s::OvenStart] = waited_ == 1;
                        out.words[s::OvenTicks] = ticks;
                    } else if (!in[s::OvenLed]) {
                        finish(io);
                    }
                    break;
                }
                case State::MovingOut:
                    if (in[s::PlatformOutside]) {
                        state_ = State::Handoff;
                    } else {
                        out.coils[s::PlatformOut] = true;
                    }
                    break;
                case State::Handoff:
                    if (!in[s::EntryPresent]) state_ = State::Idle;
                    break;
            }
            if (state_ == before) return;
        }
    }

    std::uint16_t state_code() const override { return static_cast<std::uint16_t>(state_); }
    std::string_view state_name() const override {
        static constexpr std::array<std::string_view, 5> names = {"IDLE", "MOVING_IN", "FIRING", "MOVING_OUT", "HANDOFF"};
        return names[static_cast<std::size_t>(state_)];
    }
    void hash(Fnv1a& h) const override {
        h.u8(static_cast<std::uint8_t>(state_));
        h.boolean(started_);
        h.i64(waited_);
    }

private:
    enum class State : std::uint8_t { Idle, MovingIn, Firing, MovingOut, Handoff };

    void finish(ScanIo& io) {
        bump(io.holding, hr::kFiredCount);
        state_ = State::MovingOut;
    }

    State state_ = State::Idle;
    bool started_ = false;
    int waited_ = 0;
};

// ------------------------------------------------------------------ mill

class MillProgram final : public ControlProgram {
public:
    void scan(ScanIo& io) override {
        namespace s = physics::mill;
        const auto& in = io.in;
        auto& out = io.out;
        for (int guard = 0; guard < kMaxChain; ++guard) {
            const State before = state_;
            switch (state_) {
                case State::Idle:
                    if (in[s::TurntablePresent] && in[s::TransportHome] && !in[s::TransportLoaded]) {
                        state_ = State::ToMill;
                    }
                    break;
                case State::ToMill:
                    if (in[s::TransportAtMill]) state_ = State::Return;
                    else out.coils[s::TransportFwd] = true;
                    break;
                case State::Return:
                    if (!in[s::TransportHome]) {
                        out.coils[s::TransportBack] = true;
                        break;
                    }
                    if (in[s::MillPresent]) {
                        state_ = State::Milling;
                        started_ = false;
                        waited_ = 0;
                    } else {
                        io.diagnostics.push_back("MILL no workpiece at mill");
                        state_ = State::Idle;
                    }
                    break;
                case State::Milling:
                    if (!started_) {
                        const int ticks = ms_to_ticks(io.holding[hr::kMillingTime], io.tick_ms);
                        if (ticks == 0) {
                            finish(io);
                            break;
                        }
                        if (in[s::MillMotor]) {
                            started_ = true;
                            break;
                        }
                        if (++waited_ > kHandshakeScans) {
                            io.diagnostics.push_back("MILL motor did not start");
                            state_ = State::Idle;
                            break;
                        }
                        out.coils[s::MillStart] = waited_ == 1;
                        out.words[s::MillTicks] = ticks;
                    } else if (!in[s::MillMotor]) {
                        finish(io);
                    }
                    break;
                case State::Fetch:
                    if (in[s::TransportAtMill]) state_ = State::ReturnFinished;
                    else out.coils[s::TransportFwd] = true;
                    break;
                case State::ReturnFinished:
                    if (in[s::TransportHome]) {
                        state_ = State::Eject;
                        waited_ = 0;
                    } else {
                        out.coils[s::TransportBack] = true;
                    }
                    break;
                case State::Eject:
                    if (in[s::EjectPiston]) {
                        state_ = State::Retract;
                    } else if (++waited_ > kHandshakeScans) {
                        io.diagnostics.push_back("MILL eject timeout");
                        state_ = State::Idle;
                    } else {
                        out.coils[s::EjectPistonOn] = true;
                    }
                    break;
                case State::Retract:
                    if (!in[s::EjectPiston] && !in[s::TurntablePresent]) state_ = State::Idle;
                    break;
            }
            if (state_ == before) return;
        }
    }

    std::uint16_t state_code() const override { return static_cast<std::uint16_t>(state_); }
    std::string_view state_name() const override {
        static constexpr std::array<std::string_view, 8> names = {"IDLE",  "TO_MILL",         "RETURN", "MILLING",
                                                                  "FETCH", "RETURN_FINISHED", "EJECT",  "RETRACT"};
        return names[static_cast<std::size_t>(state_)];
    }
    void hash(Fnv1a& h) const override {
        h.u8(static_cast<std::uint8_t>(state_));
        h.boolean(started_);
        h.i64(waited_);
    }

private:
    enum class State : std::uint8_t { Idle, ToMill, Return, Milling, Fetch, ReturnFinished, Eject, Retract };

    void finish(ScanIo& io) {
        bump(io.holding, hr::kMilledCount);
        state_ = State::Fetch;
    }

    State state_ = State::Idle;
    bool started_ = false;
    int waited_ = 0;
};

// ------------------------------------------------------------------ sorting

class SortingProgram final : public ControlProgram {
public:
    explicit SortingProgram(const physics::PhysicsParams& p) : color_(p.color) {
        const auto& s = p.sorting;
        const int exit_center = s.exit_barrier - s.cylinder_length / 2;
        for (std::size_t k = 0; k < 3; ++k) {
            const int travel = s.piston_position[k] - exit_center;
            window_[k] = (travel + s.belt_rate / 2) / s.belt_rate - 1;
        }
    }

    void scan(ScanIo& io) override {
        namespace s = physics::sorting;
        const auto& in = io.in;
        auto& out = io.out;
        for (int guard = 0; guard < kMaxChain; ++guard) {
            const State before = state_;
            switch (state_) {
                case State::Idle:
                    if (in[s::BarrierEntry]) {
                        state_ = State::Convey;
                        peak_ = color_.baseline;
                    }
                    break;
                case State::Convey:
                    out.coils[s::BeltOn] = true;
                    if (std::abs(in[s::ColorReading] - color_.baseline) > std::abs(peak_ - color_.baseline)) {
                        peak_ = in[s::ColorReading];
                    }
                    if (in[s::BarrierExit]) {
                        bay_ = classify(peak_);
                        state_ = State::Timing;
                        if (bay_ < 0) io.diagnostics.push_back("SORTING color unreadable");
                    }
                    break;
                case State::Timing: {
                    out.coils[s::BeltOn] = true;
                    const int timer = in[s::TimerTicks];
                    if (bay_ >= 0 && timer == window_[static_cast<std::size_t>(bay_)]) {
                        out.coils[s::FireWhite + static_cast<std::size_t>(bay_)] = true;
                        state_ = State::Fire;
                    } else if (timer > window_[2] + 20) {
                        io.diagnostics.push_back("SORTING no piston window hit");
                        state_ = State::Idle;
                    }
                    break;
                }
                case State::Fire: {
                    const auto k = static_cast<std::size_t>(bay_);
                    if (in[s::PistonWhite + k]) {
                        bump(io.holding, hr::kSortedWhite + k);
                        state_ = State::Idle;
                    } else {
                        out.coils[s::BeltOn] = true;
                        out.coils[s::FireWhite + k] = true;
                    }
                    break;
                }
            }
            if (state_ == before) return;
        }
    }

    std::uint16_t state_code() const override { return static_cast<std::uint16_t>(state_); }
    std::string_view state_name() const override {
        static constexpr std::array<std::string_view, 4> names = {"IDLE", "CONVEY", "TIMING", "FIRE"};
        return names[static_cast<std::size_t>(state_)];
    }
    void hash(Fnv1a& h) const override {
        h.u8(static_cast<std::uint8_t>(state_));
        h.i64(peak_);
        h.i64(bay_);
    }

    const std::array<int, 3>& windows() const noexcept { return window_; }

private:
    enum class State : std::uint8_t { Idle, Convey, Timing, Fire };

    int classify(int reading) const {
        int best = -1;
        int best_dist = 0;
        for (int k = 0; k < 3; ++k) {
            const int d = std::abs(reading - color_.nominal[static_cast<std::size_t>(k)]);
            if (best < 0 || d < best_dist) {
                best = k;
                best_dist = d;
            }
        }
        return std::abs(reading - color_.baseline) < best_dist ? -1 : best;
    }

    physics::ColorSensorParams color_;
    std::array<int, 3> window_{};
    State state_ = State::Idle;
    int peak_ = 0;
    int bay_ = -1;
};

}  // namespace

std::unique_ptr<ControlProgram> make_program(StationId station, const physics::PhysicsParams& params) {
    switch (station) {
        case StationId::VC: return std::make_unique<VcProgram>(params.vc);
        case StationId::WAREHOUSE: return std::make_unique<WarehouseProgram>(params);
        case StationId::FURNACE: return std::make_unique<FurnaceProgram>();
        case StationId::MILL: return std::make_unique<MillProgram>();
        case StationId::SORTING: return std::make_unique<SortingProgram>(params);
    }
    return nullptr;
}

}  // namespace linesim::plc
