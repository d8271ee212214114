#pragma once

#include <chrono>
#include <cstdint>

namespace linesim {

using Tick = std::int64_t;

inline constexpr int kDefaultTickMs = 20;

// Simulated time is always derived from the tick index, never from wall-clock.
class SimClock {
public:
    explicit SimClock(int tick_ms = kDefaultTickMs) : tick_ms_(tick_ms) {}

    Tick now() const noexcept { return tick_; }
    int tick_ms() const noexcept { return tick_ms_; }
    std::chrono::milliseconds tick_duration() const noexcept { return std::chrono::milliseconds(tick_ms_); }
    std::chrono::milliseconds sim_time() const noexcept {
        return std::chrono::milliseconds(tick_ * tick_ms_);
    }

    void advance() noexcept { ++tick_; }

private:
    Tick tick_ = 0;
    int tick_ms_;
};

}  // namespace linesim
