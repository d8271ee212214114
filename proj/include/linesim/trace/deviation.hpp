#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/trace/recorder.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace linesim::trace {

// Step-held samples of one variable over [first sample tick, end].
struct Trajectory {
    std::string variable;
    std::vector<std::pair<Tick, double>> samples;  // strictly increasing ticks
    Tick end = 0;                                  // last tick covered (inclusive)
    double lo = 0;
    double hi = 1;

    Tick start() const noexcept { return samples.empty() ? 0 : samples.front().first; }
    double at(Tick t) const;  // value held at t; requires start() <= t
    // First tick whose value differs from the initial one, if any.
    std::optional<Tick> first_change() const;
};

// Throws SchemaMismatch when the dataset has no such variable.
Trajectory trajectory(const Dataset& data, const std::string& variable);

enum class Alignment { ByTick, ByEvent };
std::optional<Alignment> parse_alignment(const std::string& s);

struct DeviationReport {
    std::string variable;
    Alignment alignment = Alignment::ByTick;
    double deviation = 0;     // fraction of the schema range
    Tick overlap_ticks = 0;
    Tick tail_a = 0;          // ticks of a outside the overlap
    Tick tail_b = 0;
    Tick anchor_a = 0;
    Tick anchor_b = 0;
    std::optional<Tick> worst_tick;   // tick on a's timeline of the maximum

    nlohmann::json to_json() const;
};

inline constexpr const char* kDeviationFormula = "max_t |a(t) - b(t)| / (hi - lo)";

// by_event aligns the two anchors (default: each trajectory's first change).
// Throws SchemaMismatch when names or ranges differ.
DeviationReport deviation(const Trajectory& a, const Trajectory& b, Alignment alignment,
                          std::optional<Tick> anchor_a = std::nullopt, std::optional<Tick> anchor_b = std::nullopt);

}  // namespace linesim::trace
