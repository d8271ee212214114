#include "linesim/trace/deviation.hpp"
#include "linesim/error.hpp"

#include <algorithm>
#include <cmath>

namespace linesim::trace {

double Trajectory::at(Tick t) const {
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](Tick x, const std::pair<Tick, double>& s) { return x < s.first; });
    if (it == samples.begin()) throw Error(ErrorKind::TimelineMismatch, variable + " has no sample at " + std::to_string(t));
    return std::prev(it)->second;
}

std::optional<Tick> Trajectory::first_change() const {
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].second != samples.front().second) return samples[i].first;
    }
    return std::nullopt;
}

Trajectory trajectory(const Dataset& data, const std::string& variable) {
    auto range = data.header.variables.find(variable);
    if (range == data.header.variables.end()) throw Error(ErrorKind::SchemaMismatch, "unknown variable " + variable);
    Trajectory t;
    t.variable = variable;
    t.lo = range->second.lo;
    t.hi = range->second.hi;
    for (const auto& r : data.records) {
        const auto* s = r.sample();
        if (!s || s->variable != variable) continue;
        if (!t.samples.empty() && t.samples.back().first == r.tick) {
            t.samples.back().second = s->value;
        } else {
            t.samples.emplace_back(r.tick, s->value);
        }
    }
    if (t.samples.empty()) throw Error(ErrorKind::SchemaMismatch, "no samples of " + variable);
    t.end = std::max(data.last_tick(), t.samples.back().first);
    return t;
}

std::optional<Alignment> parse_alignment(const std::string& s) {
    if (s == "by_tick") return Alignment::ByTick;
    if (s == "by_event") return Alignment::ByEvent;
    return std::nullopt;
}

nlohmann::json DeviationReport::to_json() const {
    nlohmann::json j;
    j["variable"] = variable;
    j["alignment"] = alignment == Alignment::ByTick ? "by_tick" : "by_event";
    j["formula"] = kDeviationFormula;
    j["deviation"] = deviation;
    j["deviation_percent"] = deviation * 100.0;
    j["overlap_ticks"] = overlap_ticks;
    j["tail_a"] = tail_a;
    j["tail_b"] = tail_b;
    j["anchor_a"] = anchor_a;
    j["anchor_b"] = anchor_b;
    if (worst_tick) j["worst_tick"] = *worst_tick;
    return j;
}

DeviationReport deviation(const Trajectory& a, const Trajectory& b, Alignment alignment, std::optional<Tick> anchor_a,
                          std::optional<Tick> anchor_b) {
    if (a.variable != b.variable) throw Error(ErrorKind::SchemaMismatch, a.variable + " vs " + b.variable);
    if (a.lo != b.lo || a.hi != b.hi || !(a.hi > a.lo)) throw Error(ErrorKind::SchemaMismatch, "range of " + a.variable);
    if (a.samples.empty() || b.samples.empty()) throw Error(ErrorKind::TimelineMismatch, "empty trajectory");

    DeviationReport rep;
    rep.variable = a.variable;
    rep.alignment = alignment;
    Tick shift = 0;  // b's timeline = a's timeline + shift
    if (alignment == Alignment::ByEvent) {
        rep.anchor_a = anchor_a.value_or(a.first_change().value_or(a.start()));
        rep.anchor_b = anchor_b.value_or(b.first_change().value_or(b.start()));
        shift = rep.anchor_b - rep.anchor_a;
    }
    const Tick lo = std::max(a.start(), b.start() - shift);
    const Tick hi = std::min(a.end, b.end - shift);
    const double range = a.hi - a.lo;
    if (hi < lo) throw Error(ErrorKind::TimelineMismatch, "trajectories do not overlap");
    rep.overlap_ticks = hi - lo + 1;
    rep.tail_a = (a.end - a.start() + 1) - rep.overlap_ticks;
    rep.tail_b = (b.end - b.start() + 1) - rep.overlap_ticks;
    double worst = -1;
    for (Tick t = lo; t <= hi; ++t) {
        const double d = std::fabs(a.at(t) - b.at(t + shift)) / range;
        if (d > worst) {
            worst = d;
            rep.worst_tick = t;
        }
    }
    rep.deviation = worst;
    return rep;
}

}  // namespace linesim::trace
