#pragma once

#include "linesim/ids/detector.hpp"
#include "linesim/trace/record.hpp"

#include "json.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace linesim::ids {

struct EvalOptions {
    Tick grace = 250;   // alerts this long after an interval still count as detections
    int tick_ms = kDefaultTickMs;
};

struct AttackOutcome {
    trace::GroundTruthBody truth;
    bool detected = false;
    std::optional<Tick> first_alert;
    std::size_t alerts = 0;        // inside [start, end + grace]

    std::optional<Tick> delay() const {
        return first_alert ? std::optional<Tick>(*first_alert - truth.start) : std::nullopt;
    }
};

struct DetectorOutcome {
    DetectorKind detector;
    std::vector<AttackOutcome> attacks;   // ground-truth order
    std::size_t benign_alerts = 0;
    double false_alarms_per_minute = 0;
};

struct EvalReport {
    Tick timeline_end = 0;
    Tick benign_ticks = 0;
    EvalOptions options;
    std::map<DetectorKind, nlohmann::json> detector_options;
    std::vector<std::pair<Tick, Tick>> benign_regions;   // inclusive
    std::vector<DetectorOutcome> detectors;

    const DetectorOutcome* find(DetectorKind k) const;
    nlohmann::json to_json() const;
    // Detection matrix: one row per detector, one column per attack.
    std::string matrix() const;
};

// Benign regions are [0, timeline_end] minus every [start, end + grace].
// Throws TimelineMismatch when an alert or interval lies outside the timeline.
EvalReport evaluate(const std::map<DetectorKind, std::vector<Alert>>& alerts,
                    const std::vector<trace::GroundTruthBody>& truth, Tick timeline_end, EvalOptions options = {});

}  // namespace linesim::ids
