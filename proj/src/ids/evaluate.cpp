#include "linesim/ids/evaluate.hpp"
#include "linesim/error.hpp"

#include <algorithm>
#include <cstdio>

namespace linesim::ids {

using nlohmann::json;

const DetectorOutcome* EvalReport::find(DetectorKind k) const {
    for (const auto& d : detectors) {
        if (d.detector == k) return &d;
    }
    return nullptr;
}

EvalReport evaluate(const std::map<DetectorKind, std::vector<Alert>>& alerts,
                    const std::vector<trace::GroundTruthBody>& truth, Tick timeline_end, EvalOptions options) {
    if (timeline_end < 0) throw Error(ErrorKind::TimelineMismatch, "negative timeline end");
    for (const auto& g : truth) {
        if (g.start < 0 || g.end < g.start || g.end > timeline_end) {
            throw Error(ErrorKind::TimelineMismatch, "interval " + g.label + " [" + std::to_string(g.start) + ", " +
                                                         std::to_string(g.end) + "] outside [0, " +
                                                         std::to_string(timeline_end) + "]");
        }
    }
    for (const auto& [kind, list] : alerts) {
        for (const auto& a : list) {
            if (a.tick < 0 || a.tick > timeline_end) {
                throw Error(ErrorKind::TimelineMismatch, std::string(to_string(kind)) + " alert at tick " +
                                                             std::to_string(a.tick));
            }
        }
    }

    EvalReport rep;
    rep.timeline_end = timeline_end;
    rep.options = options;

    std::vector<std::pair<Tick, Tick>> covered;
    for (const auto& g : truth) covered.emplace_back(g.start, std::min(timeline_end, g.end + options.grace));
    std::sort(covered.begin(), covered.end());
    Tick cursor = 0;
    for (const auto& [a, b] : covered) {
        if (a > cursor) rep.benign_regions.emplace_back(cursor, a - 1);
        cursor = std::max(cursor, b + 1);
    }
    if (cursor <= timeline_end) rep.benign_regions.emplace_back(cursor, timeline_end);
    for (const auto& [a, b] : rep.benign_regions) rep.benign_ticks += b - a + 1;
    const double benign_minutes = static_cast<double>(rep.benign_ticks) * options.tick_ms / 60000.0;

    auto benign = [&](Tick t) {
        for (const auto& [a, b] : rep.benign_regions) {
            if (t >= a && t <= b) return true;
        }
        return false;
    };

    for (const auto& [kind, list] : alerts) {
        DetectorOutcome d{kind, {}, 0, 0};
        for (const auto& g : truth) {
            AttackOutcome o{g, false, std::nullopt, 0};
            for (const auto& a : list) {
                if (a.tick < g.start || a.tick > g.end + options.grace) continue;
                ++o.alerts;
                if (!o.first_alert || a.tick < *o.first_alert) o.first_alert = a.tick;
            }
            o.detected = o.alerts > 0;
            d.attacks.push_back(o);
        }
        for (const auto& a : list) {
            if (benign(a.tick)) ++d.benign_alerts;
        }
        d.false_alarms_per_minute = benign_minutes > 0 ? static_cast<double>(d.benign_alerts) / benign_minutes : 0;
        rep.detectors.push_back(std::move(d));
    }
    return rep;
}

json EvalReport::to_json() const {
    json j;
    j["timeline_end"] = timeline_end;
    j["grace_ticks"] = options.grace;
    j["tick_ms"] = options.tick_ms;
    j["benign_ticks"] = benign_ticks;
    json regions = json::array();
    for (const auto& [a, b] : benign_regions) regions.push_back({a, b});
    j["benign_regions"] = regions;
    json dets = json::array();
    for (const auto& d : detectors) {
        json dj;
        dj["detector"] = std::string(to_string(d.detector));
        if (auto it = detector_options.find(d.detector); it != detector_options.end()) dj["options"] = it->second;
        json attacks = json::array();
        for (const auto& o : d.attacks) {
            json a{{"label", o.truth.label}, {"attack", o.truth.attack}, {"target", o.truth.target},
                   {"start", o.truth.start}, {"end", o.truth.end}, {"detected", o.detected}, {"alerts", o.alerts}};
            a["first_alert"] = o.first_alert ? json(*o.first_alert) : json(nullptr);
            a["delay_ticks"] = o.delay() ? json(*o.delay()) : json(nullptr);
            attacks.push_back(a);
        }
        dj["attacks"] = attacks;
        dj["benign_alerts"] = d.benign_alerts;
        dj["false_alarms_per_minute"] = d.false_alarms_per_minute;
        dets.push_back(dj);
    }
    j["detectors"] = dets;
    return j;
}

std::string EvalReport::matrix() const {
    std::string out = "detector    ";
    std::vector<std::string> labels;
    if (!detectors.empty()) {
        for (const auto& o : detectors.front().attacks) labels.push_back(o.truth.label);
    }
    char buf[128];
    for (const auto& l : labels) {
        std::snprintf(buf, sizeof buf, " %-22s", l.substr(0, 22).c_str());
        out += buf;
    }
    out += " false/min\n";
    for (const auto& d : detectors) {
        std::snprintf(buf, sizeof buf, "%-12s", std::string(to_string(d.detector)).c_str());
        out += buf;
        for (const auto& o : d.attacks) {
            std::string cell = o.detected ? "yes (+" + std::to_string(*o.delay()) + ")" : "no";
            std::snprintf(buf, sizeof buf, " %-22s", cell.c_str());
            out += buf;
        }
        std::snprintf(buf, sizeof buf, " %.3f\n", d.false_alarms_per_minute);
        out += buf;
    }
    return out;
}

}  // namespace linesim::ids
