#include "linesim/ids/detector.hpp"
#include "linesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace linesim::ids {

using nlohmann::json;

std::string_view to_string(DetectorKind k) noexcept {
    switch (k) {
        case DetectorKind::MinMax: return "minmax";
        case DetectorKind::SteadyTime: return "steadytime";
        case DetectorKind::Iat: return "iat";
        case DetectorKind::Dtmc: return "dtmc";
    }
    return "?";
}

std::optional<DetectorKind> parse_detector(std::string_view s) noexcept {
    for (auto k : kAllDetectors) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

json Alert::to_json() const {
    return {{"detector", std::string(linesim::ids::to_string(detector))},
            {"tick", tick},
            {"subject", subject},
            {"observed", observed},
            {"bound", bound},
            {"limit", limit},
            {"message", message}};
}

Alert Alert::from_json(const json& j) {
    try {
        Alert a;
        auto k = parse_detector(j.at("detector").get<std::string>());
        if (!k) throw Error(ErrorKind::CorruptRecord, "detector");
        a.detector = *k;
        a.tick = j.at("tick").get<Tick>();
        a.subject = j.at("subject").get<std::string>();
        a.observed = j.at("observed").get<double>();
        a.bound = j.at("bound").get<std::string>();
        a.limit = j.at("limit").get<double>();
        a.message = j.value("message", "");
        return a;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptRecord, std::string("alert: ") + e.what());
    }
}

void Detector::train(const std::vector<trace::TraceRecord>& records, TrainingInfo info) {
    TraceInterpreter interp(options_.address_bucket);
    info.records = records.size();
    info_ = std::move(info);
    for (const auto& r : records) {
        if (auto v = interp.interpret(r)) learn(*v);
    }
    end_training();
    if (trained_empty()) {
        throw Error(ErrorKind::EmptyTraining, kind() == DetectorKind::MinMax || kind() == DetectorKind::SteadyTime
                                                  ? "no process variables in training trace"
                                                  : "no Modbus frames in training trace");
    }
    reset();
}

void Detector::reset() {
    interp_ = TraceInterpreter(options_.address_bucket);
    reset_stream();
}

void Detector::observe(const trace::TraceRecord& record, std::vector<Alert>& out) {
    if (auto v = interp_.interpret(record)) check(*v, out);
}

std::vector<Alert> Detector::detect(const std::vector<trace::TraceRecord>& records) {
    reset();
    std::vector<Alert> out;
    for (const auto& r : records) observe(r, out);
    return out;
}

Alert Detector::alert(Tick tick, std::string subject, double observed, std::string bound, double limit,
                      std::string message) const {
    return Alert{kind(), tick, std::move(subject), observed, std::move(bound), limit, std::move(message)};
}

json Detector::save() const {
    json j;
    j["schema_version"] = kModelSchemaVersion;
    j["detector"] = std::string(to_string(kind()));
    j["options"] = {{"margin", options_.margin}, {"p_min", options_.p_min}, {"address_bucket", options_.address_bucket}};
    j["training"] = {{"scenario", info_.scenario}, {"config_hash", info_.config_hash}, {"records", info_.records}};
    j["model"] = save_model();
    return j;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// ------------------------------------------------------------------ MinMax

class MinMax final : public Detector {
public:
    explicit MinMax(DetectorOptions o) : Detector(o) {}
    DetectorKind kind() const noexcept override { return DetectorKind::MinMax; }

protected:
    void learn(const FrameView& v) override {
        for (const auto& u : v.updates) {
            auto [it, fresh] = range_.try_emplace(u.variable, u.value, u.value);
            if (!fresh) {
                it->second.first = std::min(it->second.first, u.value);
                it->second.second = std::max(it->second.second, u.value);
            }
        }
    }
    bool trained_empty() const override { return range_.empty(); }
    void reset_stream() override {}

    void check(const FrameView& v, std::vector<Alert>& out) override {
        const double m = options_.margin;
        for (const auto& u : v.updates) {
            auto it = range_.find(u.variable);
            if (it == range_.end()) continue;
            const double lo = it->second.first * (1 - m);
            const double hi = it->second.second * (1 + m);
            if (u.value < lo) {
                out.push_back(alert(v.tick, u.variable, u.value, "min", lo,
                                    u.variable + " = " + fmt(u.value) + " below learned min " + fmt(it->second.first)));
            } else if (u.value > hi) {
                out.push_back(alert(v.tick, u.variable, u.value, "max", hi,
                                    u.variable + " = " + fmt(u.value) + " above learned max " + fmt(it->second.second)));
            }
        }
    }

    json save_model() const override {
        json vars = json::object();
        for (const auto& [name, r] : range_) vars[name] = {{"min", r.first}, {"max", r.second}};
        return {{"variables", vars}};
    }
    void load_model(const json& j) override {
        for (const auto& [name, r] : j.at("variables").items()) {
            range_[name] = {r.at("min").get<double>(), r.at("max").get<double>()};
        }
    }

private:
    std::map<std::string, std::pair<double, double>> range_;
};

// -------------------------------------------------------------- SteadyTime

// Learns how long each (variable, value) state persists and the largest gap
// between updates of each variable. Durations are measured between
// observations on the wire, the same way in training and detection.
class SteadyTime final : public Detector {
public:
    explicit SteadyTime(DetectorOptions o) : Detector(o) {}
    DetectorKind kind() const noexcept override { return DetectorKind::SteadyTime; }

protected:
    struct Stats {
        Tick min = std::numeric_limits<Tick>::max();  // over completed runs
        Tick max = 0;                                  // over all runs
        std::uint64_t completed = 0;
        Tick censored = 0;                             // longest run still open at trace end

        // Shortest duration this state is known to last. A state that never
        // ended in training is known to last at least its longest run.
        Tick floor() const { return completed > 0 ? min : censored; }
    };
    struct VarModel {
        std::optional<Tick> max_gap;
        std::map<double, Stats> states;
    };
    struct Run {
        double value = 0;
        Tick start = 0;
        Tick last = 0;
        bool alerted_long = false;
    };

    void learn(const FrameView& v) override {
        for (const auto& u : v.updates) {
            auto& m = model_[u.variable];
            auto it = train_runs_.find(u.variable);
            if (it == train_runs_.end()) {
                train_runs_[u.variable] = Run{u.value, v.tick, v.tick, false};
                continue;
            }
            Run& r = it->second;
            const Tick gap = v.tick - r.last;
            m.max_gap = std::max(m.max_gap.value_or(0), gap);
            r.last = v.tick;
            if (u.value == r.value) continue;
            auto& s = m.states[r.value];
            const Tick d = v.tick - r.start;
            s.min = std::min(s.min, d);
            s.max = std::max(s.max, d);
            ++s.completed;
            r = Run{u.value, v.tick, v.tick, false};
        }
    }

    void end_training() override {
        for (const auto& [name, r] : train_runs_) {
            auto& s = model_[name].states[r.value];
            const Tick d = r.last - r.start;
            s.censored = std::max(s.censored, d);
            s.max = std::max(s.max, d);
        }
        train_runs_.clear();
    }

    bool trained_empty() const override { return model_.empty(); }
    void reset_stream() override { runs_.clear(); }

    void check(const FrameView& v, std::vector<Alert>& out) override {
        const double m = options_.margin;
        for (const auto& u : v.updates) {
            auto mit = model_.find(u.variable);
            if (mit == model_.end()) continue;
            const auto& vm = mit->second;
            auto it = runs_.find(u.variable);
            if (it == runs_.end()) {
                runs_[u.variable] = Run{u.value, v.tick, v.tick, false};
                continue;
            }
            Run& r = it->second;
            const Tick gap = v.tick - r.last;
            if (vm.max_gap) {
                const double limit = static_cast<double>(*vm.max_gap) * (1 + m);
                if (static_cast<double>(gap) > limit) {
                    out.push_back(alert(v.tick, u.variable, static_cast<double>(gap), "max_update_gap", limit,
                                        u.variable + " updated after " + std::to_string(gap) +
                                            " ticks, learned max gap " + std::to_string(*vm.max_gap)));
                }
            }
            r.last = v.tick;
            const Tick d = v.tick - r.start;
            auto sit = vm.states.find(r.value);
            if (u.value == r.value) {
                if (sit != vm.states.end() && !r.alerted_long) {
                    const double limit = static_cast<double>(sit->second.max) * (1 + m);
                    if (static_cast<double>(d) > limit) {
                        r.alerted_long = true;
                        out.push_back(alert(v.tick, u.variable, static_cast<double>(d), "max_duration", limit,
                                            u.variable + " held " + fmt(r.value) + " for " + std::to_string(d) +
                                                " ticks, learned max " + std::to_string(sit->second.max)));
                    }
                }
                continue;
            }
            if (sit != vm.states.end()) {
                const double limit = static_cast<double>(sit->second.floor()) * (1 - m);
                if (static_cast<double>(d) < limit) {
                    out.push_back(alert(v.tick, u.variable, static_cast<double>(d), "min_duration", limit,
                                        u.variable + " left " + fmt(r.value) + " after " + std::to_string(d) +
                                            " ticks, learned min " + std::to_string(sit->second.floor())));
                }
            }
            r = Run{u.value, v.tick, v.tick, false};
        }
    }

    json save_model() const override {
        json vars = json::object();
        for (const auto& [name, vm] : model_) {
            json states = json::array();
            for (const auto& [value, s] : vm.states) {
                states.push_back({{"value", value},
                                  {"min", s.completed > 0 ? json(s.min) : json(nullptr)},
                                  {"max", s.max},
                                  {"completed", s.completed},
                                  {"censored", s.censored}});
            }
            vars[name] = {{"max_gap", vm.max_gap ? json(*vm.max_gap) : json(nullptr)}, {"states", states}};
        }
        return {{"variables", vars}};
    }
    void load_model(const json& j) override {
        for (const auto& [name, vj] : j.at("variables").items()) {
            auto& vm = model_[name];
            if (!vj.at("max_gap").is_null()) vm.max_gap = vj.at("max_gap").get<Tick>();
            for (const auto& sj : vj.at("states")) {
                Stats s;
                if (!sj.at("min").is_null()) s.min = sj.at("min").get<Tick>();
                s.max = sj.at("max").get<Tick>();
                s.completed = sj.at("completed").get<std::uint64_t>();
                s.censored = sj.at("censored").get<Tick>();
                vm.states[sj.at("value").get<double>()] = s;
            }
        }
    }

private:
    std::map<std::string, VarModel> model_;
    std::map<std::string, Run> train_runs_;
    std::map<std::string, Run> runs_;
};

// --------------------------------------------------------------------- IAT

class Iat final : public Detector {
public:
    explicit Iat(DetectorOptions o) : Detector(o) {}
    DetectorKind kind() const noexcept override { return DetectorKind::Iat; }

protected:
    struct Range {
        std::optional<Tick> min;
        std::optional<Tick> max;
        std::uint64_t frames = 0;
    };

    void learn(const FrameView& v) override {
        const auto key = v.key.str();
        auto& r = model_[key];
        ++r.frames;
        if (auto it = last_.find(key); it != last_.end()) {
            const Tick gap = v.tick - it->second;
            r.min = std::min(r.min.value_or(gap), gap);
            r.max = std::max(r.max.value_or(gap), gap);
        }
        last_[key] = v.tick;
    }
    void end_training() override { last_.clear(); }
    bool trained_empty() const override { return model_.empty(); }
    void reset_stream() override { last_.clear(); }

    void check(const FrameView& v, std::vector<Alert>& out) override {
        const auto key = v.key.str();
        auto it = model_.find(key);
        auto lit = last_.find(key);
        const std::optional<Tick> prev = lit == last_.end() ? std::nullopt : std::optional<Tick>(lit->second);
        last_[key] = v.tick;
        if (it == model_.end()) {
            out.push_back(alert(v.tick, key, 0, "unseen_channel", 0, "channel " + key + " not seen in training"));
            return;
        }
        if (!prev) return;
        const Tick gap = v.tick - *prev;
        const auto& r = it->second;
        if (!r.min) {
            out.push_back(alert(v.tick, key, static_cast<double>(gap), "no_learned_gap", 0,
                                "channel " + key + " repeated; training saw a single frame"));
            return;
        }
        const double m = options_.margin;
        const double lo = static_cast<double>(*r.min) * (1 - m);
        const double hi = static_cast<double>(*r.max) * (1 + m);
        if (static_cast<double>(gap) < lo) {
            out.push_back(alert(v.tick, key, static_cast<double>(gap), "min_gap", lo,
                                "gap " + std::to_string(gap) + " below learned min " + std::to_string(*r.min)));
        } else if (static_cast<double>(gap) > hi) {
            out.push_back(alert(v.tick, key, static_cast<double>(gap), "max_gap", hi,
                                "gap " + std::to_string(gap) + " above learned max " + std::to_string(*r.max)));
        }
    }

    json save_model() const override {
        json ch = json::object();
        for (const auto& [key, r] : model_) {
            ch[key] = {{"min", r.min ? json(*r.min) : json(nullptr)},
                       {"max", r.max ? json(*r.max) : json(nullptr)},
                       {"frames", r.frames}};
        }
        return {{"channels", ch}};
    }
    void load_model(const json& j) override {
        for (const auto& [key, rj] : j.at("channels").items()) {
            Range r;
            if (!rj.at("min").is_null()) r.min = rj.at("min").get<Tick>();
            if (!rj.at("max").is_null()) r.max = rj.at("max").get<Tick>();
            r.frames = rj.at("frames").get<std::uint64_t>();
            model_[key] = r;
        }
    }

private:
    std::map<std::string, Range> model_;
    std::map<std::string, Tick> last_;
};

// -------------------------------------------------------------------- DTMC

constexpr const char* kStart = "^";

class Dtmc final : public Detector {
public:
    explicit Dtmc(DetectorOptions o) : Detector(o) {}
    DetectorKind kind() const noexcept override { return DetectorKind::Dtmc; }

protected:
    void learn(const FrameView& v) override {
        const auto sym = v.key.str();
        ++table_[prev_][sym];
        prev_ = sym;
    }
    void end_training() override { prev_ = kStart; }
    bool trained_empty() const override { return table_.empty(); }
    void reset_stream() override { prev_ = kStart; }

    void check(const FrameView& v, std::vector<Alert>& out) override {
        const auto sym = v.key.str();
        const std::string from = prev_;
        prev_ = sym;
        std::uint64_t count = 0;
        std::uint64_t total = 0;
        if (auto it = table_.find(from); it != table_.end()) {
            for (const auto& [to, c] : it->second) total += c;
            if (auto jt = it->second.find(sym); jt != it->second.end()) count = jt->second;
        }
        const double p = total > 0 ? static_cast<double>(count) / static_cast<double>(total) : 0.0;
        if (count == 0) {
            out.push_back(alert(v.tick, from + " -> " + sym, 0, "unseen_transition", options_.p_min,
                                "transition " + from + " -> " + sym + " not seen in training"));
        } else if (p < options_.p_min) {
            out.push_back(alert(v.tick, from + " -> " + sym, p, "min_probability", options_.p_min,
                                "transition probability " + fmt(p) + " below " + fmt(options_.p_min)));
        }
    }

    json save_model() const override {
        json t = json::object();
        for (const auto& [from, row] : table_) {
            json r = json::object();
            for (const auto& [to, c] : row) r[to] = c;
            t[from] = r;
        }
        return {{"transitions", t}};
    }
    void load_model(const json& j) override {
        for (const auto& [from, row] : j.at("transitions").items()) {
            for (const auto& [to, c] : row.items()) table_[from][to] = c.get<std::uint64_t>();
        }
    }

private:
    std::map<std::string, std::map<std::string, std::uint64_t>> table_;
    std::string prev_ = kStart;
};

}  // namespace

std::unique_ptr<Detector> make_detector(DetectorKind kind, DetectorOptions options) {
    switch (kind) {
        case DetectorKind::MinMax: return std::make_unique<MinMax>(options);
        case DetectorKind::SteadyTime: return std::make_unique<SteadyTime>(options);
        case DetectorKind::Iat: return std::make_unique<Iat>(options);
        case DetectorKind::Dtmc: return std::make_unique<Dtmc>(options);
    }
    return nullptr;
}

std::unique_ptr<Detector> load_detector(const json& j) {
    try {
        if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
            throw Error(ErrorKind::SchemaUnsupported, "model schema_version " + j.at("schema_version").dump());
        }
        auto kind = parse_detector(j.at("detector").get<std::string>());
        if (!kind) throw Error(ErrorKind::CorruptRecord, "unknown detector " + j.at("detector").dump());
        DetectorOptions o;
        const auto& oj = j.at("options");
        o.margin = oj.at("margin").get<double>();
        o.p_min = oj.at("p_min").get<double>();
        o.address_bucket = oj.at("address_bucket").get<int>();
        auto d = make_detector(*kind, o);
        const auto& tj = j.at("training");
        d->info_ = {tj.at("scenario").get<std::string>(), tj.at("config_hash").get<std::string>(),
                    tj.at("records").get<std::uint64_t>()};
        d->load_model(j.at("model"));
        d->reset();
        return d;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptRecord, std::string("model: ") + e.what());
    }
}

}  // namespace linesim::ids
