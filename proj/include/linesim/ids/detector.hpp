#pragma once

#include "linesim/ids/stream.hpp"
#include "linesim/kernel/clock.hpp"
#include "linesim/trace/record.hpp"

#include "json.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace linesim::ids {

inline constexpr int kModelSchemaVersion = 1;

enum class DetectorKind { MinMax, SteadyTime, Iat, Dtmc };
std::string_view to_string(DetectorKind k) noexcept;
std::optional<DetectorKind> parse_detector(std::string_view s) noexcept;
inline constexpr DetectorKind kAllDetectors[] = {DetectorKind::MinMax, DetectorKind::SteadyTime, DetectorKind::Iat,
                                                 DetectorKind::Dtmc};

struct Alert {
    DetectorKind detector = DetectorKind::MinMax;
    Tick tick = 0;
    std::string subject;    // variable name or channel key
    double observed = 0;
    std::string bound;      // which learned bound was violated
    double limit = 0;       // the bound's value after margins
    std::string message;

    nlohmann::json to_json() const;
    static Alert from_json(const nlohmann::json& j);
    friend bool operator==(const Alert&, const Alert&) = default;
};

struct DetectorOptions {
    double margin = 0.05;     // relative slack on every learned range
    double p_min = 0.0;       // DTMC: transitions below this probability alert; 0 = unseen only
    int address_bucket = 1;   // channel key address bucket width
};

struct TrainingInfo {
    std::string scenario;
    std::string config_hash;
    std::uint64_t records = 0;
};

// Train once over a trace, then detect over any number of streams. Detection
// is a fold over records; reset() starts a new stream with the same model.
class Detector {
public:
    virtual ~Detector() = default;

    virtual DetectorKind kind() const noexcept = 0;
    const DetectorOptions& options() const noexcept { return options_; }
    const TrainingInfo& training() const noexcept { return info_; }

    // Throws EmptyTraining when the trace has nothing this detector models.
    void train(const std::vector<trace::TraceRecord>& records, TrainingInfo info = {});

    void reset();
    void observe(const trace::TraceRecord& record, std::vector<Alert>& out);
    std::vector<Alert> detect(const std::vector<trace::TraceRecord>& records);

    nlohmann::json save() const;

protected:
    explicit Detector(DetectorOptions options) : options_(options), interp_(options.address_bucket) {}

    virtual void learn(const FrameView& view) = 0;
    virtual void end_training() {}
    virtual bool trained_empty() const = 0;
    virtual void reset_stream() = 0;
    virtual void check(const FrameView& view, std::vector<Alert>& out) = 0;
    virtual nlohmann::json save_model() const = 0;
    virtual void load_model(const nlohmann::json& j) = 0;

    Alert alert(Tick tick, std::string subject, double observed, std::string bound, double limit,
                std::string message) const;

    DetectorOptions options_;
    TrainingInfo info_;

private:
    friend std::unique_ptr<Detector> load_detector(const nlohmann::json& j);
    TraceInterpreter interp_;
};

std::unique_ptr<Detector> make_detector(DetectorKind kind, DetectorOptions options = {});
// Throws SchemaUnsupported or CorruptRecord on a malformed model.
std::unique_ptr<Detector> load_detector(const nlohmann::json& j);

}  // namespace linesim::ids
