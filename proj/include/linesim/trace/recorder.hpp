#pragma once

#include "linesim/net/fabric.hpp"
#include "linesim/physics/schema.hpp"
#include "linesim/trace/record.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace linesim::trace {

struct CaptureOptions {
    bool frames = true;
    bool samples = true;
    bool keep_in_memory = false;
    std::string dataset_path;   // empty: no file
};

// Append-only sink fed from the tick loop. Writes one JSON object per line:
// the header first, then records in (tick, seq) order.
class Recorder {
public:
    Recorder(DatasetHeader header, CaptureOptions options);
    ~Recorder();

    void frame(Tick tick, const net::Packet& packet, const std::string& link);
    // Emits one process_sample per variable whose value changed since the
    // last call (every variable on the first call).
    void samples(Tick tick, const physics::SensorFrame& frame, int plc_state);
    void link_event(const net::LinkEvent& ev);
    void ground_truth(Tick tick, const GroundTruthBody& gt);
    // Flushes and closes; throws IoError on write failure.
    void close();

    const DatasetHeader& header() const noexcept { return header_; }
    const std::vector<TraceRecord>& records() const noexcept { return kept_; }
    std::uint64_t record_count() const noexcept { return seq_; }
    std::uint64_t content_hash() const noexcept { return hash_; }
    const std::string& path() const noexcept { return options_.dataset_path; }

    // Live consumers (e.g. online detectors) see every record as it is written.
    void subscribe(std::function<void(const TraceRecord&)> fn) { subscribers_.push_back(std::move(fn)); }

private:
    void emit(TraceRecord r);
    void write_line(const std::string& line);

    DatasetHeader header_;
    CaptureOptions options_;
    std::ofstream out_;
    bool closed_ = false;
    std::uint64_t seq_ = 0;
    std::uint64_t hash_;
    std::map<std::string, int> last_;
    std::vector<TraceRecord> kept_;
    std::vector<std::function<void(const TraceRecord&)>> subscribers_;
};

struct Dataset {
    DatasetHeader header;
    std::vector<TraceRecord> records;

    Tick last_tick() const noexcept { return records.empty() ? 0 : records.back().tick; }
    std::vector<GroundTruthBody> ground_truth() const;
};

// Throws IoError, SchemaUnsupported, or CorruptRecord("line N: ...").
Dataset load_dataset(const std::string& path);
// Streaming variant; returns the header.
DatasetHeader replay(const std::string& path, const std::function<void(const TraceRecord&)>& consumer);

}  // namespace linesim::trace
