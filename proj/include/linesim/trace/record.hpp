#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/physics/params.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace linesim::trace {

inline constexpr int kSchemaVersion = 1;

enum class RecordKind { ModbusFrame, ProcessSample, GroundTruth, LinkEvent };
std::string_view to_string(RecordKind k) noexcept;

struct FrameBody {
    std::string src;
    std::string dst;
    std::string link;        // link the frame arrived on at the capture point
    std::uint32_t conn = 0;
    std::vector<std::uint8_t> raw;
    // Decoded view, redundant with raw; absent fields mean undecodable.
    bool framed = false;
    std::uint16_t txn = 0;
    std::uint8_t unit = 0;
    std::uint8_t function = 0;   // as on the wire, exception bit included
    bool unknown_function = false;
};

struct SampleBody {
    std::string variable;   // "<STATION>.<signal>"
    int value = 0;
};

struct GroundTruthBody {
    std::string label;
    std::string attack;
    std::string target;
    Tick start = 0;
    Tick end = 0;
};

struct LinkEventBody {
    std::string link;
    std::string event;
    std::string detail;
};

struct TraceRecord {
    Tick tick = 0;
    std::uint64_t seq = 0;
    std::variant<FrameBody, SampleBody, GroundTruthBody, LinkEventBody> body;

    RecordKind kind() const noexcept { return static_cast<RecordKind>(body.index()); }
    const FrameBody* frame() const noexcept { return std::get_if<FrameBody>(&body); }
    const SampleBody* sample() const noexcept { return std::get_if<SampleBody>(&body); }
    const GroundTruthBody* truth() const noexcept { return std::get_if<GroundTruthBody>(&body); }
};

struct VariableRange {
    int lo = 0;
    int hi = 1;
    std::string unit;
};

struct DatasetHeader {
    int schema_version = kSchemaVersion;
    int tick_ms = kDefaultTickMs;
    std::string scenario;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::map<std::string, VariableRange> variables;
};

nlohmann::json to_json(const TraceRecord& r);
// Throws CorruptRecord(detail) on malformed input.
TraceRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetHeader& h);
DatasetHeader header_from_json(const nlohmann::json& j);

// Variable ranges of every process sample the recorder emits.
std::map<std::string, VariableRange> process_variables(const physics::PhysicsParams& params);

std::string to_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> from_hex(const std::string& text);  // throws CorruptRecord

}  // namespace linesim::trace
