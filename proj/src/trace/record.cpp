#include "linesim/trace/record.hpp"
#include "linesim/error.hpp"
#include "linesim/physics/schema.hpp"
#include "linesim/types.hpp"

namespace linesim::trace {

using nlohmann::json;

std::string_view to_string(RecordKind k) noexcept {
    switch (k) {
        case RecordKind::ModbusFrame: return "modbus_frame";
        case RecordKind::ProcessSample: return "process_sample";
        case RecordKind::GroundTruth: return "ground_truth";
        case RecordKind::LinkEvent: return "link_event";
    }
    return "?";
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(const std::string& text) {
    auto nibble = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw Error(ErrorKind::CorruptRecord, "bad hex");
    };
    if (text.size() % 2 != 0) throw Error(ErrorKind::CorruptRecord, "odd hex length");
    std::vector<std::uint8_t> out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(nibble(text[2 * i]) << 4 | nibble(text[2 * i + 1]));
    }
    return out;
}

json to_json(const TraceRecord& r) {
    json j;
    j["tick"] = r.tick;
    j["seq"] = r.seq;
    j["kind"] = std::string(to_string(r.kind()));
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, FrameBody>) {
                j["src"] = b.src;
                j["dst"] = b.dst;
                j["link"] = b.link;
                j["conn"] = b.conn;
                j["raw"] = to_hex(b.raw);
                if (b.framed) {
                    j["txn"] = b.txn;
                    j["unit"] = b.unit;
                    j["fc"] = b.function;
                    j["unknown_function"] = b.unknown_function;
                }
            } else if constexpr (std::is_same_v<T, SampleBody>) {
                j["variable"] = b.variable;
                j["value"] = b.value;
            } else if constexpr (std::is_same_v<T, GroundTruthBody>) {
                j["label"] = b.label;
                j["attack"] = b.attack;
                j["target"] = b.target;
                j["start"] = b.start;
                j["end"] = b.end;
            } else {
                j["link"] = b.link;
                j["event"] = b.event;
                j["detail"] = b.detail;
            }
        },
        r.body);
    return j;
}

TraceRecord record_from_json(const json& j) {
    try {
        TraceRecord r;
        r.tick = j.at("tick").get<Tick>();
        r.seq = j.at("seq").get<std::uint64_t>();
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "modbus_frame") {
            FrameBody b;
            b.src = j.at("src").get<std::string>();
            b.dst = j.at("dst").get<std::string>();
            b.link = j.at("link").get<std::string>();
            b.conn = j.at("conn").get<std::uint32_t>();
            b.raw = from_hex(j.at("raw").get<std::string>());
            if (j.contains("txn")) {
                b.framed = true;
                b.txn = j.at("txn").get<std::uint16_t>();
                b.unit = j.at("unit").get<std::uint8_t>();
                b.function = j.at("fc").get<std::uint8_t>();
                b.unknown_function = j.at("unknown_function").get<bool>();
            }
            r.body = std::move(b);
        } else if (kind == "process_sample") {
            r.body = SampleBody{j.at("variable").get<std::string>(), j.at("value").get<int>()};
        } else if (kind == "ground_truth") {
            r.body = GroundTruthBody{j.at("label").get<std::string>(), j.at("attack").get<std::string>(),
                                     j.at("target").get<std::string>(), j.at("start").get<Tick>(),
                                     j.at("end").get<Tick>()};
        } else if (kind == "link_event") {
            r.body = LinkEventBody{j.at("link").get<std::string>(), j.at("event").get<std::string>(),
                                   j.at("detail").get<std::string>()};
        } else {
            throw Error(ErrorKind::CorruptRecord, "unknown kind " + kind);
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptRecord, e.what());
    }
}

json to_json(const DatasetHeader& h) {
    json j;
    j["kind"] = "header";
    j["schema_version"] = h.schema_version;
    j["tick_ms"] = h.tick_ms;
    j["scenario"] = h.scenario;
    j["seed"] = h.seed;
    j["config_hash"] = h.config_hash;
    json vars = json::object();
    for (const auto& [name, r] : h.variables) vars[name] = {{"lo", r.lo}, {"hi", r.hi}, {"unit", r.unit}};
    j["variables"] = vars;
    return j;
}

DatasetHeader header_from_json(const json& j) {
    try {
        if (j.at("kind").get<std::string>() != "header") throw Error(ErrorKind::CorruptRecord, "missing header");
        DatasetHeader h;
        h.schema_version = j.at("schema_version").get<int>();
        if (h.schema_version != kSchemaVersion) {
            throw Error(ErrorKind::SchemaUnsupported, "dataset schema_version " + std::to_string(h.schema_version));
        }
        h.tick_ms = j.at("tick_ms").get<int>();
        h.scenario = j.at("scenario").get<std::string>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& [name, r] : j.at("variables").items()) {
            h.variables[name] = {r.at("lo").get<int>(), r.at("hi").get<int>(), r.at("unit").get<std::string>()};
        }
        return h;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptRecord, e.what());
    }
}

std::map<std::string, VariableRange> process_variables(const physics::PhysicsParams& params) {
    std::map<std::string, VariableRange> out;
    for (auto s : kAllStations) {
        const std::string prefix = std::string(to_string(s)) + ".";
        for (const auto& sig : physics::build_schema(s, params).sensors) out[prefix + sig.name] = {sig.lo, sig.hi, sig.unit};
        out[prefix + "plc_state"] = {0, 15, "state"};
    }
    return out;
}

}  // namespace linesim::trace
