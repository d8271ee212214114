#include "linesim/trace/recorder.hpp"
#include "linesim/error.hpp"
#include "linesim/hash.hpp"
#include "linesim/modbus/frame.hpp"

namespace linesim::trace {

using nlohmann::json;

Recorder::Recorder(DatasetHeader header, CaptureOptions options)
    : header_(std::move(header)), options_(std::move(options)), hash_(Fnv1a::kOffset) {
    if (!options_.dataset_path.empty()) {
        out_.open(options_.dataset_path, std::ios::binary | std::ios::trunc);
        if (!out_) throw Error(ErrorKind::IoError, "cannot write " + options_.dataset_path);
    }
    write_line(to_json(header_).dump());
}

Recorder::~Recorder() {
    try {
        close();
    } catch (...) {
    }
}

void Recorder::write_line(const std::string& line) {
    for (char c : line) {
        hash_ ^= static_cast<std::uint8_t>(c);
        hash_ *= Fnv1a::kPrime;
    }
    hash_ ^= '\n';
    hash_ *= Fnv1a::kPrime;
    if (out_.is_open()) {
        out_ << line << '\n';
        if (!out_) throw Error(ErrorKind::IoError, "write failed: " + options_.dataset_path);
    }
}

void Recorder::emit(TraceRecord r) {
    if (closed_) return;
    r.seq = ++seq_;
    write_line(to_json(r).dump());
    for (const auto& fn : subscribers_) fn(r);
    if (options_.keep_in_memory) kept_.push_back(std::move(r));
}

void Recorder::frame(Tick tick, const net::Packet& packet, const std::string& link) {
    if (!options_.frames) return;
    FrameBody b;
    b.src = packet.src;
    b.dst = packet.dst;
    b.link = link;
    b.conn = packet.conn;
    b.raw = packet.bytes;
    if (auto d = modbus::decode_one(packet.bytes); d && d->status == modbus::FrameStatus::Ok) {
        b.framed = true;
        b.txn = d->frame.transaction_id;
        b.unit = d->frame.unit_id;
        b.function = d->frame.function;
        b.unknown_function = d->unknown_function;
    }
    emit({tick, 0, std::move(b)});
}

void Recorder::samples(Tick tick, const physics::SensorFrame& frame, int plc_state) {
    if (!options_.samples) return;
    const auto& schema = physics::schema_for(frame.station);
    const std::string prefix = std::string(to_string(frame.station)) + ".";
    auto put = [&](const std::string& name, int value) {
        auto [it, fresh] = last_.try_emplace(name, value);
        if (!fresh && it->second == value) return;
        it->second = value;
        emit({tick, 0, SampleBody{name, value}});
    };
    for (std::size_t i = 0; i < frame.values.size(); ++i) put(prefix + schema.sensors[i].name, frame.values[i]);
    put(prefix + "plc_state", plc_state);
}

void Recorder::link_event(const net::LinkEvent& ev) { emit({ev.tick, 0, LinkEventBody{ev.link, ev.kind, ev.detail}}); }

void Recorder::ground_truth(Tick tick, const GroundTruthBody& gt) { emit({tick, 0, gt}); }

void Recorder::close() {
    if (closed_) return;
    closed_ = true;
    if (out_.is_open()) {
        out_.flush();
        const bool ok = static_cast<bool>(out_);
        out_.close();
        if (!ok) throw Error(ErrorKind::IoError, "write failed: " + options_.dataset_path);
    }
}

std::vector<GroundTruthBody> Dataset::ground_truth() const {
    std::vector<GroundTruthBody> out;
    for (const auto& r : records) {
        if (const auto* g = r.truth()) out.push_back(*g);
    }
    return out;
}

DatasetHeader replay(const std::string& path, const std::function<void(const TraceRecord&)>& consumer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
    std::string line;
    std::size_t lineno = 0;
    std::optional<DatasetHeader> header;
    Tick last_tick = 0;
    std::uint64_t last_seq = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const bool terminated = !in.eof();
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::CorruptRecord, "line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!terminated) throw Error(ErrorKind::CorruptRecord, "line " + std::to_string(lineno) + ": truncated");
        try {
            if (!header) {
                header = header_from_json(j);
                continue;
            }
            auto r = record_from_json(j);
            if (r.tick < last_tick || r.seq <= last_seq) throw Error(ErrorKind::CorruptRecord, "out of order");
            last_tick = r.tick;
            last_seq = r.seq;
            consumer(r);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::SchemaUnsupported) throw;
            throw Error(ErrorKind::CorruptRecord, "line " + std::to_string(lineno) + ": " + e.detail());
        }
    }
    if (!header) throw Error(ErrorKind::CorruptRecord, "line 1: empty dataset");
    return *header;
}

Dataset load_dataset(const std::string& path) {
    Dataset d;
    d.header = replay(path, [&](const TraceRecord& r) { d.records.push_back(r); });
    return d;
}

}  // namespace linesim::trace
