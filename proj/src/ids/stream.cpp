#include "linesim/ids/stream.hpp"
#include "linesim/modbus/frame.hpp"
#include "linesim/types.hpp"

#include <cstdio>

namespace linesim::ids {

std::string ChannelKey::str() const {
    char fn[8];
    std::snprintf(fn, sizeof fn, "%02x", function);
    std::string s = src + ">" + dst + ":" + fn + "@";
    s += bucket ? std::to_string(*bucket) : std::string("-");
    return s;
}

TraceInterpreter::TraceInterpreter(int address_bucket) : bucket_width_(address_bucket < 1 ? 1 : address_bucket) {}

namespace {

const char* table_of(std::uint8_t function) {
    switch (function) {
        case 0x01: case 0x05: case 0x0F: return "co";
        case 0x02: return "di";
        case 0x03: case 0x06: case 0x10: return "hr";
        case 0x04: return "ir";
        default: return nullptr;
    }
}

}  // namespace

std::optional<FrameView> TraceInterpreter::interpret(const trace::TraceRecord& record) {
    const auto* f = record.frame();
    if (!f || !f->framed) return std::nullopt;
    const auto decoded = modbus::decode_one(f->raw);
    if (!decoded || decoded->status != modbus::FrameStatus::Ok) return std::nullopt;
    const auto& frame = decoded->frame;

    FrameView view;
    view.tick = record.tick;
    view.request = parse_station(f->dst).has_value();
    view.key.src = f->src;
    view.key.dst = f->dst;
    view.key.function = frame.function;

    if (view.request) {
        Pending p;
        p.function = frame.function;
        if (frame.payload.size() >= 2) p.address = static_cast<std::uint16_t>(frame.payload[0] << 8 | frame.payload[1]);
        auto parsed = modbus::parse_request(frame);
        if (parsed.request) p.request = std::move(parsed.request);
        if (p.address) view.key.bucket = *p.address / bucket_width_ * bucket_width_;
        pending_[{f->src, f->dst, f->conn, frame.transaction_id}] = std::move(p);
        return view;
    }

    auto it = pending_.find({f->dst, f->src, f->conn, frame.transaction_id});
    if (it == pending_.end()) return view;
    const Pending p = std::move(it->second);
    pending_.erase(it);
    if (p.address) view.key.bucket = *p.address / bucket_width_ * bucket_width_;
    if (frame.is_exception() || !p.request) return view;

    const auto* table = table_of(frame.base_function());
    if (!table) return view;
    const auto& req = *p.request;
    const auto resp = modbus::parse_response(frame, req.quantity);
    if (!resp) return view;
    const std::string prefix = f->src + "." + table;
    auto put = [&](std::size_t i, double v) {
        view.updates.push_back({prefix + std::to_string(req.address + i), v});
    };
    switch (frame.base_function()) {
        case 0x01: case 0x02:
            for (std::size_t i = 0; i < resp->bits.size(); ++i) put(i, resp->bits[i] ? 1 : 0);
            break;
        case 0x03: case 0x04:
            for (std::size_t i = 0; i < resp->registers.size(); ++i) put(i, resp->registers[i]);
            break;
        case 0x05: case 0x0F:
            for (std::size_t i = 0; i < req.bits.size(); ++i) put(i, req.bits[i] ? 1 : 0);
            break;
        case 0x06: case 0x10:
            for (std::size_t i = 0; i < req.registers.size(); ++i) put(i, req.registers[i]);
            break;
        default:
            break;
    }
    return view;
}

}  // namespace linesim::ids
