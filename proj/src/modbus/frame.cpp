#include "linesim/modbus/frame.hpp"
#include "linesim/error.hpp"

namespace linesim::modbus {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

}  // namespace

bool is_supported_function(std::uint8_t code) noexcept {
    switch (code & 0x7F) {
        case 0x01: case 0x02: case 0x03: case 0x04:
        case 0x05: case 0x06: case 0x0F: case 0x10:
            return true;
        default:
            return false;
    }
}

Bytes encode(const ModbusFrame& frame) {
    if (frame.payload.size() + 1 > kMaxPduSize) {
        throw Error(ErrorKind::PayloadTooLarge, std::to_string(frame.payload.size() + 1) + " byte PDU");
    }
    Bytes out;
    out.reserve(kMbapSize + 1 + frame.payload.size());
    put_u16(out, frame.transaction_id);
    put_u16(out, 0);
    put_u16(out, frame.length());
    out.push_back(frame.unit_id);
    out.push_back(frame.function);
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    return out;
}

void StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<DecodedFrame> StreamDecoder::next() {
    if (buf_.size() < 6) return std::nullopt;
    const std::uint16_t declared = static_cast<std::uint16_t>((buf_[4] << 8) | buf_[5]);
    const std::size_t total = 6 + static_cast<std::size_t>(declared);
    if (buf_.size() < total) return std::nullopt;

    DecodedFrame out;
    out.raw.assign(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));

    const auto& r = out.raw;
    out.frame.transaction_id = static_cast<std::uint16_t>((r[0] << 8) | r[1]);
    out.frame.protocol_id = static_cast<std::uint16_t>((r[2] << 8) | r[3]);
    if (declared < 2) {
        out.status = FrameStatus::LengthMismatch;
        if (declared == 1) out.frame.unit_id = r[6];
        return out;
    }
    out.frame.unit_id = r[6];
    out.frame.function = r[7];
    out.frame.payload.assign(r.begin() + 8, r.end());
    if (out.frame.protocol_id != 0) {
        out.status = FrameStatus::BadProtocolId;
    } else if (out.frame.payload.size() + 1 > kMaxPduSize) {
        out.status = FrameStatus::LengthMismatch;
    }
    out.unknown_function = !is_supported_function(out.frame.function);
    return out;
}

std::optional<DecodedFrame> decode_one(std::span<const std::uint8_t> bytes) {
    StreamDecoder d;
    d.feed(bytes);
    return d.next();
}

}  // namespace linesim::modbus
