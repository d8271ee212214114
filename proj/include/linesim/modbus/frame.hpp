#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace linesim::modbus {

using Bytes = std::vector<std::uint8_t>;

enum class Function : std::uint8_t {
    ReadCoils = 0x01,
    ReadDiscreteInputs = 0x02,
    ReadHoldingRegisters = 0x03,
    ReadInputRegisters = 0x04,
    WriteSingleCoil = 0x05,
    WriteSingleRegister = 0x06,
    WriteMultipleCoils = 0x0F,
    WriteMultipleRegisters = 0x10,
};

enum class ExceptionCode : std::uint8_t {
    IllegalFunction = 0x01,
    IllegalDataAddress = 0x02,
    IllegalDataValue = 0x03,
    ServerDeviceFailure = 0x04,
};

inline constexpr std::size_t kMbapSize = 7;       // txn(2) proto(2) len(2) unit(1)
inline constexpr std::size_t kMaxPduSize = 253;   // function + data
inline constexpr std::uint8_t kExceptionBit = 0x80;

bool is_supported_function(std::uint8_t code) noexcept;

// One MBAP+PDU application data unit. `length` is derived on encode
// (unit + function + payload) and checked on decode.
struct ModbusFrame {
    std::uint16_t transaction_id = 0;
    std::uint16_t protocol_id = 0;
    std::uint8_t unit_id = 1;
    std::uint8_t function = 0;
    Bytes payload;

    std::uint16_t length() const noexcept { return static_cast<std::uint16_t>(2 + payload.size()); }
    bool is_exception() const noexcept { return (function & kExceptionBit) != 0; }
    std::uint8_t base_function() const noexcept { return function & 0x7F; }

    friend bool operator==(const ModbusFrame&, const ModbusFrame&) = default;
};

// Throws Error(PayloadTooLarge) when function + payload exceed 253 bytes.
Bytes encode(const ModbusFrame& frame);

enum class FrameStatus {
    Ok,
    BadProtocolId,
    LengthMismatch,   // declared length too small to hold unit + function
};

struct DecodedFrame {
    FrameStatus status = FrameStatus::Ok;
    bool unknown_function = false;  // framed fine, function outside the supported set
    ModbusFrame frame;
    Bytes raw;                      // exact bytes consumed for this frame
};

// Incremental decoder over a TCP byte stream. Frames are delimited by the
// MBAP length field, so a malformed frame is skipped by its declared length
// and the stream stays in sync.
class StreamDecoder {
public:
    void feed(std::span<const std::uint8_t> bytes);

    // nullopt means need-more-bytes.
    std::optional<DecodedFrame> next();

    std::size_t buffered() const noexcept { return buf_.size(); }

private:
    std::deque<std::uint8_t> buf_;
};

// Decodes exactly one complete buffer; nullopt if incomplete.
std::optional<DecodedFrame> decode_one(std::span<const std::uint8_t> bytes);

}  // namespace linesim::modbus
