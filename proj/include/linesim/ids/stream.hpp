#pragma once

#include "linesim/kernel/clock.hpp"
#include "linesim/modbus/pdu.hpp"
#include "linesim/trace/record.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace linesim::ids {

// Detector input key for one frame. Responses inherit the address of the
// request they answer.
struct ChannelKey {
    std::string src;
    std::string dst;
    std::uint8_t function = 0;             // as on the wire, exception bit included
    std::optional<std::uint32_t> bucket;   // lower bound of the address bucket

    std::string str() const;
    friend auto operator<=>(const ChannelKey&, const ChannelKey&) = default;
};

// A register value observed on the wire: read responses and acknowledged writes.
struct ProcessUpdate {
    std::string variable;   // "<PLC>.hr<addr>", ".ir", ".co", ".di"
    double value = 0;
};

struct FrameView {
    Tick tick = 0;
    bool request = false;
    ChannelKey key;
    std::vector<ProcessUpdate> updates;
};

// Turns the frame records of a trace into channel keys and process updates.
// Stateful: requests are remembered until their response arrives.
class TraceInterpreter {
public:
    explicit TraceInterpreter(int address_bucket = 1);

    // nullopt for records that are not frames or cannot be decoded.
    std::optional<FrameView> interpret(const trace::TraceRecord& record);

private:
    struct Pending {
        std::uint8_t function = 0;
        std::optional<std::uint16_t> address;
        std::optional<modbus::Request> request;
    };
    using PendingKey = std::tuple<std::string, std::string, std::uint32_t, std::uint16_t>;

    int bucket_width_;
    std::map<PendingKey, Pending> pending_;
};

}  // namespace linesim::ids
