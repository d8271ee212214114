#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace linesim {

// FNV-1a, 64 bit. Used for state hashes, config hashes and RNG stream labels;
// stable across platforms.
class Fnv1a {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    void bytes(std::span<const std::uint8_t> data) noexcept {
        for (auto b : data) {
            h_ ^= b;
            h_ *= kPrime;
        }
    }
    void str(std::string_view s) noexcept {
        for (char c : s) {
            h_ ^= static_cast<std::uint8_t>(c);
            h_ *= kPrime;
        }
        u8(0xff);
    }
    void u8(std::uint8_t v) noexcept {
        h_ ^= v;
        h_ *= kPrime;
    }
    void u64(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i64(std::int64_t v) noexcept { u64(static_cast<std::uint64_t>(v)); }
    void boolean(bool v) noexcept { u8(v ? 1 : 0); }

    std::uint64_t value() const noexcept { return h_; }

private:
    std::uint64_t h_ = kOffset;
};

inline std::uint64_t fnv1a(std::string_view s) noexcept {
    Fnv1a h;
    h.str(s);
    return h.value();
}

std::string hex64(std::uint64_t v);

}  // namespace linesim
