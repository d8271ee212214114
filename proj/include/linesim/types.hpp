#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace linesim {

// One PLC per station. FURNACE and MILL share the multi-processing unit.
enum class StationId : std::uint8_t { VC = 0, WAREHOUSE = 1, FURNACE = 2, MILL = 3, SORTING = 4 };

inline constexpr std::size_t kStationCount = 5;
inline constexpr std::array<StationId, kStationCount> kAllStations = {
    StationId::VC, StationId::WAREHOUSE, StationId::FURNACE, StationId::MILL, StationId::SORTING};

std::string_view to_string(StationId id) noexcept;
std::optional<StationId> parse_station(std::string_view name) noexcept;
inline std::size_t index_of(StationId id) noexcept { return static_cast<std::size_t>(id); }

// Codes match the warehouse color register (1=white, 2=red, 3=blue).
enum class Color : std::uint8_t { White = 1, Red = 2, Blue = 3 };

std::string_view to_string(Color c) noexcept;
std::optional<Color> parse_color(std::string_view name) noexcept;
inline int color_code(Color c) noexcept { return static_cast<int>(c); }
std::optional<Color> color_from_code(int code) noexcept;
// Bay index on the sorting line: 0 white, 1 red, 2 blue.
inline std::size_t bay_index(Color c) noexcept { return static_cast<std::size_t>(c) - 1; }

using CylinderId = std::uint32_t;

}  // namespace linesim
