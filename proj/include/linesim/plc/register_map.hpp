#pragma once

#include "linesim/physics/params.hpp"
#include "linesim/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace linesim::plc {

struct HoldingSpec {
    std::string name;
    std::uint16_t lo = 0;
    std::uint16_t hi = 65535;
    bool writable = false;   // writable entries are the PLC's parameters
    std::uint16_t initial = 0;
    std::string unit;
};

// Holding-register table of one PLC, by address.
const std::vector<HoldingSpec>& holding_map(StationId station);
std::optional<std::size_t> holding_address(StationId station, std::string_view name);

// Default TCP port of each PLC's Modbus server (1502..1506).
std::uint16_t default_port(StationId station) noexcept;

// Named holding-register addresses used by programs and SCADA.
namespace hr {
inline constexpr std::size_t kJobCount = 0;  // VC

inline constexpr std::size_t kTargetX = 0;   // WAREHOUSE
inline constexpr std::size_t kTargetY = 1;
inline constexpr std::size_t kColor = 2;
inline constexpr std::size_t kCommand = 3;
inline constexpr std::size_t kStatus = 4;
inline constexpr std::size_t kInventory = 5;  // 9 slots, (y-1)*3 + (x-1)

inline constexpr std::size_t kFiringTime = 0;  // FURNACE
inline constexpr std::size_t kFiredCount = 1;

inline constexpr std::size_t kMillingTime = 0;  // MILL
inline constexpr std::size_t kMilledCount = 1;

inline constexpr std::size_t kSortedWhite = 0;  // SORTING
}  // namespace hr

// Warehouse status register values.
enum class WarehouseStatus : std::uint16_t { Idle = 0, Storing = 1, Retrieving = 2, Rejected = 3 };

}  // namespace linesim::plc
