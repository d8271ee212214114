#include "linesim/plc/register_map.hpp"

#include <array>

namespace linesim::plc {

namespace {

HoldingSpec ro(std::string name, std::string unit = "count") {
    return HoldingSpec{std::move(name), 0, 65535, false, 0, std::move(unit)};
}

std::vector<HoldingSpec> build(StationId s) {
    switch (s) {
        case StationId::VC: return {ro("job_count")};
        case StationId::WAREHOUSE: {
            std::vector<HoldingSpec> m = {
                {"target_x", 0, 3, true, 0, "slot"},
                {"target_y", 0, 3, true, 0, "slot"},
                {"color", 0, 3, true, 0, "code"},
                {"command", 0, 1, true, 0, "flag"},
                ro("status", "code"),
            };
            for (int y = 1; y <= 3; ++y) {
                for (int x = 1; x <= 3; ++x) {
                    m.push_back(ro("slot_" + std::to_string(x) + "_" + std::to_string(y), "code"));
                }
            }
            return m;
        }
        case StationId::FURNACE: return {{"firing_time_ms", 0, 60000, true, 1000, "ms"}, ro("fired_count")};
        case StationId::MILL: return {{"milling_time_ms", 0, 60000, true, 1000, "ms"}, ro("milled_count")};
        case StationId::SORTING: return {ro("sorted_white"), ro("sorted_red"), ro("sorted_blue")};
    }
    return {};
}

}  // namespace

const std::vector<HoldingSpec>& holding_map(StationId station) {
    static const auto table = [] {
        std::array<std::vector<HoldingSpec>, kStationCount> t;
        for (auto s : kAllStations) t[index_of(s)] = build(s);
        return t;
    }();
    return table[index_of(station)];
}

std::optional<std::size_t> holding_address(StationId station, std::string_view name) {
    const auto& m = holding_map(station);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i].name == name) return i;
    }
    return std::nullopt;
}

std::uint16_t default_port(StationId station) noexcept {
    return static_cast<std::uint16_t>(1502 + index_of(station));
}

}  // namespace linesim::plc
