#include "linesim/types.hpp"

namespace linesim {

std::string_view to_string(StationId id) noexcept {
    switch (id) {
        case StationId::VC: return "VC";
        case StationId::WAREHOUSE: return "WAREHOUSE";
        case StationId::FURNACE: return "FURNACE";
        case StationId::MILL: return "MILL";
        case StationId::SORTING: return "SORTING";
    }
    return "?";
}

std::optional<StationId> parse_station(std::string_view name) noexcept {
    for (auto s : kAllStations) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

std::string_view to_string(Color c) noexcept {
    switch (c) {
        case Color::White: return "white";
        case Color::Red: return "red";
        case Color::Blue: return "blue";
    }
    return "?";
}

std::optional<Color> parse_color(std::string_view name) noexcept {
    if (name == "white") return Color::White;
    if (name == "red") return Color::Red;
    if (name == "blue") return Color::Blue;
    return std::nullopt;
}

std::optional<Color> color_from_code(int code) noexcept {
    if (code >= 1 && code <= 3) return static_cast<Color>(code);
    return std::nullopt;
}

}  // namespace linesim
