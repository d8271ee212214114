#pragma once

#include "linesim/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace linesim::physics {

// Lifecycle order; Removed may follow any non-terminal state.
enum class CylinderState : std::uint8_t { Raw, Stored, InTransit, Firing, Milling, Finished, Sorted, Removed };

std::string_view to_string(CylinderState s) noexcept;

struct Location {
    StationId station = StationId::VC;
    std::string slot;  // "input", "gripper", "belt", "rack(2,1)", "mill", "bay_red", ...

    friend bool operator==(const Location&, const Location&) = default;
};

struct Cylinder {
    CylinderId id = 0;
    Color color = Color::White;
    CylinderState state = CylinderState::Raw;
    Location location;
};

class CylinderRegistry {
public:
    CylinderId create(Color color, CylinderState state, Location where);

    bool contains(CylinderId id) const { return cylinders_.count(id) != 0; }
    const Cylinder& get(CylinderId id) const;

    // Forward-only along the lifecycle; returns false (and leaves the state)
    // on an attempted backwards move.
    bool advance(CylinderId id, CylinderState next);
    void move(CylinderId id, Location where);
    void mark_removed(CylinderId id);

    const std::map<CylinderId, Cylinder>& all() const noexcept { return cylinders_; }
    std::size_t spawned() const noexcept { return cylinders_.size(); }
    std::size_t count(CylinderState s) const;
    // Cylinders physically present somewhere in the line (not removed, not in a bay).
    std::size_t present() const;

private:
    Cylinder& mut(CylinderId id);

    std::map<CylinderId, Cylinder> cylinders_;
    CylinderId next_id_ = 1;
};

}  // namespace linesim::physics
