#include "linesim/physics/cylinder.hpp"
#include "linesim/error.hpp"

namespace linesim::physics {

std::string_view to_string(CylinderState s) noexcept {
    switch (s) {
        case CylinderState::Raw: return "raw";
        case CylinderState::Stored: return "stored";
        case CylinderState::InTransit: return "in_transit";
        case CylinderState::Firing: return "firing";
        case CylinderState::Milling: return "milling";
        case CylinderState::Finished: return "finished";
        case CylinderState::Sorted: return "sorted";
        case CylinderState::Removed: return "removed";
    }
    return "?";
}

CylinderId CylinderRegistry::create(Color color, CylinderState state, Location where) {
    const auto id = next_id_++;
    cylinders_.emplace(id, Cylinder{id, color, state, std::move(where)});
    return id;
}

const Cylinder& CylinderRegistry::get(CylinderId id) const {
    auto it = cylinders_.find(id);
    if (it == cylinders_.end()) throw Error(ErrorKind::TargetNotFound, "cylinder " + std::to_string(id));
    return it->second;
}

Cylinder& CylinderRegistry::mut(CylinderId id) {
    return const_cast<Cylinder&>(get(id));
}

bool CylinderRegistry::advance(CylinderId id, CylinderState next) {
    auto& c = mut(id);
    if (c.state == CylinderState::Removed || c.state == CylinderState::Sorted) return false;
    if (next < c.state) return false;
    c.state = next;
    return true;
}

void CylinderRegistry::move(CylinderId id, Location where) {
    mut(id).location = std::move(where);
}

void CylinderRegistry::mark_removed(CylinderId id) {
    auto& c = mut(id);
    c.state = CylinderState::Removed;
    c.location = Location{c.location.station, "removed"};
}

std::size_t CylinderRegistry::count(CylinderState s) const {
    std::size_t n = 0;
    for (const auto& [id, c] : cylinders_) n += c.state == s;
    return n;
}

std::size_t CylinderRegistry::present() const {
    return cylinders_.size() - count(CylinderState::Removed) - count(CylinderState::Sorted);
}

}  // namespace linesim::physics
