#pragma once

#include "linesim/trace/recorder.hpp"

#include <cstdint>
#include <string>

namespace linesim::trace {

// Writes every modbus_frame record as an IPv4/TCP packet (LINKTYPE_RAW) with
// synthesized addresses: one address per node, servers on port 502, clients
// on a port derived from the connection id. Returns the packet count.
std::size_t export_pcap(const Dataset& data, const std::string& path);

// Address assigned to a node in exports, e.g. "10.0.1.3" for FURNACE.
std::string node_address(const std::string& node);

}  // namespace linesim::trace
