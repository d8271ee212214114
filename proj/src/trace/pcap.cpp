#include "linesim/trace/pcap.hpp"
#include "linesim/error.hpp"
#include "linesim/hash.hpp"
#include "linesim/types.hpp"

#include <array>
#include <fstream>
#include <map>
#include <tuple>

namespace linesim::trace {

namespace {

std::array<std::uint8_t, 4> ip_of(const std::string& node) {
    if (node == "scada") return {10, 0, 0, 1};
    if (node == "attacker") return {10, 0, 0, 66};
    if (node == "external") return {10, 0, 0, 99};
    if (auto s = parse_station(node)) return {10, 0, 1, static_cast<std::uint8_t>(index_of(*s) + 1)};
    const auto h = fnv1a(node);
    return {10, 0, 2, static_cast<std::uint8_t>(100 + h % 100)};
}

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    put16(b, static_cast<std::uint16_t>(v >> 16));
    put16(b, static_cast<std::uint16_t>(v));
}

void le32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                           static_cast<char>(v >> 24)};
    out.write(bytes, 4);
}

void le16(std::ofstream& out, std::uint16_t v) {
    const char bytes[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    out.write(bytes, 2);
}

std::uint16_t checksum(const std::uint8_t* data, std::size_t n, std::uint32_t sum = 0) {
    for (std::size_t i = 0; i + 1 < n; i += 2) sum += static_cast<std::uint32_t>(data[i] << 8 | data[i + 1]);
    if (n % 2) sum += static_cast<std::uint32_t>(data[n - 1] << 8);
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

}  // namespace

std::string node_address(const std::string& node) {
    const auto ip = ip_of(node);
    return std::to_string(ip[0]) + "." + std::to_string(ip[1]) + "." + std::to_string(ip[2]) + "." +
           std::to_string(ip[3]);
}

std::size_t export_pcap(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    le32(out, 0xa1b2c3d4);
    le16(out, 2);
    le16(out, 4);
    le32(out, 0);
    le32(out, 0);
    le32(out, 65535);
    le32(out, 101);  // LINKTYPE_RAW

    std::map<std::tuple<std::string, std::string, std::uint32_t>, std::uint32_t> next_seq;
    std::size_t count = 0;
    for (const auto& r : data.records) {
        const auto* f = r.frame();
        if (!f) continue;
        const bool response = parse_station(f->src).has_value();
        const std::uint16_t client_port = static_cast<std::uint16_t>(30000 + f->conn % 30000);
        const std::uint16_t sport = response ? 502 : client_port;
        const std::uint16_t dport = response ? client_port : 502;
        auto& seq = next_seq[{f->src, f->dst, f->conn}];
        const auto ack = next_seq[{f->dst, f->src, f->conn}];

        std::vector<std::uint8_t> pkt;
        const auto total = static_cast<std::uint16_t>(40 + f->raw.size());
        const auto src = ip_of(f->src);
        const auto dst = ip_of(f->dst);
        pkt.push_back(0x45);
        pkt.push_back(0);
        put16(pkt, total);
        put16(pkt, static_cast<std::uint16_t>(r.seq));
        put16(pkt, 0x4000);
        pkt.push_back(64);
        pkt.push_back(6);
        put16(pkt, 0);
        pkt.insert(pkt.end(), src.begin(), src.end());
        pkt.insert(pkt.end(), dst.begin(), dst.end());
        const auto ipsum = checksum(pkt.data(), 20);
        pkt[10] = static_cast<std::uint8_t>(ipsum >> 8);
        pkt[11] = static_cast<std::uint8_t>(ipsum);

        put16(pkt, sport);
        put16(pkt, dport);
        put32(pkt, seq);
        put32(pkt, ack);
        pkt.push_back(0x50);
        pkt.push_back(0x18);  // PSH|ACK
        put16(pkt, 65535);
        put16(pkt, 0);
        put16(pkt, 0);
        pkt.insert(pkt.end(), f->raw.begin(), f->raw.end());

        std::vector<std::uint8_t> pseudo(src.begin(), src.end());
        pseudo.insert(pseudo.end(), dst.begin(), dst.end());
        pseudo.push_back(0);
        pseudo.push_back(6);
        put16(pseudo, static_cast<std::uint16_t>(20 + f->raw.size()));
        std::uint32_t sum = 0;
        for (std::size_t i = 0; i < pseudo.size(); i += 2) sum += static_cast<std::uint32_t>(pseudo[i] << 8 | pseudo[i + 1]);
        const auto tcpsum = checksum(pkt.data() + 20, pkt.size() - 20, sum);
        pkt[36] = static_cast<std::uint8_t>(tcpsum >> 8);
        pkt[37] = static_cast<std::uint8_t>(tcpsum);
        seq += static_cast<std::uint32_t>(f->raw.size());

        const std::uint64_t us = static_cast<std::uint64_t>(r.tick) * static_cast<std::uint64_t>(data.header.tick_ms) * 1000;
        le32(out, static_cast<std::uint32_t>(us / 1000000));
        le32(out, static_cast<std::uint32_t>(us % 1000000));
        le32(out, static_cast<std::uint32_t>(pkt.size()));
        le32(out, static_cast<std::uint32_t>(pkt.size()));
        out.write(reinterpret_cast<const char*>(pkt.data()), static_cast<std::streamsize>(pkt.size()));
        ++count;
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + path);
    return count;
}

}  // namespace linesim::trace
