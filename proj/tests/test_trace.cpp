#include "linesim/trace/pcap.hpp"
#include "linesim/trace/record.hpp"
#include "linesim/trace/recorder.hpp"

#include "doctest.h"
#include "support.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

using namespace linesim;
using namespace linesim::trace;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

// Dataset of the happy path, produced once per test binary.
const std::string& happy_dataset() {
    static const std::string path = [] {
        const auto dir = testing::scratch("trace-happy");
        auto w = testing::run_to_end(testing::scenario("happy_path"), dir, true);
        return w->dataset_path();
    }();
    return path;
}

std::uint32_t le32(const std::string& b, std::size_t at) {
    return static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at])) |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at + 3])) << 24;
}

std::uint16_t be16(const std::string& b, std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[at]) << 8 | static_cast<std::uint8_t>(b[at + 1]));
}

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("header first, then records in tick and seq order") {
    const auto data = load_dataset(happy_dataset());
    CHECK(data.header.scenario == "happy_path");
    CHECK(data.header.schema_version == kSchemaVersion);
    CHECK(data.header.variables.count("VC.rotation"));
    CHECK(data.header.variables.count("MILL.transport_pos"));
    REQUIRE_FALSE(data.records.empty());
    Tick t = 0;
    std::uint64_t seq = 0;
    bool ordered = true;
    for (const auto& r : data.records) {
        ordered &= r.tick >= t && r.seq > seq;
        t = r.tick;
        seq = r.seq;
    }
    CHECK(ordered);
}

TEST_CASE("samples are emitted only on change") {
    const auto data = load_dataset(happy_dataset());
    std::map<std::string, int> last;
    bool repeats = false;
    std::size_t at_zero = 0;
    for (const auto& r : data.records) {
        const auto* s = r.sample();
        if (!s) continue;
        if (r.tick == 0) ++at_zero;
        auto it = last.find(s->variable);
        if (it != last.end() && it->second == s->value) repeats = true;
        last[s->variable] = s->value;
    }
    CHECK_FALSE(repeats);
    CHECK(at_zero == data.header.variables.size());
}

TEST_CASE("streaming replay sees the same records as load") {
    const auto data = load_dataset(happy_dataset());
    std::vector<std::string> streamed;
    replay(happy_dataset(), [&](const TraceRecord& r) { streamed.push_back(to_json(r).dump()); });
    REQUIRE(streamed.size() == data.records.size());
    bool same = true;
    for (std::size_t i = 0; i < streamed.size(); ++i) same &= streamed[i] == to_json(data.records[i]).dump();
    CHECK(same);
}

TEST_CASE("records survive a json round trip") {
    const auto data = load_dataset(happy_dataset());
    bool same = true;
    for (const auto& r : data.records) {
        const auto j = to_json(r);
        same &= to_json(record_from_json(j)) == j;
    }
    CHECK(same);
}

TEST_CASE("same seed gives byte-identical datasets") {
    const auto a = testing::run_to_end(testing::scenario("order"), testing::scratch("det-a"));
    const auto b = testing::run_to_end(testing::scenario("order"), testing::scratch("det-b"));
    const auto ta = slurp(a->dataset_path());
    CHECK_FALSE(ta.empty());
    CHECK(ta == slurp(b->dataset_path()));
    auto other = testing::scenario("order");
    other.seed = 99;
    const auto c = testing::run_to_end(other, testing::scratch("det-c"));
    CHECK(ta != slurp(c->dataset_path()));
}

TEST_CASE("corrupt line is reported with its number") {
    const auto dir = testing::scratch("corrupt");
    std::istringstream in(slurp(happy_dataset()));
    std::string line, out;
    for (int n = 1; std::getline(in, line) && n <= 10; ++n) out += (n == 5 ? std::string("{\"kind\": ") : line) + "\n";
    spit(dir + "/bad.jsonl", out);
    try {
        load_dataset(dir + "/bad.jsonl");
        FAIL("expected CorruptRecord");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CorruptRecord);
        CHECK(e.detail().rfind("line 5:", 0) == 0);
    }
}

TEST_CASE("truncated final line and unsupported schema") {
    const auto dir = testing::scratch("truncated");
    std::istringstream in(slurp(happy_dataset()));
    std::string line, out;
    for (int n = 1; std::getline(in, line) && n <= 3; ++n) out += line + (n < 3 ? "\n" : "");
    spit(dir + "/t.jsonl", out);
    CHECK_ERROR(load_dataset(dir + "/t.jsonl"), ErrorKind::CorruptRecord);

    auto text = slurp(happy_dataset());
    const auto pos = text.find("\"schema_version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "\"schema_version\":7");
    spit(dir + "/v7.jsonl", text);
    CHECK_ERROR(load_dataset(dir + "/v7.jsonl"), ErrorKind::SchemaUnsupported);
    CHECK_ERROR(load_dataset(dir + "/missing.jsonl"), ErrorKind::IoError);
}

TEST_CASE("hex helpers") {
    CHECK(to_hex({0x00, 0x1f, 0xab}) == "001fab");
    CHECK(from_hex("001fab") == std::vector<std::uint8_t>{0x00, 0x1f, 0xab});
    CHECK_ERROR(from_hex("0g"), ErrorKind::CorruptRecord);
    CHECK_ERROR(from_hex("abc"), ErrorKind::CorruptRecord);
}

TEST_CASE("pcap export carries every frame verbatim") {
    const auto data = load_dataset(happy_dataset());
    const auto path = testing::scratch("pcap") + "/out.pcap";
    const auto n = export_pcap(data, path);
    std::vector<std::vector<std::uint8_t>> frames;
    for (const auto& r : data.records) {
        if (const auto* f = r.frame()) frames.push_back(f->raw);
    }
    CHECK(n == frames.size());

    const auto b = slurp(path);
    REQUIRE(b.size() >= 24);
    CHECK(le32(b, 0) == 0xa1b2c3d4u);
    CHECK(le32(b, 20) == 101u);
    std::size_t at = 24, i = 0;
    bool payloads_match = true, checksums_ok = true;
    while (at + 16 <= b.size()) {
        const auto incl = le32(b, at + 8);
        const auto pkt = b.substr(at + 16, incl);
        at += 16 + incl;
        const std::size_t ihl = (static_cast<std::uint8_t>(pkt[0]) & 0x0F) * 4u;
        CHECK((static_cast<std::uint8_t>(pkt[0]) >> 4) == 4);
        CHECK(static_cast<std::uint8_t>(pkt[9]) == 6);
        std::uint32_t sum = 0;
        for (std::size_t k = 0; k < ihl; k += 2) sum += be16(pkt, k);
        while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
        checksums_ok &= sum == 0xFFFF;
        CHECK(be16(pkt, 2) == pkt.size());
        const std::size_t thl = (static_cast<std::uint8_t>(pkt[ihl + 12]) >> 4) * 4u;
        const auto payload = pkt.substr(ihl + thl);
        REQUIRE(i < frames.size());
        payloads_match &= std::vector<std::uint8_t>(payload.begin(), payload.end()) == frames[i];
        ++i;
    }
    CHECK(i == frames.size());
    CHECK(payloads_match);
    CHECK(checksums_ok);
    CHECK(node_address("scada") != node_address("FURNACE"));
}

}
