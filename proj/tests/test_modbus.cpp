#include "linesim/error.hpp"
#include "linesim/modbus/frame.hpp"
#include "linesim/modbus/pdu.hpp"

#include "doctest.h"
#include "fuzz.hpp"

#include <random>
#include <sstream>

using namespace linesim;
using namespace linesim::modbus;
using testing::random_request;
using testing::random_response;

namespace {

Bytes hex(const std::string& s) {
    Bytes out;
    std::istringstream in(s);
    std::string b;
    while (in >> b) out.push_back(static_cast<std::uint8_t>(std::stoul(b, nullptr, 16)));
    return out;
}

}  // namespace

TEST_SUITE("modbus") {

// Reference bytes produced by pymodbus 3.16.1 (FramerSocket.buildFrame).
TEST_CASE("golden request bytes") {
    Request rhr{Function::ReadHoldingRegisters, 0, 2, {}, {}};
    CHECK(encode(make_request(1, 1, rhr)) == hex("00 01 00 00 00 06 01 03 00 00 00 02"));

    Request wsr{Function::WriteSingleRegister, 0, 1, {1000}, {}};
    CHECK(encode(make_request(7, 1, wsr)) == hex("00 07 00 00 00 06 01 06 00 00 03 e8"));

    Request wmr{Function::WriteMultipleRegisters, 0, 4, {2, 1, 2, 1}, {}};
    CHECK(encode(make_request(9, 1, wmr)) == hex("00 09 00 00 00 0f 01 10 00 00 00 04 08 00 02 00 01 00 02 00 01"));

    Request wmc{Function::WriteMultipleCoils, 3, 9, {}, {1, 0, 1, 1, 0, 0, 0, 0, 1}};
    CHECK(encode(make_request(10, 1, wmc)) == hex("00 0a 00 00 00 09 01 0f 00 03 00 09 02 0d 01"));

    Request wsc{Function::WriteSingleCoil, 5, 1, {}, {true}};
    CHECK(encode(make_request(11, 2, wsc)) == hex("00 0b 00 00 00 06 02 05 00 05 ff 00"));
}

TEST_CASE("golden response bytes") {
    Response rhr;
    rhr.function = 0x03;
    rhr.registers = {1000, 0xBEEF};
    CHECK(encode(make_response(1, 1, rhr)) == hex("00 01 00 00 00 07 01 03 04 03 e8 be ef"));

    Response rc;
    rc.function = 0x01;
    rc.bits = {1, 0, 1, 0, 0, 0, 0, 0, 1};
    CHECK(encode(make_response(3, 1, rc)) == hex("00 03 00 00 00 05 01 01 02 05 01"));
}

TEST_CASE("golden frame decodes to the same request") {
    auto d = decode_one(hex("00 01 00 00 00 06 01 03 00 00 00 02"));
    REQUIRE(d);
    CHECK(d->status == FrameStatus::Ok);
    CHECK(d->frame.transaction_id == 1);
    CHECK(d->frame.unit_id == 1);
    auto p = parse_request(d->frame);
    REQUIRE(p.request);
    CHECK(p.request->function == Function::ReadHoldingRegisters);
    CHECK(p.request->address == 0);
    CHECK(p.request->quantity == 2);
}

TEST_CASE("fuzzed request round trip") {
    std::mt19937_64 rng(20240601);
    std::size_t failures = 0;
    constexpr int kFrames = 100000;
    for (int i = 0; i < kFrames; ++i) {
        const auto req = random_request(rng);
        const auto txn = static_cast<std::uint16_t>(rng());
        const auto unit = static_cast<std::uint8_t>(rng());
        const auto bytes = encode(make_request(txn, unit, req));
        const auto d = decode_one(bytes);
        if (!d || d->status != FrameStatus::Ok || d->raw != bytes || d->frame.transaction_id != txn ||
            d->frame.unit_id != unit) {
            ++failures;
            continue;
        }
        const auto p = parse_request(d->frame);
        if (!p.request || !(*p.request == req)) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("fuzzed response round trip") {
    std::mt19937_64 rng(77);
    std::size_t failures = 0;
    for (int i = 0; i < 100000; ++i) {
        std::uint16_t asked = 0;
        const auto resp = random_response(rng, asked);
        ModbusFrame f = resp.exception ? make_exception(static_cast<std::uint16_t>(i), 1, resp.function, *resp.exception)
                                       : make_response(static_cast<std::uint16_t>(i), 1, resp);
        const auto d = decode_one(encode(f));
        if (!d || !(d->frame == f)) {
            ++failures;
            continue;
        }
        const auto back = parse_response(d->frame, asked ? std::optional<std::uint16_t>(asked) : std::nullopt);
        if (!back || !(*back == resp)) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("stream decoder splits concatenated frames fed byte by byte") {
    Bytes stream;
    std::vector<Bytes> frames;
    for (std::uint16_t t = 1; t <= 5; ++t) {
        frames.push_back(encode(make_request(t, 1, Request{Function::ReadInputRegisters, t, t, {}, {}})));
        stream.insert(stream.end(), frames.back().begin(), frames.back().end());
    }
    StreamDecoder dec;
    std::vector<Bytes> got;
    for (auto b : stream) {
        dec.feed(std::span<const std::uint8_t>(&b, 1));
        while (auto f = dec.next()) got.push_back(f->raw);
    }
    CHECK(got == frames);
    CHECK(dec.buffered() == 0);
}

TEST_CASE("malformed frames are skipped and the stream stays in sync") {
    StreamDecoder dec;
    auto bad_proto = hex("00 01 00 07 00 06 01 03 00 00 00 02");
    auto good = encode(make_request(2, 1, Request{Function::ReadHoldingRegisters, 0, 1, {}, {}}));
    dec.feed(bad_proto);
    dec.feed(good);
    auto a = dec.next();
    REQUIRE(a);
    CHECK(a->status == FrameStatus::BadProtocolId);
    auto b = dec.next();
    REQUIRE(b);
    CHECK(b->status == FrameStatus::Ok);
    CHECK(b->frame.transaction_id == 2);
    CHECK_FALSE(dec.next());
}

TEST_CASE("unknown function is framed and flagged") {
    auto d = decode_one(hex("00 05 00 00 00 02 01 2b"));
    REQUIRE(d);
    CHECK(d->unknown_function);
    auto p = parse_request(d->frame);
    CHECK_FALSE(p.request);
    CHECK(p.error == ExceptionCode::IllegalFunction);
}

TEST_CASE("out of range quantity") {
    Request r{Function::ReadHoldingRegisters, 0, 126, {}, {}};
    CHECK_THROWS_AS(make_request(1, 1, r), Error);
    try {
        make_request(1, 1, r);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidQuantity);
    }
    r.quantity = 0;
    CHECK_THROWS_AS(make_request(1, 1, r), Error);

    // A peer asking for 126 registers gets IllegalDataValue.
    auto d = decode_one(hex("00 01 00 00 00 06 01 03 00 00 00 7e"));
    REQUIRE(d);
    auto p = parse_request(d->frame);
    CHECK_FALSE(p.request);
    CHECK(p.error == ExceptionCode::IllegalDataValue);
}

TEST_CASE("payload too large") {
    ModbusFrame f;
    f.function = 0x10;
    f.payload.assign(253, 0);
    try {
        encode(f);
        FAIL("expected PayloadTooLarge");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PayloadTooLarge);
    }
}

TEST_CASE("exception response") {
    auto f = make_exception(4, 1, 0x03, ExceptionCode::IllegalDataAddress);
    CHECK(encode(f) == hex("00 04 00 00 00 03 01 83 02"));
    auto r = parse_response(f);
    REQUIRE(r);
    CHECK(r->function == 0x03);
    CHECK(r->exception == ExceptionCode::IllegalDataAddress);
}

}
