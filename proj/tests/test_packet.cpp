#include "mqttz/wire/packet.hpp"

#include <random>

#include "doctest.h"
#include "support/test_util.hpp"

using namespace mqttz;
using namespace mqttz::wire;

namespace {

Bytes bytes_of(std::initializer_list<int> xs) {
    Bytes b;
    for (int x : xs) b.push_back(static_cast<uint8_t>(x));
    return b;
}

std::string random_topic(std::mt19937_64& rng, bool filter) {
    static const char* words[] = {"a", "b", "ecg", "sensors", "p01", "x-y_z", "room1"};
    std::uniform_int_distribution<int> levels(1, 4), word(0, 6), kind(0, 9);
    std::string out;
    int n = levels(rng);
    for (int i = 0; i < n; ++i) {
        if (i) out += '/';
        int k = filter ? kind(rng) : 10;
        if (k == 0)
            out += '+';
        else if (k == 1 && i == n - 1)
            out += '#';
        else
            out += words[word(rng)];
    }
    return out;
}

Packet random_packet(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, 7);
    std::uniform_int_distribution<int> len(0, 200);
    switch (pick(rng)) {
        case 0: {
            Connect c;
            c.client_id = "c" + std::to_string(rng() % 100000);
            c.keep_alive = static_cast<uint16_t>(rng());
            c.clean_start = rng() & 1;
            return c;
        }
        case 1:
            return ConnAck{static_cast<uint8_t>(rng() % 3 == 0 ? 0x85 : 0x00), bool(rng() & 1)};
        case 2: {
            Publish p;
            p.topic = random_topic(rng, false);
            if (rng() & 1) p.properties.response_topic = random_topic(rng, false);
            if (rng() & 1)
                p.properties.correlation_data = testing::random_bytes(rng, rng() % 65);
            p.payload = testing::random_bytes(rng, static_cast<size_t>(len(rng)));
            return p;
        }
        case 3: {
            Subscribe s;
            s.packet_id = static_cast<uint16_t>(1 + rng() % 65535);
            int n = 1 + static_cast<int>(rng() % 3);
            for (int i = 0; i < n; ++i)
                s.entries.push_back({random_topic(rng, true), 0});
            return s;
        }
        case 4: {
            SubAck a;
            a.packet_id = static_cast<uint16_t>(1 + rng() % 65535);
            int n = 1 + static_cast<int>(rng() % 3);
            for (int i = 0; i < n; ++i)
                a.reason_codes.push_back(rng() % 2 ? 0x00 : 0x87);
            return a;
        }
        case 5:
            return PingReq{};
        case 6:
            return PingResp{};
        default:
            return Disconnect{static_cast<uint8_t>(rng() % 2 ? 0x00 : 0x8e)};
    }
}

}  // namespace

TEST_CASE("pingreq is the two fixed bytes") {
    CHECK_EQ(encode_packet(PingReq{}), bytes_of({0xC0, 0x00}));
    auto r = decode_packet(bytes_of({0xC0, 0x00}));
    REQUIRE_EQ(r.status, DecodeStatus::Ok);
    CHECK(std::holds_alternative<PingReq>(r.packet));
    CHECK_EQ(r.consumed, 2);
}

TEST_CASE("publish without properties: frozen wire bytes") {
    // 0x30, remaining 8 = topic(2+3) + properties(1) + payload(2)
    Publish p;
    p.topic = "a/b";
    p.payload = to_bytes("hi");
    CHECK_EQ(encode_packet(p),
             bytes_of({0x30, 0x08, 0x00, 0x03, 'a', '/', 'b', 0x00, 'h', 'i'}));
}

TEST_CASE("remaining length 321 encodes as 0xC1 0x02") {
    // 321 = 65 + 2*128 under the 7-bit varint rule
    Publish p;
    p.topic = "a/b";
    p.payload.assign(321 - 6, 0x5a);  // 6 = topic block + empty properties
    Bytes encoded = encode_packet(p);
    CHECK_EQ(encoded[1], 0xC1);
    CHECK_EQ(encoded[2], 0x02);
    auto r = decode_packet(encoded);
    REQUIRE_EQ(r.status, DecodeStatus::Ok);
    CHECK_EQ(r.consumed, encoded.size());
}

TEST_CASE("incomplete input is distinguished from malformed") {
    CHECK_EQ(decode_packet(bytes_of({0xC0})).status, DecodeStatus::NeedMore);
    CHECK_EQ(decode_packet({}).status, DecodeStatus::NeedMore);
    // fixed header announcing 4 body bytes, only 2 present
    CHECK_EQ(decode_packet(bytes_of({0x30, 0x04, 0x00, 0x01})).status, DecodeStatus::NeedMore);
    // varint with continuation bit and nothing after it
    CHECK_EQ(decode_packet(bytes_of({0x30, 0x80})).status, DecodeStatus::NeedMore);
}

TEST_CASE("unsupported packet classes are rejected as such") {
    auto r = decode_packet(bytes_of({0x60, 0x02, 0x00, 0x01}));  // PUBREL-class
    CHECK_EQ(r.status, DecodeStatus::Unsupported);
    CHECK_EQ(decode_packet(bytes_of({0x40, 0x02, 0x00, 0x01})).status, DecodeStatus::Unsupported);
    CHECK_EQ(decode_packet(bytes_of({0x00, 0x00})).status, DecodeStatus::Malformed);
}

TEST_CASE("protocol violations are malformed") {
    // publish with QoS bits set
    CHECK_EQ(decode_packet(bytes_of({0x32, 0x05, 0x00, 0x01, 'a', 0x00, 0x00})).status,
             DecodeStatus::Malformed);
    // publish with retain bit
    CHECK_EQ(decode_packet(bytes_of({0x31, 0x05, 0x00, 0x01, 'a', 0x00, 0x00})).status,
             DecodeStatus::Malformed);
    // publish with wildcard topic
    CHECK_EQ(decode_packet(bytes_of({0x30, 0x04, 0x00, 0x01, '#', 0x00})).status,
             DecodeStatus::Malformed);
    // 5-byte remaining length varint
    CHECK_EQ(decode_packet(bytes_of({0x30, 0x80, 0x80, 0x80, 0x80, 0x01})).status,
             DecodeStatus::Malformed);
    // pingreq with a body
    CHECK_EQ(decode_packet(bytes_of({0xC0, 0x01, 0x00})).status, DecodeStatus::Malformed);
    // subscribe with packet id 0
    CHECK_EQ(decode_packet(bytes_of({0x82, 0x07, 0x00, 0x00, 0x00, 0x00, 0x01, 'a', 0x00})).status,
             DecodeStatus::Malformed);
    // subscribe without any filter
    CHECK_EQ(decode_packet(bytes_of({0x82, 0x03, 0x00, 0x01, 0x00})).status,
             DecodeStatus::Malformed);
    // subscribe filter with '#' not last
    Subscribe bad;
    bad.entries.push_back({"a/#/b", 0});
    CHECK_THROWS_AS((void)encode_packet(bad), EncodeError);
    CHECK_EQ(decode_packet(bytes_of({0x82, 0x0b, 0x00, 0x01, 0x00, 0x00, 0x05, 'a', '/', '#',
                                     '/', 'b', 0x00}))
                 .status,
             DecodeStatus::Malformed);
    // connect with username flag set (out of the supported subset)
    CHECK_EQ(decode_packet(bytes_of({0x10, 0x0f, 0x00, 0x04, 'M', 'Q', 'T', 'T', 0x05, 0x82,
                                     0x00, 0x00, 0x00, 0x00, 0x02, 'p', '1'}))
                 .status,
             DecodeStatus::Malformed);
    // connect with protocol version 4 (MQTT 3.1.1)
    CHECK_EQ(decode_packet(bytes_of({0x10, 0x0f, 0x00, 0x04, 'M', 'Q', 'T', 'T', 0x04, 0x02,
                                     0x00, 0x00, 0x00, 0x00, 0x02, 'p', '1'}))
                 .status,
             DecodeStatus::Malformed);
}

TEST_CASE("known-but-unused v5 properties are skipped, undefined ones rejected") {
    // publish "a" with message-expiry-interval (0x02, four bytes) then payload "z"
    auto with_expiry = bytes_of(
        {0x30, 0x0a, 0x00, 0x01, 'a', 0x05, 0x02, 0x00, 0x00, 0x00, 0x3c, 'z'});
    auto r = decode_packet(with_expiry);
    REQUIRE_EQ(r.status, DecodeStatus::Ok);
    auto& pub = std::get<Publish>(r.packet);
    CHECK(pub.properties.empty());
    CHECK_EQ(pub.payload, to_bytes("z"));

    // same shape with an identifier the standard does not define
    auto undefined = bytes_of({0x30, 0x07, 0x00, 0x01, 'a', 0x02, 0x7f, 0x00, 'z'});
    CHECK_EQ(decode_packet(undefined).status, DecodeStatus::Malformed);

    // duplicate response-topic
    auto dup = bytes_of({0x30, 0x0d, 0x00, 0x01, 'a', 0x08, 0x08, 0x00, 0x01, 'r', 0x08, 0x00,
                         0x01, 'r', 'z'});
    CHECK_EQ(decode_packet(dup).status, DecodeStatus::Malformed);

    // correlation data above the 64-byte cap
    Bytes big = bytes_of({0x30, 0x00, 0x00, 0x01, 'a'});
    big[1] = 3 + 1 + 68;   // topic block + properties varint + properties
    big.push_back(68);     // properties length: id + 2-byte len + 65 bytes
    big.push_back(0x09);
    big.push_back(0x00);
    big.push_back(65);
    for (int i = 0; i < 65; ++i) big.push_back(0xee);
    CHECK_EQ(decode_packet(big).status, DecodeStatus::Malformed);
}

TEST_CASE("encode rejects invariant violations") {
    Publish p;
    p.topic = "a/+";
    CHECK_THROWS_AS((void)encode_packet(p), EncodeError);
    Connect c;
    c.client_id = "";
    CHECK_THROWS_AS((void)encode_packet(c), EncodeError);
    c.client_id = std::string(24, 'x');
    CHECK_THROWS_AS((void)encode_packet(c), EncodeError);
    c.client_id = "has space";
    CHECK_THROWS_AS((void)encode_packet(c), EncodeError);
    SubAck empty_ack;
    empty_ack.reason_codes.clear();
    CHECK_THROWS_AS((void)encode_packet(empty_ack), EncodeError);
}

TEST_CASE("round trip across the supported subset") {
    std::mt19937_64 rng(20812);
    for (int i = 0; i < 4000; ++i) {
        Packet p = random_packet(rng);
        Bytes encoded = encode_packet(p);
        auto r = decode_packet(encoded);
        REQUIRE_EQ(r.status, DecodeStatus::Ok);
        REQUIRE_EQ(r.consumed, encoded.size());
        if (!(r.packet == p)) {
            CAPTURE(packet_type_name(p));
            REQUIRE(r.packet == p);
        }
        // decoding with trailing garbage consumes exactly one packet
        Bytes extra = encoded;
        extra.push_back(0xC0);
        auto r2 = decode_packet(extra);
        REQUIRE_EQ(r2.status, DecodeStatus::Ok);
        CHECK_EQ(r2.consumed, encoded.size());
    }
}

TEST_CASE("every strict prefix of a valid encoding reads as incomplete") {
    std::mt19937_64 rng(107);
    for (int i = 0; i < 500; ++i) {
        Bytes encoded = encode_packet(random_packet(rng));
        for (int k = 0; k < 8; ++k) {
            size_t cut = rng() % encoded.size();
            auto r = decode_packet(ByteView(encoded.data(), cut));
            if (r.status != DecodeStatus::NeedMore) {
                CAPTURE(cut);
                REQUIRE_EQ(r.status, DecodeStatus::NeedMore);
            }
        }
    }
}

TEST_CASE("decode honours the size cap") {
    Publish p;
    p.topic = "a";
    p.payload.assign(5000, 0x11);
    Bytes encoded = encode_packet(p);
    CHECK_EQ(decode_packet(encoded, 1024).status, DecodeStatus::Malformed);
    CHECK_EQ(decode_packet(encoded, 8192).status, DecodeStatus::Ok);
}
