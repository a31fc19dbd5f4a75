#include "mqttz/wire/packet.hpp"

#include <cstring>

#include "mqttz/wire/topic.hpp"

namespace mqttz::wire {

namespace {

constexpr uint8_t kTypeConnect = 1;
constexpr uint8_t kTypeConnAck = 2;
constexpr uint8_t kTypePublish = 3;
constexpr uint8_t kTypeSubscribe = 8;
constexpr uint8_t kTypeSubAck = 9;
constexpr uint8_t kTypePingReq = 12;
constexpr uint8_t kTypePingResp = 13;
constexpr uint8_t kTypeDisconnect = 14;

constexpr uint8_t kPropResponseTopic = 0x08;
constexpr uint8_t kPropCorrelationData = 0x09;
constexpr size_t kMaxCorrelationData = 64;

void put_varint(Bytes& out, uint32_t value) {
    do {
        uint8_t byte = value % 128;
        value /= 128;
        if (value > 0) byte |= 0x80;
        out.push_back(byte);
    } while (value > 0);
}

void put_utf8(Bytes& out, std::string_view s) {
    if (s.size() > 0xffff) throw EncodeError("string too long");
    put_u16_be(out, static_cast<uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

Bytes encode_properties(const PropertySet& props) {
    Bytes body;
    if (props.response_topic) {
        if (!valid_topic_name(*props.response_topic))
            throw EncodeError("invalid-topic: response topic");
        body.push_back(kPropResponseTopic);
        put_utf8(body, *props.response_topic);
    }
    if (props.correlation_data) {
        if (props.correlation_data->size() > kMaxCorrelationData)
            throw EncodeError("correlation data too long");
        body.push_back(kPropCorrelationData);
        put_u16_be(body, static_cast<uint16_t>(props.correlation_data->size()));
        body.insert(body.end(), props.correlation_data->begin(), props.correlation_data->end());
    }
    Bytes out;
    put_varint(out, static_cast<uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Bytes frame(uint8_t first_byte, const Bytes& body) {
    if (body.size() > kMaxRemainingLength) throw EncodeError("oversize");
    Bytes out;
    out.reserve(body.size() + 5);
    out.push_back(first_byte);
    put_varint(out, static_cast<uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

struct Encoder {
    Bytes operator()(const Connect& p) const {
        if (!valid_client_id(p.client_id)) throw EncodeError("invalid client id");
        Bytes body;
        put_utf8(body, "MQTT");
        body.push_back(0x05);
        body.push_back(p.clean_start ? 0x02 : 0x00);
        put_u16_be(body, p.keep_alive);
        body.push_back(0x00);  // no connect properties
        put_utf8(body, p.client_id);
        return frame(kTypeConnect << 4, body);
    }

    Bytes operator()(const ConnAck& p) const {
        Bytes body;
        body.push_back(p.session_present ? 0x01 : 0x00);
        body.push_back(p.reason_code);
        body.push_back(0x00);
        return frame(kTypeConnAck << 4, body);
    }

    Bytes operator()(const Publish& p) const {
        if (!valid_topic_name(p.topic)) throw EncodeError("invalid-topic");
        Bytes body;
        put_utf8(body, p.topic);
        Bytes props = encode_properties(p.properties);
        body.insert(body.end(), props.begin(), props.end());
        body.insert(body.end(), p.payload.begin(), p.payload.end());
        return frame(kTypePublish << 4, body);  // QoS 0, no dup, no retain
    }

    Bytes operator()(const Subscribe& p) const {
        if (p.packet_id == 0) throw EncodeError("packet id must be nonzero");
        if (p.entries.empty()) throw EncodeError("subscribe needs at least one filter");
        Bytes body;
        put_u16_be(body, p.packet_id);
        body.push_back(0x00);
        for (const auto& e : p.entries) {
            if (!valid_topic_filter(e.filter)) throw EncodeError("invalid-topic: filter");
            if (e.requested_qos > 2) throw EncodeError("invalid requested qos");
            put_utf8(body, e.filter);
            body.push_back(e.requested_qos);
        }
        return frame((kTypeSubscribe << 4) | 0x02, body);
    }

    Bytes operator()(const SubAck& p) const {
        if (p.packet_id == 0) throw EncodeError("packet id must be nonzero");
        if (p.reason_codes.empty()) throw EncodeError("suback needs at least one reason code");
        Bytes body;
        put_u16_be(body, p.packet_id);
        body.push_back(0x00);
        body.insert(body.end(), p.reason_codes.begin(), p.reason_codes.end());
        return frame(kTypeSubAck << 4, body);
    }

    Bytes operator()(const PingReq&) const { return frame(kTypePingReq << 4, {}); }
    Bytes operator()(const PingResp&) const { return frame(kTypePingResp << 4, {}); }

    Bytes operator()(const Disconnect& p) const {
        Bytes body;
        if (p.reason_code != 0) body.push_back(p.reason_code);
        return frame(kTypeDisconnect << 4, body);
    }
};

// --- decoding ---

struct Reader {
    const uint8_t* p;
    const uint8_t* end;

    size_t left() const { return static_cast<size_t>(end - p); }

    bool u8(uint8_t& v) {
        if (left() < 1) return false;
        v = *p++;
        return true;
    }
    bool u16(uint16_t& v) {
        if (left() < 2) return false;
        v = get_u16_be(p);
        p += 2;
        return true;
    }
    bool utf8(std::string& v) {
        uint16_t n;
        if (!u16(n) || left() < n) return false;
        v.assign(reinterpret_cast<const char*>(p), n);
        p += n;
        return true;
    }
    bool bin(Bytes& v) {
        uint16_t n;
        if (!u16(n) || left() < n) return false;
        v.assign(p, p + n);
        p += n;
        return true;
    }
    bool skip(size_t n) {
        if (left() < n) return false;
        p += n;
        return true;
    }
    // Varint confined to the current body; false on truncation or > 4 bytes.
    bool varint(uint32_t& v) {
        v = 0;
        uint32_t mult = 1;
        for (int i = 0; i < 4; ++i) {
            uint8_t byte;
            if (!u8(byte)) return false;
            v += (byte & 0x7f) * mult;
            if ((byte & 0x80) == 0) return true;
            mult *= 128;
        }
        return false;
    }
};

enum class PropKind { Byte, U16, U32, VarInt, Utf8, Binary, StringPair };

// Identifier table from the MQTT v5 standard, needed to skip properties we
// do not interpret. Identifiers absent here are undefined => protocol error.
std::optional<PropKind> standard_property_kind(uint32_t id) {
    switch (id) {
        case 0x01: case 0x17: case 0x19: case 0x24: case 0x25:
        case 0x28: case 0x29: case 0x2a:
            return PropKind::Byte;
        case 0x13: case 0x21: case 0x22: case 0x23:
            return PropKind::U16;
        case 0x02: case 0x11: case 0x18: case 0x27:
            return PropKind::U32;
        case 0x0b:
            return PropKind::VarInt;
        case 0x03: case 0x08: case 0x12: case 0x15: case 0x1a:
        case 0x1c: case 0x1f:
            return PropKind::Utf8;
        case 0x09: case 0x16:
            return PropKind::Binary;
        case 0x26:
            return PropKind::StringPair;
        default:
            return std::nullopt;
    }
}

// Parses a property block. Response-topic and correlation-data are captured,
// every other standard property is skipped. Returns false on malformed input.
bool parse_properties(Reader& r, PropertySet& props) {
    uint32_t length;
    if (!r.varint(length) || r.left() < length) return false;
    Reader pr{r.p, r.p + length};
    r.p += length;
    while (pr.left() > 0) {
        uint32_t id;
        if (!pr.varint(id)) return false;
        auto kind = standard_property_kind(id);
        if (!kind) return false;
        switch (*kind) {
            case PropKind::Byte:
                if (!pr.skip(1)) return false;
                break;
            case PropKind::U16:
                if (!pr.skip(2)) return false;
                break;
            case PropKind::U32:
                if (!pr.skip(4)) return false;
                break;
            case PropKind::VarInt: {
                uint32_t v;
                if (!pr.varint(v)) return false;
                break;
            }
            case PropKind::Utf8: {
                if (id == kPropResponseTopic) {
                    if (props.response_topic) return false;  // duplicate
                    std::string s;
                    if (!pr.utf8(s) || !valid_topic_name(s)) return false;
                    props.response_topic = std::move(s);
                } else {
                    std::string s;
                    if (!pr.utf8(s)) return false;
                }
                break;
            }
            case PropKind::Binary: {
                if (id == kPropCorrelationData) {
                    if (props.correlation_data) return false;  // duplicate
                    Bytes b;
                    if (!pr.bin(b) || b.size() > kMaxCorrelationData) return false;
                    props.correlation_data = std::move(b);
                } else {
                    Bytes b;
                    if (!pr.bin(b)) return false;
                }
                break;
            }
            case PropKind::StringPair: {
                std::string k, v;
                if (!pr.utf8(k) || !pr.utf8(v)) return false;
                break;
            }
        }
    }
    return true;
}

DecodeResult malformed(std::string why) {
    return {DecodeStatus::Malformed, {}, 0, std::move(why)};
}

DecodeResult decode_body(uint8_t type, uint8_t flags, Reader r, size_t consumed) {
    PropertySet ignored_props;
    switch (type) {
        case kTypeConnect: {
            if (flags != 0) return malformed("connect flags");
            std::string proto;
            uint8_t version, connect_flags;
            uint16_t keep_alive;
            if (!r.utf8(proto) || proto != "MQTT") return malformed("protocol name");
            if (!r.u8(version) || version != 0x05) return malformed("protocol version");
            if (!r.u8(connect_flags)) return malformed("connect flags missing");
            // Only clean-start is supported; will/username/password are out of scope.
            if ((connect_flags & ~0x02u) != 0) return malformed("unsupported connect flags");
            if (!r.u16(keep_alive)) return malformed("keep alive missing");
            if (!parse_properties(r, ignored_props)) return malformed("connect properties");
            Connect c;
            c.clean_start = (connect_flags & 0x02) != 0;
            c.keep_alive = keep_alive;
            if (!r.utf8(c.client_id)) return malformed("client id missing");
            if (r.left() != 0) return malformed("trailing bytes in connect");
            return {DecodeStatus::Ok, std::move(c), consumed, {}};
        }
        case kTypeConnAck: {
            if (flags != 0) return malformed("connack flags");
            uint8_t ack_flags, code;
            if (!r.u8(ack_flags) || (ack_flags & ~0x01u) != 0) return malformed("connack ack flags");
            if (!r.u8(code)) return malformed("connack reason missing");
            if (!parse_properties(r, ignored_props)) return malformed("connack properties");
            if (r.left() != 0) return malformed("trailing bytes in connack");
            return {DecodeStatus::Ok, ConnAck{code, (ack_flags & 0x01) != 0}, consumed, {}};
        }
        case kTypePublish: {
            // QoS must be 0 in this system; dup and retain are unsupported.
            if (flags != 0) return malformed("publish flags (qos>0, dup or retain)");
            Publish pub;
            if (!r.utf8(pub.topic)) return malformed("publish topic missing");
            if (!valid_topic_name(pub.topic)) return malformed("invalid publish topic");
            if (!parse_properties(r, pub.properties)) return malformed("publish properties");
            pub.payload.assign(r.p, r.end);
            return {DecodeStatus::Ok, std::move(pub), consumed, {}};
        }
        case kTypeSubscribe: {
            if (flags != 0x02) return malformed("subscribe flags");
            Subscribe sub;
            if (!r.u16(sub.packet_id) || sub.packet_id == 0) return malformed("subscribe packet id");
            if (!parse_properties(r, ignored_props)) return malformed("subscribe properties");
            while (r.left() > 0) {
                Subscribe::Entry e;
                if (!r.utf8(e.filter)) return malformed("subscribe filter truncated");
                if (!valid_topic_filter(e.filter)) return malformed("invalid topic filter");
                uint8_t opts;
                if (!r.u8(opts)) return malformed("subscription options missing");
                if ((opts & ~0x03u) != 0 || (opts & 0x03) > 2)
                    return malformed("unsupported subscription options");
                e.requested_qos = opts & 0x03;
                sub.entries.push_back(std::move(e));
            }
            if (sub.entries.empty()) return malformed("subscribe without filters");
            return {DecodeStatus::Ok, std::move(sub), consumed, {}};
        }
        case kTypeSubAck: {
            if (flags != 0) return malformed("suback flags");
            SubAck ack;
            if (!r.u16(ack.packet_id) || ack.packet_id == 0) return malformed("suback packet id");
            if (!parse_properties(r, ignored_props)) return malformed("suback properties");
            if (r.left() == 0) return malformed("suback without reason codes");
            ack.reason_codes.assign(r.p, r.end);
            return {DecodeStatus::Ok, std::move(ack), consumed, {}};
        }
        case kTypePingReq:
            if (flags != 0) return malformed("pingreq flags");
            if (r.left() != 0) return malformed("pingreq body");
            return {DecodeStatus::Ok, PingReq{}, consumed, {}};
        case kTypePingResp:
            if (flags != 0) return malformed("pingresp flags");
            if (r.left() != 0) return malformed("pingresp body");
            return {DecodeStatus::Ok, PingResp{}, consumed, {}};
        case kTypeDisconnect: {
            if (flags != 0) return malformed("disconnect flags");
            Disconnect d;
            if (r.left() >= 1 && !r.u8(d.reason_code)) return malformed("disconnect reason");
            if (r.left() > 0) {
                if (!parse_properties(r, ignored_props)) return malformed("disconnect properties");
                if (r.left() != 0) return malformed("trailing bytes in disconnect");
            }
            return {DecodeStatus::Ok, d, consumed, {}};
        }
        default:
            return {DecodeStatus::Unsupported, {}, 0, "unsupported packet type"};
    }
}

}  // namespace

Bytes encode_packet(const Packet& packet) {
    return std::visit(Encoder{}, packet);
}

DecodeResult decode_packet(ByteView buffer, uint32_t max_remaining) {
    if (buffer.empty()) return {DecodeStatus::NeedMore, {}, 0, {}};
    uint8_t first = buffer[0];
    uint8_t type = first >> 4;
    uint8_t flags = first & 0x0f;

    switch (type) {
        case kTypeConnect: case kTypeConnAck: case kTypePublish: case kTypeSubscribe:
        case kTypeSubAck: case kTypePingReq: case kTypePingResp: case kTypeDisconnect:
            break;
        case 0:
            return malformed("reserved packet type 0");
        default:
            return {DecodeStatus::Unsupported, {}, 0,
                    "unsupported packet type " + std::to_string(type)};
    }

    // Remaining-length varint: 1..4 bytes after the first byte.
    uint32_t remaining = 0;
    uint32_t mult = 1;
    size_t header_len = 1;
    for (;; ++header_len) {
        if (header_len > 4) return malformed("remaining length varint too long");
        if (buffer.size() <= header_len) return {DecodeStatus::NeedMore, {}, 0, {}};
        uint8_t byte = buffer[header_len];
        remaining += (byte & 0x7f) * mult;
        mult *= 128;
        if ((byte & 0x80) == 0) {
            ++header_len;
            break;
        }
    }
    if (remaining > max_remaining) return malformed("packet exceeds size limit");
    if (buffer.size() < header_len + remaining) return {DecodeStatus::NeedMore, {}, 0, {}};

    Reader r{buffer.data() + header_len, buffer.data() + header_len + remaining};
    return decode_body(type, flags, r, header_len + remaining);
}

const char* packet_type_name(const Packet& packet) {
    struct Namer {
        const char* operator()(const Connect&) const { return "CONNECT"; }
        const char* operator()(const ConnAck&) const { return "CONNACK"; }
        const char* operator()(const Publish&) const { return "PUBLISH"; }
        const char* operator()(const Subscribe&) const { return "SUBSCRIBE"; }
        const char* operator()(const SubAck&) const { return "SUBACK"; }
        const char* operator()(const PingReq&) const { return "PINGREQ"; }
        const char* operator()(const PingResp&) const { return "PINGRESP"; }
        const char* operator()(const Disconnect&) const { return "DISCONNECT"; }
    };
    return std::visit(Namer{}, packet);
}

}  // namespace mqttz::wire
