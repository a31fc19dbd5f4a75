#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mqttz/bytes.hpp"

namespace mqttz::wire {

// Largest value a 4-byte remaining-length varint can carry.
inline constexpr uint32_t kMaxRemainingLength = 268435455;

namespace reason {
inline constexpr uint8_t kSuccess = 0x00;
inline constexpr uint8_t kGrantedQos0 = 0x00;
inline constexpr uint8_t kUnspecifiedError = 0x80;
inline constexpr uint8_t kClientIdNotValid = 0x85;
inline constexpr uint8_t kNotAuthorized = 0x87;
inline constexpr uint8_t kSessionTakenOver = 0x8e;
}  // namespace reason

/// The two MQTT v5 properties this system emits. Anything else defined by the
/// standard is skipped on decode; undefined identifiers are a protocol error.
struct PropertySet {
    std::optional<std::string> response_topic;
    std::optional<Bytes> correlation_data;  // at most 64 bytes

    bool empty() const { return !response_topic && !correlation_data; }
    bool operator==(const PropertySet&) const = default;
};

struct Connect {
    std::string client_id;
    uint16_t keep_alive = 0;
    bool clean_start = true;
    bool operator==(const Connect&) const = default;
};

struct ConnAck {
    uint8_t reason_code = reason::kSuccess;
    bool session_present = false;
    bool operator==(const ConnAck&) const = default;
};

struct Publish {
    std::string topic;
    PropertySet properties;
    Bytes payload;
    bool operator==(const Publish&) const = default;
};

struct Subscribe {
    struct Entry {
        std::string filter;
        uint8_t requested_qos = 0;
        bool operator==(const Entry&) const = default;
    };
    uint16_t packet_id = 1;
    std::vector<Entry> entries;
    bool operator==(const Subscribe&) const = default;
};

struct SubAck {
    uint16_t packet_id = 1;
    std::vector<uint8_t> reason_codes;
    bool operator==(const SubAck&) const = default;
};

struct PingReq {
    bool operator==(const PingReq&) const = default;
};
struct PingResp {
    bool operator==(const PingResp&) const = default;
};

struct Disconnect {
    uint8_t reason_code = 0;
    bool operator==(const Disconnect&) const = default;
};

using Packet =
    std::variant<Connect, ConnAck, Publish, Subscribe, SubAck, PingReq, PingResp, Disconnect>;

struct EncodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Serializes to MQTT v5 wire bytes. Throws EncodeError when the packet
/// violates its invariants (invalid topic/client-id, oversize body).
Bytes encode_packet(const Packet& packet);

enum class DecodeStatus {
    Ok,
    NeedMore,     // not an error: feed more bytes and retry
    Malformed,    // protocol violation, connection must be closed
    Unsupported,  // packet type outside the supported subset
};

struct DecodeResult {
    DecodeStatus status = DecodeStatus::NeedMore;
    Packet packet;       // set when status == Ok
    size_t consumed = 0; // set when status == Ok
    std::string error;   // diagnostic for Malformed / Unsupported
};

/// Decodes one packet from the front of `buffer`. `max_remaining` caps the
/// remaining-length a peer may announce before we call it malformed.
DecodeResult decode_packet(ByteView buffer, uint32_t max_remaining = kMaxRemainingLength);

const char* packet_type_name(const Packet& packet);

}  // namespace mqttz::wire
