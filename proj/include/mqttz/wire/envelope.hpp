#pragma once

#include <array>
#include <string>
#include <string_view>

#include "mqttz/bytes.hpp"

namespace mqttz::wire {

/// Application-layer ciphertext container carried as the MQTT publish payload.
///
/// Layout: magic(2) | version(1) | origin-id(16, zero padded) | nonce(12) |
/// ciphertext(n) | tag(16). The 19-byte header (magic..origin-id) is bound as
/// associated data of the authenticated cipher, so it cannot be swapped
/// without failing the tag check.
struct EncryptedEnvelope {
    static constexpr uint8_t kMagic0 = 0x4d;
    static constexpr uint8_t kMagic1 = 0x54;
    static constexpr uint8_t kVersion = 0x01;
    static constexpr size_t kOriginIdLen = 16;
    static constexpr size_t kNonceLen = 12;
    static constexpr size_t kTagLen = 16;
    static constexpr size_t kHeaderLen = 2 + 1 + kOriginIdLen;  // bytes covered as AAD
    static constexpr size_t kMinLen = kHeaderLen + kNonceLen + kTagLen;  // 47

    std::array<uint8_t, kOriginIdLen> origin_id{};
    std::array<uint8_t, kNonceLen> nonce{};
    Bytes ciphertext;
    std::array<uint8_t, kTagLen> tag{};

    /// magic | version | padded origin id — the associated data.
    std::array<uint8_t, kHeaderLen> header() const;

    /// Origin id with zero padding stripped.
    std::string origin_id_string() const;

    bool operator==(const EncryptedEnvelope&) const = default;
};

enum class EnvelopeDecodeError { BadMagic, BadVersion, Truncated };

struct EnvelopeDecodeResult {
    bool ok = false;
    EncryptedEnvelope envelope;
    EnvelopeDecodeError error = EnvelopeDecodeError::Truncated;
};

/// Zero-pads a client id into the 16-byte origin field. Throws
/// std::invalid_argument when the id is longer than 16 bytes.
std::array<uint8_t, EncryptedEnvelope::kOriginIdLen> pad_client_id(std::string_view id);

/// |result| = 47 + |ciphertext|.
Bytes encode_envelope(const EncryptedEnvelope& env);

EnvelopeDecodeResult decode_envelope(ByteView bytes);

}  // namespace mqttz::wire
