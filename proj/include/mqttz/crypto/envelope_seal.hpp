#pragma once

#include <optional>
#include <string_view>

#include "mqttz/crypto/primitives.hpp"
#include "mqttz/wire/envelope.hpp"

namespace mqttz::crypto {

/// Builds an envelope for `plaintext` under `key`: fresh random nonce,
/// AES-256-GCM with the envelope header as associated data.
wire::EncryptedEnvelope seal_envelope(const Key256& key, std::string_view origin_id,
                                      ByteView plaintext);

/// Decrypts and verifies. nullopt on authentication failure (tampered body,
/// swapped header, wrong key).
std::optional<Bytes> open_envelope(const Key256& key, const wire::EncryptedEnvelope& env);

}  // namespace mqttz::crypto
