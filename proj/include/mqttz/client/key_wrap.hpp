#pragma once

#include <string_view>

#include "mqttz/crypto/primitives.hpp"

namespace mqttz::client {

/// Wraps a client's symmetric key for provisioning into the broker's trusted
/// core: fresh ephemeral X25519 keypair, HKDF-SHA-256 over the shared secret,
/// AES-256-GCM with the 16-byte padded client id as associated data.
///
/// Blob layout: ephemeral-public(32) | nonce(12) | ciphertext(32) | tag(16).
/// A fresh ephemeral keypair per call makes every blob distinct.
///
/// Throws std::invalid_argument when either key is not 32 bytes or the id
/// exceeds 16 bytes.
Bytes wrap_key(ByteView sym_key, ByteView tee_public_key, std::string_view client_id);

}  // namespace mqttz::client
