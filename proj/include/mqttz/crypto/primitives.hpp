#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "mqttz/bytes.hpp"

namespace mqttz::crypto {

constexpr size_t kKeyLen = 32;    // AES-256
constexpr size_t kNonceLen = 12;  // GCM 96-bit IV
constexpr size_t kTagLen = 16;
constexpr size_t kX25519Len = 32;

using Key256 = std::array<uint8_t, kKeyLen>;
using Nonce = std::array<uint8_t, kNonceLen>;
using Tag = std::array<uint8_t, kTagLen>;
using X25519Key = std::array<uint8_t, kX25519Len>;

/// Unexpected failure inside the crypto library (not an authentication failure).
struct CryptoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void random_bytes(std::span<uint8_t> out);
Nonce random_nonce();

/// Overwrites the buffer so key material / plaintext does not linger.
void secure_wipe(std::span<uint8_t> buf);

/// HKDF-SHA-256 with empty salt; `info` is the domain-separation context string.
Key256 hkdf_sha256(ByteView ikm, std::string_view info);

struct Sealed {
    Bytes ciphertext;  // same length as plaintext
    Tag tag;
};

/// AES-256-GCM encrypt. Throws CryptoError only on library failure.
Sealed aead_seal(const Key256& key, const Nonce& nonce, ByteView plaintext, ByteView aad);

/// AES-256-GCM decrypt+verify. nullopt on authentication failure.
std::optional<Bytes> aead_open(const Key256& key, const Nonce& nonce, ByteView ciphertext,
                               const Tag& tag, ByteView aad);

struct X25519KeyPair {
    X25519Key private_key;
    X25519Key public_key;
};

/// Public key for a raw 32-byte private scalar (clamping applied by the library).
X25519KeyPair x25519_from_private(const X25519Key& private_key);
X25519KeyPair x25519_generate();

/// Shared secret; nullopt for degenerate (all-zero) results from low-order peer points.
std::optional<X25519Key> x25519_shared(const X25519Key& private_key, const X25519Key& peer_public);

}  // namespace mqttz::crypto
