#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "mqttz/bytes.hpp"
#include "mqttz/wire/envelope.hpp"

namespace mqttz::tee {

// KDF context strings for everything derived from the device root key.
inline constexpr std::string_view kIdentityContext = "mqttz-tee-identity-v1";
inline constexpr std::string_view kStorageContext = "mqttz-secure-storage-v1";
inline constexpr std::string_view kHandshakeContext = "mqttz-handshake-v1";

inline constexpr size_t kRootKeyLen = 32;
// Handshake blob: ephemeral X25519 public (32) | nonce (12) | ct (32) | tag (16).
inline constexpr size_t kWrappedKeyBlobLen = 92;

enum class CoreStatus : uint8_t {
    Ok,
    BadRootLength,
    StorageUnavailable,
    BadArgument,
    BadBlobLength,
    AuthFailure,
    StorageFailure,
    KeyNotFound,
    DecryptAuthFailure,
    InternalCryptoFailure,
};

const char* to_string(CoreStatus status);

/// Per-phase breakdown of one re-encryption, measured inside the core so
/// queueing at the boundary is excluded.
struct PhaseTimings {
    uint64_t retrieve_dec_key_ns = 0;
    uint64_t decrypt_ns = 0;
    uint64_t retrieve_enc_key_ns = 0;
    uint64_t encrypt_ns = 0;
    bool dec_key_cache_hit = false;
    bool enc_key_cache_hit = false;
};

struct CoreCounters {
    uint64_t cache_hits = 0;
    uint64_t cache_misses = 0;
    uint64_t cache_evictions = 0;
    uint64_t stored_keys = 0;
};

struct ReencryptResult {
    CoreStatus status = CoreStatus::InternalCryptoFailure;
    wire::EncryptedEnvelope envelope;
    PhaseTimings timings;
};

/// Emulated TEE holding the identity keypair, the client keys, the LRU key
/// cache and the secure store. The public surface never returns key material
/// or plaintext: only envelopes, the public identity, counters and timings
/// cross this boundary. All calls funnel through one internal lock, modeling
/// the secure-world switch: exactly one request executes inside at a time.
class TrustedCore {
public:
    struct InitResult {
        CoreStatus status = CoreStatus::InternalCryptoFailure;
        std::unique_ptr<TrustedCore> core;
    };

    /// Derives the identity keypair and storage key from the 32-byte device
    /// root key; opens (creating if needed) the storage directory.
    static InitResult init(ByteView root_key, const std::string& storage_dir,
                           size_t cache_capacity);

    ~TrustedCore();
    TrustedCore(const TrustedCore&) = delete;
    TrustedCore& operator=(const TrustedCore&) = delete;

    /// X25519 public identity; a pure function of the device root key.
    std::array<uint8_t, 32> public_identity() const;

    /// Unwraps a client-supplied key blob and persists the key under
    /// `client_id`. Re-provisioning an existing id overwrites (re-keying).
    CoreStatus provision_key(std::string_view client_id, ByteView wrapped_blob);

    /// Decrypts `envelope` under origin's key and returns a fresh envelope
    /// encrypted under dest's key with origin-id rewritten to `dest_id`.
    /// Requires envelope.origin_id == origin_id.
    ReencryptResult reencrypt(std::string_view origin_id, std::string_view dest_id,
                              const wire::EncryptedEnvelope& envelope);

    CoreCounters export_counters() const;

private:
    struct Impl;
    explicit TrustedCore(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

}  // namespace mqttz::tee
