#include "mqttz/tee/trusted_core.hpp"

#include <chrono>
#include <mutex>

#include "mqttz/crypto/envelope_seal.hpp"
#include "mqttz/crypto/primitives.hpp"
#include "mqttz/tee/key_cache.hpp"
#include "mqttz/tee/secure_store.hpp"

namespace mqttz::tee {

const char* to_string(CoreStatus status) {
    switch (status) {
        case CoreStatus::Ok: return "ok";
        case CoreStatus::BadRootLength: return "bad-root-length";
        case CoreStatus::StorageUnavailable: return "storage-unavailable";
        case CoreStatus::BadArgument: return "bad-argument";
        case CoreStatus::BadBlobLength: return "bad-blob-length";
        case CoreStatus::AuthFailure: return "auth-failure";
        case CoreStatus::StorageFailure: return "storage-failure";
        case CoreStatus::KeyNotFound: return "key-not-found";
        case CoreStatus::DecryptAuthFailure: return "decrypt-auth-failure";
        case CoreStatus::InternalCryptoFailure: return "internal-crypto-failure";
    }
    return "unknown";
}

namespace {

uint64_t now_ns() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count());
}

}  // namespace

struct TrustedCore::Impl {
    mutable std::mutex boundary;  // the world switch: one request at a time
    crypto::X25519KeyPair identity;
    SecureStore store;
    KeyCache cache;

    Impl(const crypto::X25519KeyPair& id, SecureStore s, size_t cache_capacity)
        : identity(id), store(std::move(s)), cache(cache_capacity) {}

    ~Impl() { crypto::secure_wipe(identity.private_key); }

    struct KeyLookup {
        CoreStatus status = CoreStatus::KeyNotFound;
        crypto::Key256 key{};
        bool cache_hit = false;
    };

    // Cache first; on a miss the persistent record is decrypted and the key
    // promoted into the cache (evicting the LRU entry, whose persistent copy
    // is already current).
    KeyLookup get_key(std::string_view id) {
        KeyLookup out;
        if (auto cached = cache.get(id)) {
            out.status = CoreStatus::Ok;
            out.key = *cached;
            out.cache_hit = true;
            return out;
        }
        switch (store.get(id, out.key)) {
            case StoreStatus::Ok:
                break;
            case StoreStatus::NotFound:
                out.status = CoreStatus::KeyNotFound;
                return out;
            case StoreStatus::AuthFailure:
                out.status = CoreStatus::AuthFailure;
                return out;
            case StoreStatus::IoError:
                out.status = CoreStatus::StorageFailure;
                return out;
        }
        cache.put(id, out.key);
        out.status = CoreStatus::Ok;
        return out;
    }
};

TrustedCore::TrustedCore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
TrustedCore::~TrustedCore() = default;

TrustedCore::InitResult TrustedCore::init(ByteView root_key, const std::string& storage_dir,
                                          size_t cache_capacity) {
    if (root_key.size() != kRootKeyLen) return {CoreStatus::BadRootLength, nullptr};
    if (cache_capacity < 1) return {CoreStatus::BadArgument, nullptr};

    std::error_code ec;
    std::filesystem::create_directories(storage_dir, ec);
    if (ec || !std::filesystem::is_directory(storage_dir))
        return {CoreStatus::StorageUnavailable, nullptr};
    // Probe writability up front so a read-only mount fails at startup.
    {
        auto probe = std::filesystem::path(storage_dir) / ".probe";
        FILE* f = std::fopen(probe.c_str(), "wb");
        if (!f) return {CoreStatus::StorageUnavailable, nullptr};
        std::fclose(f);
        std::filesystem::remove(probe, ec);
    }

    try {
        crypto::Key256 identity_priv = crypto::hkdf_sha256(root_key, kIdentityContext);
        crypto::X25519KeyPair identity = crypto::x25519_from_private(identity_priv);
        crypto::secure_wipe(identity_priv);
        crypto::Key256 storage_key = crypto::hkdf_sha256(root_key, kStorageContext);
        auto impl = std::make_unique<Impl>(identity, SecureStore(storage_dir, storage_key),
                                           cache_capacity);
        crypto::secure_wipe(identity.private_key);
        crypto::secure_wipe(storage_key);
        return {CoreStatus::Ok, std::unique_ptr<TrustedCore>(new TrustedCore(std::move(impl)))};
    } catch (const crypto::CryptoError&) {
        return {CoreStatus::InternalCryptoFailure, nullptr};
    }
}

std::array<uint8_t, 32> TrustedCore::public_identity() const {
    std::lock_guard lock(impl_->boundary);
    return impl_->identity.public_key;
}

CoreStatus TrustedCore::provision_key(std::string_view client_id, ByteView wrapped_blob) {
    std::lock_guard lock(impl_->boundary);
    if (wrapped_blob.size() != kWrappedKeyBlobLen) return CoreStatus::BadBlobLength;
    if (client_id.empty() || client_id.size() > wire::EncryptedEnvelope::kOriginIdLen)
        return CoreStatus::BadArgument;

    crypto::X25519Key ephemeral_pub;
    std::copy_n(wrapped_blob.begin(), ephemeral_pub.size(), ephemeral_pub.begin());
    crypto::Nonce nonce;
    std::copy_n(wrapped_blob.begin() + 32, nonce.size(), nonce.begin());
    ByteView ct(wrapped_blob.data() + 44, crypto::kKeyLen);
    crypto::Tag tag;
    std::copy_n(wrapped_blob.begin() + 76, tag.size(), tag.begin());

    try {
        auto shared = crypto::x25519_shared(impl_->identity.private_key, ephemeral_pub);
        if (!shared) return CoreStatus::AuthFailure;
        crypto::Key256 wrap_key = crypto::hkdf_sha256(*shared, kHandshakeContext);
        crypto::secure_wipe(*shared);

        auto padded = wire::pad_client_id(client_id);
        auto unwrapped = crypto::aead_open(wrap_key, nonce, ct, tag, padded);
        crypto::secure_wipe(wrap_key);
        if (!unwrapped) return CoreStatus::AuthFailure;

        crypto::Key256 client_key;
        std::copy_n(unwrapped->begin(), client_key.size(), client_key.begin());
        crypto::secure_wipe(*unwrapped);

        if (impl_->store.put(client_id, client_key) != StoreStatus::Ok) {
            crypto::secure_wipe(client_key);
            return CoreStatus::StorageFailure;
        }
        impl_->cache.put(client_id, client_key);
        crypto::secure_wipe(client_key);
        return CoreStatus::Ok;
    } catch (const crypto::CryptoError&) {
        return CoreStatus::InternalCryptoFailure;
    }
}

ReencryptResult TrustedCore::reencrypt(std::string_view origin_id, std::string_view dest_id,
                                       const wire::EncryptedEnvelope& envelope) {
    std::lock_guard lock(impl_->boundary);
    ReencryptResult res;
    if (dest_id.empty() || dest_id.size() > wire::EncryptedEnvelope::kOriginIdLen) {
        res.status = CoreStatus::BadArgument;
        return res;
    }
    try {
        if (envelope.origin_id != wire::pad_client_id(origin_id)) {
            res.status = CoreStatus::BadArgument;
            return res;
        }
    } catch (const std::invalid_argument&) {
        res.status = CoreStatus::BadArgument;
        return res;
    }

    try {
        uint64_t t0 = now_ns();
        auto origin_key = impl_->get_key(origin_id);
        uint64_t t1 = now_ns();
        res.timings.retrieve_dec_key_ns = t1 - t0;
        res.timings.dec_key_cache_hit = origin_key.cache_hit;
        if (origin_key.status != CoreStatus::Ok) {
            res.status = origin_key.status;
            return res;
        }

        auto plaintext = crypto::open_envelope(origin_key.key, envelope);
        uint64_t t2 = now_ns();
        res.timings.decrypt_ns = t2 - t1;
        crypto::secure_wipe(origin_key.key);
        if (!plaintext) {
            res.status = CoreStatus::DecryptAuthFailure;
            return res;
        }

        auto dest_key = impl_->get_key(dest_id);
        uint64_t t3 = now_ns();
        res.timings.retrieve_enc_key_ns = t3 - t2;
        res.timings.enc_key_cache_hit = dest_key.cache_hit;
        if (dest_key.status != CoreStatus::Ok) {
            crypto::secure_wipe(*plaintext);
            res.status = dest_key.status;
            return res;
        }

        res.envelope = crypto::seal_envelope(dest_key.key, dest_id, *plaintext);
        uint64_t t4 = now_ns();
        res.timings.encrypt_ns = t4 - t3;
        crypto::secure_wipe(dest_key.key);
        crypto::secure_wipe(*plaintext);
        res.status = CoreStatus::Ok;
        return res;
    } catch (const crypto::CryptoError&) {
        res.status = CoreStatus::InternalCryptoFailure;
        return res;
    }
}

CoreCounters TrustedCore::export_counters() const {
    std::lock_guard lock(impl_->boundary);
    const auto& c = impl_->cache.counters();
    return {c.hits, c.misses, c.evictions, impl_->store.count()};
}

}  // namespace mqttz::tee
