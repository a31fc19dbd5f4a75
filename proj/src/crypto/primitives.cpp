#include "mqttz/crypto/primitives.hpp"

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>

#include <memory>

namespace mqttz::crypto {

namespace {

[[noreturn]] void throw_openssl(const char* what) {
    char buf[256];
    ERR_error_string_n(ERR_get_error(), buf, sizeof(buf));
    throw CryptoError(std::string(what) + ": " + buf);
}

struct CipherCtxFree {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct PkeyFree {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxFree {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;
using Pkey = std::unique_ptr<EVP_PKEY, PkeyFree>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;

}  // namespace

void random_bytes(std::span<uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
        throw_openssl("RAND_bytes");
}

Nonce random_nonce() {
    Nonce n;
    random_bytes(n);
    return n;
}

void secure_wipe(std::span<uint8_t> buf) {
    if (!buf.empty()) OPENSSL_cleanse(buf.data(), buf.size());
}

Key256 hkdf_sha256(ByteView ikm, std::string_view info) {
    PkeyCtx ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
    if (!ctx) throw_openssl("EVP_PKEY_CTX_new_id(HKDF)");
    if (EVP_PKEY_derive_init(ctx.get()) <= 0 ||
        EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) <= 0 ||
        EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(), static_cast<int>(ikm.size())) <= 0 ||
        EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), reinterpret_cast<const uint8_t*>(info.data()),
                                    static_cast<int>(info.size())) <= 0)
        throw_openssl("HKDF setup");
    Key256 out;
    size_t len = out.size();
    if (EVP_PKEY_derive(ctx.get(), out.data(), &len) <= 0 || len != out.size())
        throw_openssl("HKDF derive");
    return out;
}

Sealed aead_seal(const Key256& key, const Nonce& nonce, ByteView plaintext, ByteView aad) {
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw_openssl("EVP_CIPHER_CTX_new");
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1)
        throw_openssl("EncryptInit");
    int len = 0;
    if (!aad.empty() &&
        EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
        throw_openssl("EncryptUpdate(aad)");
    Sealed out;
    out.ciphertext.resize(plaintext.size());
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.ciphertext.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
        throw_openssl("EncryptUpdate");
    if (EVP_EncryptFinal_ex(ctx.get(), out.ciphertext.data() + out.ciphertext.size(), &len) != 1)
        throw_openssl("EncryptFinal");
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen, out.tag.data()) != 1)
        throw_openssl("GET_TAG");
    return out;
}

std::optional<Bytes> aead_open(const Key256& key, const Nonce& nonce, ByteView ciphertext,
                               const Tag& tag, ByteView aad) {
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw_openssl("EVP_CIPHER_CTX_new");
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1)
        throw_openssl("DecryptInit");
    int len = 0;
    if (!aad.empty() &&
        EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
        throw_openssl("DecryptUpdate(aad)");
    Bytes plaintext(ciphertext.size());
    if (!ciphertext.empty() &&
        EVP_DecryptUpdate(ctx.get(), plaintext.data(), &len, ciphertext.data(),
                          static_cast<int>(ciphertext.size())) != 1)
        throw_openssl("DecryptUpdate");
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen,
                            const_cast<uint8_t*>(tag.data())) != 1)
        throw_openssl("SET_TAG");
    if (EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + plaintext.size(), &len) != 1) {
        // Tag mismatch. Leave nothing decrypted behind.
        secure_wipe(plaintext);
        return std::nullopt;
    }
    return plaintext;
}

namespace {

X25519Key public_of(EVP_PKEY* pkey) {
    X25519Key pub;
    size_t len = pub.size();
    if (EVP_PKEY_get_raw_public_key(pkey, pub.data(), &len) != 1 || len != pub.size())
        throw_openssl("get_raw_public_key");
    return pub;
}

}  // namespace

X25519KeyPair x25519_from_private(const X25519Key& private_key) {
    Pkey pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, private_key.data(),
                                           private_key.size()));
    if (!pkey) throw_openssl("new_raw_private_key");
    return {private_key, public_of(pkey.get())};
}

X25519KeyPair x25519_generate() {
    X25519Key priv;
    random_bytes(priv);
    return x25519_from_private(priv);
}

std::optional<X25519Key> x25519_shared(const X25519Key& private_key, const X25519Key& peer_public) {
    Pkey pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, private_key.data(),
                                           private_key.size()));
    if (!pkey) throw_openssl("new_raw_private_key");
    Pkey peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(),
                                          peer_public.size()));
    if (!peer) throw_openssl("new_raw_public_key");
    PkeyCtx ctx(EVP_PKEY_CTX_new(pkey.get(), nullptr));
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) <= 0)
        throw_openssl("derive_init");
    if (EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) <= 0) {
        ERR_clear_error();
        return std::nullopt;
    }
    X25519Key shared;
    size_t len = shared.size();
    if (EVP_PKEY_derive(ctx.get(), shared.data(), &len) <= 0 || len != shared.size()) {
        // OpenSSL rejects all-zero X25519 outputs (low-order peer point).
        ERR_clear_error();
        return std::nullopt;
    }
    return shared;
}

}  // namespace mqttz::crypto
