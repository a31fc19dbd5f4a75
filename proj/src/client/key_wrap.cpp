#include "mqttz/client/key_wrap.hpp"

#include <stdexcept>

#include "mqttz/tee/trusted_core.hpp"
#include "mqttz/wire/envelope.hpp"

namespace mqttz::client {

Bytes wrap_key(ByteView sym_key, ByteView tee_public_key, std::string_view client_id) {
    if (sym_key.size() != crypto::kKeyLen) throw std::invalid_argument("bad-key-length");
    if (tee_public_key.size() != crypto::kX25519Len)
        throw std::invalid_argument("bad-key-length: tee public key");
    auto padded = wire::pad_client_id(client_id);  // throws on ids > 16 bytes

    crypto::X25519Key tee_pub;
    std::copy_n(tee_public_key.begin(), tee_pub.size(), tee_pub.begin());

    crypto::X25519KeyPair ephemeral = crypto::x25519_generate();
    auto shared = crypto::x25519_shared(ephemeral.private_key, tee_pub);
    crypto::secure_wipe(ephemeral.private_key);
    if (!shared) throw crypto::CryptoError("degenerate TEE public key");

    crypto::Key256 wrap = crypto::hkdf_sha256(*shared, tee::kHandshakeContext);
    crypto::secure_wipe(*shared);

    crypto::Nonce nonce = crypto::random_nonce();
    crypto::Sealed sealed = crypto::aead_seal(wrap, nonce, sym_key, padded);
    crypto::secure_wipe(wrap);

    Bytes blob;
    blob.reserve(tee::kWrappedKeyBlobLen);
    blob.insert(blob.end(), ephemeral.public_key.begin(), ephemeral.public_key.end());
    blob.insert(blob.end(), nonce.begin(), nonce.end());
    blob.insert(blob.end(), sealed.ciphertext.begin(), sealed.ciphertext.end());
    blob.insert(blob.end(), sealed.tag.begin(), sealed.tag.end());
    return blob;
}

}  // namespace mqttz::client
