#include "mqttz/crypto/envelope_seal.hpp"

namespace mqttz::crypto {

wire::EncryptedEnvelope seal_envelope(const Key256& key, std::string_view origin_id,
                                      ByteView plaintext) {
    wire::EncryptedEnvelope env;
    env.origin_id = wire::pad_client_id(origin_id);
    env.nonce = random_nonce();
    auto header = env.header();
    Sealed sealed = aead_seal(key, env.nonce, plaintext, header);
    env.ciphertext = std::move(sealed.ciphertext);
    env.tag = sealed.tag;
    return env;
}

std::optional<Bytes> open_envelope(const Key256& key, const wire::EncryptedEnvelope& env) {
    auto header = env.header();
    return aead_open(key, env.nonce, env.ciphertext, env.tag, header);
}

}  // namespace mqttz::crypto
