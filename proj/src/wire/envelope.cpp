#include "mqttz/wire/envelope.hpp"

#include <algorithm>
#include <stdexcept>

namespace mqttz::wire {

std::array<uint8_t, EncryptedEnvelope::kHeaderLen> EncryptedEnvelope::header() const {
    std::array<uint8_t, kHeaderLen> h{};
    h[0] = kMagic0;
    h[1] = kMagic1;
    h[2] = kVersion;
    std::copy(origin_id.begin(), origin_id.end(), h.begin() + 3);
    return h;
}

std::string EncryptedEnvelope::origin_id_string() const {
    size_t len = origin_id.size();
    while (len > 0 && origin_id[len - 1] == 0) --len;
    return std::string(reinterpret_cast<const char*>(origin_id.data()), len);
}

std::array<uint8_t, EncryptedEnvelope::kOriginIdLen> pad_client_id(std::string_view id) {
    if (id.size() > EncryptedEnvelope::kOriginIdLen)
        throw std::invalid_argument("client id longer than 16 bytes");
    std::array<uint8_t, EncryptedEnvelope::kOriginIdLen> out{};
    std::copy(id.begin(), id.end(), out.begin());
    return out;
}

Bytes encode_envelope(const EncryptedEnvelope& env) {
    Bytes out;
    out.reserve(EncryptedEnvelope::kMinLen + env.ciphertext.size());
    auto h = env.header();
    out.insert(out.end(), h.begin(), h.end());
    out.insert(out.end(), env.nonce.begin(), env.nonce.end());
    out.insert(out.end(), env.ciphertext.begin(), env.ciphertext.end());
    out.insert(out.end(), env.tag.begin(), env.tag.end());
    return out;
}

EnvelopeDecodeResult decode_envelope(ByteView bytes) {
    EnvelopeDecodeResult res;
    if (bytes.size() < EncryptedEnvelope::kMinLen) {
        res.error = EnvelopeDecodeError::Truncated;
        return res;
    }
    if (bytes[0] != EncryptedEnvelope::kMagic0 || bytes[1] != EncryptedEnvelope::kMagic1) {
        res.error = EnvelopeDecodeError::BadMagic;
        return res;
    }
    if (bytes[2] != EncryptedEnvelope::kVersion) {
        res.error = EnvelopeDecodeError::BadVersion;
        return res;
    }
    auto& env = res.envelope;
    size_t off = 3;
    std::copy_n(bytes.begin() + off, env.origin_id.size(), env.origin_id.begin());
    off += env.origin_id.size();
    std::copy_n(bytes.begin() + off, env.nonce.size(), env.nonce.begin());
    off += env.nonce.size();
    size_t ct_len = bytes.size() - EncryptedEnvelope::kMinLen;
    env.ciphertext.assign(bytes.begin() + off, bytes.begin() + off + ct_len);
    off += ct_len;
    std::copy_n(bytes.begin() + off, env.tag.size(), env.tag.begin());
    res.ok = true;
    return res;
}

}  // namespace mqttz::wire
