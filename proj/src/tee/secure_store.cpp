#include "mqttz/tee/secure_store.hpp"

#include <cstdio>
#include <fstream>

#include "mqttz/wire/envelope.hpp"

namespace mqttz::tee {

namespace {
constexpr size_t kRecordLen = crypto::kNonceLen + crypto::kKeyLen + crypto::kTagLen;  // 60
}

SecureStore::SecureStore(std::filesystem::path dir, const crypto::Key256& storage_key)
    : dir_(std::move(dir)), storage_key_(storage_key) {}

std::filesystem::path SecureStore::record_path(std::string_view client_id) const {
    auto padded = wire::pad_client_id(client_id);
    return dir_ / hex_encode(padded);
}

StoreStatus SecureStore::put(std::string_view client_id, const crypto::Key256& key) {
    auto padded = wire::pad_client_id(client_id);
    auto nonce = crypto::random_nonce();
    crypto::Sealed sealed = crypto::aead_seal(storage_key_, nonce, key, padded);

    Bytes record;
    record.reserve(kRecordLen);
    record.insert(record.end(), nonce.begin(), nonce.end());
    record.insert(record.end(), sealed.ciphertext.begin(), sealed.ciphertext.end());
    record.insert(record.end(), sealed.tag.begin(), sealed.tag.end());

    auto path = record_path(client_id);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) return StoreStatus::IoError;
        out.write(reinterpret_cast<const char*>(record.data()),
                  static_cast<std::streamsize>(record.size()));
        if (!out.flush()) return StoreStatus::IoError;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        return StoreStatus::IoError;
    }
    return StoreStatus::Ok;
}

StoreStatus SecureStore::get(std::string_view client_id, crypto::Key256& out) const {
    auto path = record_path(client_id);
    std::ifstream in(path, std::ios::binary);
    if (!in) return StoreStatus::NotFound;
    Bytes record((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (record.size() != kRecordLen) return StoreStatus::AuthFailure;

    crypto::Nonce nonce;
    std::copy_n(record.begin(), nonce.size(), nonce.begin());
    ByteView ct(record.data() + nonce.size(), crypto::kKeyLen);
    crypto::Tag tag;
    std::copy_n(record.begin() + nonce.size() + crypto::kKeyLen, tag.size(), tag.begin());

    auto padded = wire::pad_client_id(client_id);
    auto plain = crypto::aead_open(storage_key_, nonce, ct, tag, padded);
    if (!plain) return StoreStatus::AuthFailure;
    std::copy_n(plain->begin(), out.size(), out.begin());
    crypto::secure_wipe(*plain);
    return StoreStatus::Ok;
}

bool SecureStore::contains(std::string_view client_id) const {
    std::error_code ec;
    return std::filesystem::exists(record_path(client_id), ec);
}

size_t SecureStore::count() const {
    size_t n = 0;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name.size() == 2 * wire::EncryptedEnvelope::kOriginIdLen &&
            name.find_first_not_of("0123456789abcdef") == std::string::npos)
            ++n;
    }
    return n;
}

}  // namespace mqttz::tee
