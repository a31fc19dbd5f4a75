#pragma once

#include <filesystem>
#include <string_view>

#include "mqttz/crypto/primitives.hpp"

namespace mqttz::tee {

enum class StoreStatus { Ok, NotFound, AuthFailure, IoError };

/// Authenticated at-rest key storage. One file per client id, named by the
/// lowercase hex of the 16-byte padded id; body is nonce(12) | ct(32) |
/// tag(16) under the storage key with the padded id as associated data, so a
/// record cannot be renamed onto another id without failing the tag check.
class SecureStore {
public:
    SecureStore(std::filesystem::path dir, const crypto::Key256& storage_key);

    StoreStatus put(std::string_view client_id, const crypto::Key256& key);
    StoreStatus get(std::string_view client_id, crypto::Key256& out) const;
    bool contains(std::string_view client_id) const;

    /// Number of key records on disk.
    size_t count() const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path record_path(std::string_view client_id) const;

    std::filesystem::path dir_;
    crypto::Key256 storage_key_;
};

}  // namespace mqttz::tee
