#pragma once

#include <list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "mqttz/crypto/primitives.hpp"

namespace mqttz::tee {

/// In-memory LRU over client keys. The persistent copy in SecureStore stays
/// authoritative, so eviction is a plain drop from memory.
class KeyCache {
public:
    struct Counters {
        uint64_t hits = 0;
        uint64_t misses = 0;
        uint64_t evictions = 0;
    };

    explicit KeyCache(size_t capacity) : capacity_(capacity) {}
    ~KeyCache();

    KeyCache(const KeyCache&) = delete;
    KeyCache& operator=(const KeyCache&) = delete;

    /// Lookup; a hit moves the entry to most-recently-used.
    std::optional<crypto::Key256> get(std::string_view id);

    /// Insert or overwrite as most-recently-used. Returns the evicted id when
    /// capacity forced one out.
    std::optional<std::string> put(std::string_view id, const crypto::Key256& key);

    size_t size() const { return entries_.size(); }
    size_t capacity() const { return capacity_; }
    const Counters& counters() const { return counters_; }

private:
    struct Entry {
        std::string id;
        crypto::Key256 key;
    };

    size_t capacity_;
    std::list<Entry> lru_;  // front = most recently used
    std::unordered_map<std::string_view, std::list<Entry>::iterator> entries_;
    Counters counters_;
};

}  // namespace mqttz::tee
