#include "mqttz/tee/key_cache.hpp"

namespace mqttz::tee {

KeyCache::~KeyCache() {
    for (auto& entry : lru_) crypto::secure_wipe(entry.key);
}

std::optional<crypto::Key256> KeyCache::get(std::string_view id) {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        ++counters_.misses;
        return std::nullopt;
    }
    ++counters_.hits;
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->key;
}

std::optional<std::string> KeyCache::put(std::string_view id, const crypto::Key256& key) {
    if (auto it = entries_.find(id); it != entries_.end()) {
        crypto::secure_wipe(it->second->key);
        it->second->key = key;
        lru_.splice(lru_.begin(), lru_, it->second);
        return std::nullopt;
    }
    lru_.push_front(Entry{std::string(id), key});
    entries_.emplace(lru_.front().id, lru_.begin());

    if (entries_.size() <= capacity_) return std::nullopt;
    auto victim = std::prev(lru_.end());
    std::string evicted = victim->id;
    crypto::secure_wipe(victim->key);
    entries_.erase(std::string_view(victim->id));
    lru_.erase(victim);
    ++counters_.evictions;
    return evicted;
}

}  // namespace mqttz::tee
