#include "mqttz/tee/key_cache.hpp"

#include <random>

#include "doctest.h"
#include "support/test_util.hpp"

using namespace mqttz;
using namespace mqttz::tee;

namespace {
crypto::Key256 make_key(uint8_t fill) {
    crypto::Key256 k;
    k.fill(fill);
    return k;
}
}  // namespace

TEST_CASE("least recently used entry is the eviction victim") {
    KeyCache cache(2);
    CHECK_FALSE(cache.put("A", make_key(1)).has_value());
    CHECK_FALSE(cache.put("B", make_key(2)).has_value());
    CHECK(cache.get("A").has_value());  // A becomes most recent
    auto evicted = cache.put("C", make_key(3));
    REQUIRE(evicted.has_value());
    CHECK_EQ(*evicted, "B");
    CHECK_EQ(cache.size(), 2);
    CHECK(cache.get("A").has_value());
    CHECK(cache.get("C").has_value());
    CHECK_FALSE(cache.get("B").has_value());
}

TEST_CASE("overwriting an existing id does not evict") {
    KeyCache cache(2);
    cache.put("A", make_key(1));
    cache.put("B", make_key(2));
    auto evicted = cache.put("A", make_key(9));
    CHECK_FALSE(evicted.has_value());
    CHECK_EQ(cache.size(), 2);
    auto got = cache.get("A");
    REQUIRE(got.has_value());
    CHECK_EQ(*got, make_key(9));
}

TEST_CASE("counters") {
    KeyCache cache(1);
    CHECK_EQ(cache.counters().hits, 0);
    CHECK_EQ(cache.counters().misses, 0);
    CHECK_EQ(cache.counters().evictions, 0);

    cache.put("A", make_key(1));
    cache.get("A");
    cache.get("Z");
    cache.put("B", make_key(2));  // evicts A
    CHECK_EQ(cache.counters().hits, 1);
    CHECK_EQ(cache.counters().misses, 1);
    CHECK_EQ(cache.counters().evictions, 1);
}

TEST_CASE("capacity bound holds and order matches a plain list model") {
    std::mt19937_64 rng(1234);
    const std::vector<std::string> ids{"a", "b", "c", "d", "e", "f", "g", "h"};
    for (size_t cap = 1; cap <= 4; ++cap) {
        KeyCache cache(cap);
        std::vector<std::string> model;  // front = most recently used
        for (int step = 0; step < 3000; ++step) {
            const auto& id = ids[rng() % ids.size()];
            if (rng() % 2 == 0) {
                auto evicted = cache.put(id, make_key(static_cast<uint8_t>(step)));
                std::erase(model, id);
                model.insert(model.begin(), id);
                std::string model_evicted;
                if (model.size() > cap) {
                    model_evicted = model.back();
                    model.pop_back();
                }
                CHECK_EQ(evicted.value_or(""), model_evicted);
            } else {
                bool present = cache.get(id).has_value();
                bool model_present = std::find(model.begin(), model.end(), id) != model.end();
                CHECK_EQ(present, model_present);
                if (model_present) {
                    std::erase(model, id);
                    model.insert(model.begin(), id);
                }
            }
            CHECK_LE(cache.size(), cap);
        }
    }
}
