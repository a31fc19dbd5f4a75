#include "mqttz/tee/trusted_core.hpp"

#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mqttz/client/key_wrap.hpp"
#include "mqttz/crypto/envelope_seal.hpp"
#include "support/test_util.hpp"

using namespace mqttz;
using namespace mqttz::tee;

namespace {

Bytes sequential_root() {
    Bytes root(32);
    for (size_t i = 0; i < root.size(); ++i) root[i] = static_cast<uint8_t>(i);
    return root;
}

crypto::Key256 random_key(std::mt19937_64& rng) {
    crypto::Key256 k;
    for (auto& b : k) b = static_cast<uint8_t>(rng());
    return k;
}

std::unique_ptr<TrustedCore> make_core(const testing::TempDir& dir, size_t capacity,
                                       ByteView root = {}) {
    Bytes default_root = sequential_root();
    auto res = TrustedCore::init(root.empty() ? ByteView(default_root) : root, dir.str(),
                                 capacity);
    REQUIRE_EQ(res.status, CoreStatus::Ok);
    REQUIRE(res.core);
    return std::move(res.core);
}

void provision(TrustedCore& core, std::string_view id, const crypto::Key256& key) {
    Bytes blob = client::wrap_key(key, core.public_identity(), id);
    REQUIRE_EQ(core.provision_key(id, blob), CoreStatus::Ok);
}

}  // namespace

TEST_CASE("init determinism and validation") {
    testing::TempDir d1, d2, d3;
    auto root = sequential_root();

    auto core1 = make_core(d1, 4, root);
    auto core2 = make_core(d2, 4, root);
    CHECK_EQ(core1->public_identity(), core2->public_identity());
    CHECK_EQ(core1->public_identity(), core1->public_identity());  // stable across calls

    Bytes other_root(32, 0x7e);
    auto core3 = make_core(d3, 4, other_root);
    CHECK_NE(core1->public_identity(), core3->public_identity());

    // the public identity is not the derived private scalar
    auto ident_priv = crypto::hkdf_sha256(root, kIdentityContext);
    CHECK_NE(hex_encode(core1->public_identity()), hex_encode(ident_priv));

    Bytes short_root(16, 0x01);
    CHECK_EQ(TrustedCore::init(short_root, d1.str(), 4).status, CoreStatus::BadRootLength);
    CHECK_EQ(TrustedCore::init(root, d1.str(), 0).status, CoreStatus::BadArgument);
    CHECK_EQ(TrustedCore::init(root, "/proc/definitely/not/writable", 4).status,
             CoreStatus::StorageUnavailable);
}

TEST_CASE("provisioning: wrap_key blobs round trip end to end") {
    testing::TempDir dir;
    std::mt19937_64 rng(5);
    auto core = make_core(dir, 4);
    auto key = random_key(rng);

    Bytes blob = client::wrap_key(key, core->public_identity(), "p01");
    REQUIRE_EQ(blob.size(), kWrappedKeyBlobLen);
    Bytes blob2 = client::wrap_key(key, core->public_identity(), "p01");
    CHECK_NE(blob, blob2);  // fresh ephemeral keypair per call

    REQUIRE_EQ(core->provision_key("p01", blob), CoreStatus::Ok);

    // the provisioned key decrypts what we seal locally: reencrypt p01 -> p01
    Bytes pt = testing::random_bytes(rng, 128);
    auto env = crypto::seal_envelope(key, "p01", pt);
    auto res = core->reencrypt("p01", "p01", env);
    REQUIRE_EQ(res.status, CoreStatus::Ok);
    CHECK_NE(res.envelope.nonce, env.nonce);
    auto opened = crypto::open_envelope(key, res.envelope);
    REQUIRE(opened.has_value());
    CHECK_EQ(*opened, pt);
}

TEST_CASE("provisioning rejections") {
    testing::TempDir dir;
    std::mt19937_64 rng(6);
    auto core = make_core(dir, 4);
    auto key = random_key(rng);
    Bytes blob = client::wrap_key(key, core->public_identity(), "p01");

    SUBCASE("blob of the wrong length") {
        Bytes short_blob(blob.begin(), blob.end() - 1);
        CHECK_EQ(core->provision_key("p01", short_blob), CoreStatus::BadBlobLength);
        CHECK_EQ(core->provision_key("p01", Bytes(10)), CoreStatus::BadBlobLength);
    }
    SUBCASE("one flipped ciphertext byte") {
        Bytes tampered = blob;
        tampered[44 + 3] ^= 0x01;  // inside the 32-byte wrapped key
        CHECK_EQ(core->provision_key("p01", tampered), CoreStatus::AuthFailure);
    }
    SUBCASE("blob bound to a different client id") {
        CHECK_EQ(core->provision_key("p02", blob), CoreStatus::AuthFailure);
    }
    SUBCASE("blob wrapped for a different recipient") {
        testing::TempDir other_dir;
        Bytes other_root(32, 0x31);
        auto other = make_core(other_dir, 4, other_root);
        Bytes foreign = client::wrap_key(key, other->public_identity(), "p01");
        CHECK_EQ(core->provision_key("p01", foreign), CoreStatus::AuthFailure);
    }
    SUBCASE("re-provisioning overwrites (re-keying)") {
        REQUIRE_EQ(core->provision_key("p01", blob), CoreStatus::Ok);
        auto new_key = random_key(rng);
        Bytes new_blob = client::wrap_key(new_key, core->public_identity(), "p01");
        REQUIRE_EQ(core->provision_key("p01", new_blob), CoreStatus::Ok);

        auto env = crypto::seal_envelope(new_key, "p01", to_bytes("x"));
        CHECK_EQ(core->reencrypt("p01", "p01", env).status, CoreStatus::Ok);
        auto old_env = crypto::seal_envelope(key, "p01", to_bytes("x"));
        CHECK_EQ(core->reencrypt("p01", "p01", old_env).status,
                 CoreStatus::DecryptAuthFailure);
    }
}

TEST_CASE("frozen handshake blob from the independent implementation provisions") {
    testing::TempDir dir;
    auto core = make_core(dir, 4);
    CHECK_EQ(hex_encode(core->public_identity()),
             "c7d2d047f432c5c7c2b66af78add3443cbcd836e8f9bd541e41f61e3a826a332");

    auto blob = hex_decode_or_throw(
        "d7b5e81d336e578b13b8d706e82d061e3038c96bce66cdcf50d566b96ddbba10"
        "000102030405060708090a0bd11ca6d21912e03185776f535a6fcfeaebe30e45"
        "55362b534b300a0bb484ddf2d2afcd1af2fd9a2f6de9494c8126c07b");
    REQUIRE_EQ(core->provision_key("p01", blob), CoreStatus::Ok);

    crypto::Key256 aa_key;
    aa_key.fill(0xaa);
    auto env = crypto::seal_envelope(aa_key, "p01", to_bytes("interop"));
    auto res = core->reencrypt("p01", "p01", env);
    REQUIRE_EQ(res.status, CoreStatus::Ok);
    auto opened = crypto::open_envelope(aa_key, res.envelope);
    REQUIRE(opened.has_value());
    CHECK_EQ(to_string(*opened), "interop");
}

TEST_CASE("reencrypt rewrites the origin to the destination id") {
    testing::TempDir dir;
    std::mt19937_64 rng(7);
    auto core = make_core(dir, 4);
    auto kp = random_key(rng), ks = random_key(rng);
    provision(*core, "p01", kp);
    provision(*core, "sub-16byte-id-xx", ks);

    Bytes pt = testing::random_bytes(rng, 2048);
    auto env = crypto::seal_envelope(kp, "p01", pt);
    auto res = core->reencrypt("p01", "sub-16byte-id-xx", env);
    REQUIRE_EQ(res.status, CoreStatus::Ok);
    CHECK_EQ(res.envelope.origin_id_string(), "sub-16byte-id-xx");
    auto opened = crypto::open_envelope(ks, res.envelope);
    REQUIRE(opened.has_value());
    CHECK_EQ(*opened, pt);
    // the publisher's key no longer opens it
    CHECK_FALSE(crypto::open_envelope(kp, res.envelope).has_value());
}

TEST_CASE("reencrypt error paths") {
    testing::TempDir dir;
    std::mt19937_64 rng(8);
    auto core = make_core(dir, 4);
    auto key = random_key(rng);
    provision(*core, "p01", key);

    auto env = crypto::seal_envelope(key, "p01", to_bytes("payload"));

    SUBCASE("flipped tag byte") {
        auto bad = env;
        bad.tag[5] ^= 0x80;
        CHECK_EQ(core->reencrypt("p01", "p01", bad).status, CoreStatus::DecryptAuthFailure);
    }
    SUBCASE("flipped ciphertext byte") {
        auto bad = env;
        bad.ciphertext[2] ^= 0x01;
        CHECK_EQ(core->reencrypt("p01", "p01", bad).status, CoreStatus::DecryptAuthFailure);
    }
    SUBCASE("unknown origin") {
        auto foreign = crypto::seal_envelope(key, "zzz", to_bytes("x"));
        CHECK_EQ(core->reencrypt("zzz", "p01", foreign).status, CoreStatus::KeyNotFound);
    }
    SUBCASE("unknown destination") {
        CHECK_EQ(core->reencrypt("p01", "zzz", env).status, CoreStatus::KeyNotFound);
    }
    SUBCASE("origin argument disagrees with the envelope header") {
        CHECK_EQ(core->reencrypt("p02", "p01", env).status, CoreStatus::BadArgument);
    }
    SUBCASE("timings are populated on success") {
        auto res = core->reencrypt("p01", "p01", env);
        REQUIRE_EQ(res.status, CoreStatus::Ok);
        CHECK_GT(res.timings.retrieve_dec_key_ns, 0);
        CHECK_GT(res.timings.decrypt_ns, 0);
        CHECK_GT(res.timings.retrieve_enc_key_ns, 0);
        CHECK_GT(res.timings.encrypt_ns, 0);
        CHECK(res.timings.dec_key_cache_hit);
        CHECK(res.timings.enc_key_cache_hit);
    }
}

TEST_CASE("eviction drops memory only; storage still serves the key") {
    testing::TempDir dir;
    std::mt19937_64 rng(9);
    auto core = make_core(dir, 2);
    auto ka = random_key(rng), kb = random_key(rng), kc = random_key(rng);
    provision(*core, "A", ka);
    provision(*core, "B", kb);

    // touch A so B is the LRU entry
    auto env_a = crypto::seal_envelope(ka, "A", to_bytes("x"));
    REQUIRE_EQ(core->reencrypt("A", "A", env_a).status, CoreStatus::Ok);

    provision(*core, "C", kc);  // evicts B
    auto before = core->export_counters();
    CHECK_EQ(before.cache_evictions, 1);

    // B still answers, via a storage read
    auto env_b = crypto::seal_envelope(kb, "B", to_bytes("y"));
    auto res = core->reencrypt("B", "B", env_b);
    REQUIRE_EQ(res.status, CoreStatus::Ok);
    CHECK_FALSE(res.timings.dec_key_cache_hit);
    CHECK(res.timings.enc_key_cache_hit);  // B was just promoted
    auto after = core->export_counters();
    CHECK_EQ(after.cache_misses, before.cache_misses + 1);
}

TEST_CASE("storage tamper surfaces as an authentication failure on cold reads") {
    testing::TempDir dir;
    std::mt19937_64 rng(10);
    auto core = make_core(dir, 1);
    auto ka = random_key(rng), kb = random_key(rng);
    provision(*core, "A", ka);
    provision(*core, "B", kb);  // capacity 1: A is now storage-only

    auto path = dir.path() / hex_encode(wire::pad_client_id("A"));
    REQUIRE(std::filesystem::exists(path));
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    char byte;
    f.seekg(20);
    f.get(byte);
    f.seekp(20);
    f.put(static_cast<char>(byte ^ 0x01));
    f.close();

    auto env = crypto::seal_envelope(ka, "A", to_bytes("x"));
    CHECK_EQ(core->reencrypt("A", "A", env).status, CoreStatus::AuthFailure);
}

TEST_CASE("counters: fresh zeros, then monotone and oracle-consistent") {
    testing::TempDir dir;
    std::mt19937_64 rng(11);
    auto core = make_core(dir, 3);

    auto fresh = core->export_counters();
    CHECK_EQ(fresh.cache_hits, 0);
    CHECK_EQ(fresh.cache_misses, 0);
    CHECK_EQ(fresh.cache_evictions, 0);
    CHECK_EQ(fresh.stored_keys, 0);

    const std::vector<std::string> ids{"c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7"};
    std::map<std::string, crypto::Key256> keys;
    testing::NaiveLru oracle(3);

    for (int step = 0; step < 200; ++step) {
        const auto& id = ids[rng() % ids.size()];
        if (rng() % 2 == 0) {
            auto key = random_key(rng);
            keys[id] = key;
            provision(*core, id, key);
            oracle.provision(id);
        } else {
            // a get materialises as reencrypt(id, id): two lookups
            if (keys.contains(id)) {
                auto env = crypto::seal_envelope(keys[id], id, to_bytes("t"));
                REQUIRE_EQ(core->reencrypt(id, id, env).status, CoreStatus::Ok);
                oracle.get(id);
                oracle.get(id);
            } else {
                wire::EncryptedEnvelope env;
                env.origin_id = wire::pad_client_id(id);
                CHECK_EQ(core->reencrypt(id, id, env).status, CoreStatus::KeyNotFound);
                REQUIRE_EQ(oracle.get(id), testing::NaiveLru::GetResult::NotFound);
            }
        }
        auto c = core->export_counters();
        CHECK_EQ(c.cache_hits, oracle.hits);
        CHECK_EQ(c.cache_misses, oracle.misses);
        CHECK_EQ(c.cache_evictions, oracle.evictions);
        CHECK_EQ(c.stored_keys, oracle.persisted.size());
    }
}

TEST_CASE("no duplicate nonce across 100000 re-encryptions under one key") {
    testing::TempDir dir;
    std::mt19937_64 rng(12);
    auto core = make_core(dir, 2);
    auto key = random_key(rng);
    provision(*core, "p01", key);

    auto env = crypto::seal_envelope(key, "p01", to_bytes("n"));
    std::set<std::array<uint8_t, 12>> seen;
    seen.insert(env.nonce);
    for (int i = 0; i < 100000; ++i) {
        auto res = core->reencrypt("p01", "p01", env);
        REQUIRE_EQ(res.status, CoreStatus::Ok);
        bool fresh = seen.insert(res.envelope.nonce).second;
        if (!fresh) REQUIRE(fresh);
    }
}

TEST_CASE("public interface confines key material") {
    // surface inspection: the public section of the trusted-core header must
    // expose only the approved operations, none of which return key bytes
    std::ifstream in(std::string(MQTTZ_SOURCE_DIR) + "/include/mqttz/tee/trusted_core.hpp");
    REQUIRE(in.good());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    auto pub = text.find("public:");
    auto priv = text.find("private:");
    REQUIRE_NE(pub, std::string::npos);
    REQUIRE_NE(priv, std::string::npos);
    std::string public_section = text.substr(pub, priv - pub);

    for (const char* allowed :
         {"init(", "public_identity(", "provision_key(", "reencrypt(", "export_counters(",
          "~TrustedCore(", "TrustedCore(const TrustedCore&)"}) {
        CHECK_MESSAGE(public_section.find(allowed) != std::string::npos, allowed);
    }
    // nothing in the public surface names key material or plaintext
    CHECK_EQ(public_section.find("Key256"), std::string::npos);
    CHECK_EQ(public_section.find("KeyCache"), std::string::npos);
    CHECK_EQ(public_section.find("SecureStore"), std::string::npos);
    CHECK_EQ(public_section.find("plaintext"), std::string::npos);

    // no public member function beyond the allowlist: every non-comment
    // declaration line mentioning '(' must match an approved operation
    std::istringstream lines(public_section);
    std::string line;
    while (std::getline(lines, line)) {
        auto comment = line.find("//");
        if (comment != std::string::npos) line.resize(comment);
        if (line.find('(') == std::string::npos) continue;
        bool approved = false;
        for (const char* allowed :
             {"init(", "public_identity(", "provision_key(", "reencrypt(", "export_counters(",
              "~TrustedCore(", "TrustedCore(const TrustedCore&)", "operator=("})
            if (line.find(allowed) != std::string::npos) approved = true;
        CHECK_MESSAGE(approved, line);
    }
}
