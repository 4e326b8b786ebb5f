#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tdm/offchain.hpp"
#include "tdm/sim.hpp"

using namespace tdm;

// Independent SHA-256 oracle (straight FIPS 180-4 transcription), so the
// store's digests are checked against something other than the library
// they came from.
namespace oracle {

static const uint32_t K[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

static uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

Digest sha256(const std::vector<uint8_t>& data) {
    uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                     0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::vector<uint8_t> msg = data;
    uint64_t bitlen = static_cast<uint64_t>(msg.size()) * 8;
    msg.push_back(0x80);
    while (msg.size() % 64 != 56) msg.push_back(0);
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<uint8_t>(bitlen >> (8 * i)));
    for (size_t off = 0; off < msg.size(); off += 64) {
        uint32_t w[64];
        for (int t = 0; t < 16; ++t)
            w[t] = static_cast<uint32_t>(msg[off + 4 * t]) << 24 |
                   static_cast<uint32_t>(msg[off + 4 * t + 1]) << 16 |
                   static_cast<uint32_t>(msg[off + 4 * t + 2]) << 8 |
                   static_cast<uint32_t>(msg[off + 4 * t + 3]);
        for (int t = 16; t < 64; ++t) {
            uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6],
                 hh = h[7];
        for (int t = 0; t < 64; ++t) {
            uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = hh + S1 + ch + K[t] + w[t];
            uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = S0 + maj;
            hh = g; g = f; f = e; e = d + t1; d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }
    Digest out{};
    for (int i = 0; i < 8; ++i)
        for (int b = 0; b < 4; ++b) out[4 * i + b] = static_cast<uint8_t>(h[i] >> (24 - 8 * b));
    return out;
}

} // namespace oracle

static Bytes bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

TEST_CASE("sha256 matches the standard test vector and the oracle") {
    Digest d = sha256(std::string("abc"));
    CHECK(hex(d) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(d == oracle::sha256(bytes("abc")));
    CHECK(sha256(std::string("")) == oracle::sha256({}));
    CHECK(unhex_digest(hex(d)) == d);
}

TEST_CASE("put/get round trip and idempotence") {
    ContentStore store;
    Digest d1 = store.put(bytes("abc"));
    Digest d2 = store.put(bytes("abc"));
    CHECK(d1 == d2);
    CHECK(store.size() == 1);
    auto got = store.get(d1);
    REQUIRE(got.has_value());
    CHECK(*got == bytes("abc"));

    CHECK_THROWS_AS((void)store.put(Bytes{}), DomainError);
    CHECK_FALSE(store.get(sha256(std::string("missing"))).has_value());
}

TEST_CASE("fault model: certain drop after one epoch, deterministic replay") {
    FaultModel certain{1.0, 99};
    ContentStore store(certain);
    Digest d = store.put(bytes("ephemeral"));
    CHECK(store.get(d).has_value());
    store.advance_to_tick(24);
    CHECK_FALSE(store.get(d).has_value());

    // identical seed drops an identical blob set
    auto surviving = [](uint64_t seed) {
        ContentStore s(FaultModel{0.5, seed});
        std::vector<Digest> ds;
        for (int i = 0; i < 64; ++i) ds.push_back(s.put(bytes("blob" + std::to_string(i))));
        s.advance_to_tick(24 * 5);
        std::vector<bool> alive;
        for (const auto& dd : ds) alive.push_back(s.get(dd).has_value());
        return alive;
    };
    auto a = surviving(1234);
    CHECK(a == surviving(1234));
    CHECK(a != surviving(4321));
    size_t kept = static_cast<size_t>(std::count(a.begin(), a.end(), true));
    CHECK(kept < a.size());  // half-probability over five epochs loses some
}

TEST_CASE("prove and verify: response equals oracle digest") {
    ContentStore store;
    Bytes payload = bytes("the payload");
    Digest d = store.put(payload);
    Nonce nonce{};  // all zeros
    auto proof = store.prove("elt", d, nonce);
    REQUIRE(proof.has_value());
    Bytes concat = payload;
    concat.insert(concat.end(), nonce.begin(), nonce.end());
    CHECK(proof->response == oracle::sha256(concat));
    CHECK(verify_proof(payload, *proof));

    CHECK_FALSE(store.prove("elt", sha256(std::string("absent")), nonce).has_value());
}

TEST_CASE("proof soundness under fuzzing with bit corruptions") {
    tdm::sim::Rng rng(0xabcd);
    ContentStore store;
    for (int iter = 0; iter < 1000; ++iter) {
        size_t len = 1 + rng.below(64);
        Bytes payload(len);
        for (auto& b : payload) b = static_cast<uint8_t>(rng.below(256));
        Nonce nonce{};
        for (auto& b : nonce) b = static_cast<uint8_t>(rng.below(256));
        Digest d = store.put(payload);
        auto proof = store.prove("e", d, nonce);
        REQUIRE(proof.has_value());
        CHECK(verify_proof(payload, *proof));

        // flip one bit somewhere: response, nonce, or verifier's payload
        switch (rng.below(3)) {
            case 0: {
                LivenessProof bad = *proof;
                bad.response[rng.below(32)] ^= static_cast<uint8_t>(1 << rng.below(8));
                CHECK_FALSE(verify_proof(payload, bad));
                break;
            }
            case 1: {
                LivenessProof bad = *proof;
                bad.nonce[rng.below(32)] ^= static_cast<uint8_t>(1 << rng.below(8));
                CHECK_FALSE(verify_proof(payload, bad));
                break;
            }
            case 2: {
                Bytes tampered = payload;
                tampered[rng.below(tampered.size())] ^= static_cast<uint8_t>(1 << rng.below(8));
                CHECK_FALSE(verify_proof(tampered, *proof));
                break;
            }
        }
    }
}

TEST_CASE("directory persistence round trip") {
    ContentStore store;
    Digest d1 = store.put(bytes("first"));
    Digest d2 = store.put(bytes("second"));
    std::string dir = "offchain_store_test_dir";
    store.save_dir(dir);
    ContentStore loaded;
    loaded.load_dir(dir);
    CHECK(loaded.get(d1) == bytes("first"));
    CHECK(loaded.get(d2) == bytes("second"));
}
