#ifndef TDM_OFFCHAIN_HPP
#define TDM_OFFCHAIN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tdm/money.hpp"
#include "tdm/sha256.hpp"

namespace tdm {

using Bytes = std::vector<uint8_t>;
using Nonce = std::array<uint8_t, 32>;

struct LivenessProof {
    std::string element_id;
    Nonce nonce{};
    Digest response{};
};

// Seeded per-epoch blob-drop model. An epoch is 24 ticks; at each epoch
// boundary every held blob is dropped independently with
// drop_probability.
struct FaultModel {
    double drop_probability = 0.0;
    uint64_t rng_seed = 0;
};

// Content-addressed blob store standing in for off-chain storage.
// Blobs are keyed by SHA-256 of their payload; a lookup returns the
// exact payload or nothing.
class ContentStore {
public:
    ContentStore() = default;
    explicit ContentStore(FaultModel fault) : fault_(fault) {}

    Digest put(const Bytes& payload);
    std::optional<Bytes> get(const Digest& digest) const;
    bool contains(const Digest& digest) const { return blobs_.count(digest) > 0; }
    size_t size() const { return blobs_.size(); }

    // Advance the fault clock; applies the drop model at each crossed
    // 24-tick epoch boundary. Deterministic for a fixed seed.
    void advance_to_tick(Tick tick);

    std::optional<LivenessProof> prove(const std::string& element_id, const Digest& digest,
                                       const Nonce& nonce) const;

    // Directory persistence: one file per blob named by hex digest.
    void save_dir(const std::string& dir) const;
    void load_dir(const std::string& dir);

private:
    std::map<Digest, Bytes> blobs_;
    FaultModel fault_;
    Tick fault_tick_ = 0;
    uint64_t rng_state_ = 0;
    bool rng_init_ = false;
};

// Response digest for a liveness probe: sha256(payload || nonce).
Digest liveness_response(const Bytes& payload, const Nonce& nonce);

// Trusted-oracle check: recompute from the known-good payload.
bool verify_proof(const Bytes& known_good_payload, const LivenessProof& proof);

} // namespace tdm

#endif
