#include "tdm/offchain.hpp"

#include <filesystem>
#include <fstream>

namespace tdm {

namespace {
constexpr Tick kEpochTicks = 24;

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit_double(uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}
} // namespace

Digest ContentStore::put(const Bytes& payload) {
    if (payload.empty())
        throw DomainError(DomainError::Code::EmptyPayload, "cannot store empty payload");
    Digest d = sha256(std::span<const uint8_t>(payload.data(), payload.size()));
    blobs_[d] = payload;
    return d;
}

std::optional<Bytes> ContentStore::get(const Digest& digest) const {
    auto it = blobs_.find(digest);
    if (it == blobs_.end()) return std::nullopt;
    return it->second;
}

void ContentStore::advance_to_tick(Tick tick) {
    if (fault_.drop_probability <= 0.0) {
        fault_tick_ = std::max(fault_tick_, tick);
        return;
    }
    if (!rng_init_) {
        rng_state_ = fault_.rng_seed;
        rng_init_ = true;
    }
    while ((fault_tick_ / kEpochTicks) < (tick / kEpochTicks)) {
        fault_tick_ = (fault_tick_ / kEpochTicks + 1) * kEpochTicks;
        for (auto it = blobs_.begin(); it != blobs_.end();) {
            if (unit_double(rng_state_) < fault_.drop_probability)
                it = blobs_.erase(it);
            else
                ++it;
        }
    }
    fault_tick_ = std::max(fault_tick_, tick);
}

Digest liveness_response(const Bytes& payload, const Nonce& nonce) {
    Bytes buf;
    buf.reserve(payload.size() + nonce.size());
    buf.insert(buf.end(), payload.begin(), payload.end());
    buf.insert(buf.end(), nonce.begin(), nonce.end());
    return sha256(std::span<const uint8_t>(buf.data(), buf.size()));
}

std::optional<LivenessProof> ContentStore::prove(const std::string& element_id,
                                                 const Digest& digest,
                                                 const Nonce& nonce) const {
    auto payload = get(digest);
    if (!payload) return std::nullopt;
    return LivenessProof{element_id, nonce, liveness_response(*payload, nonce)};
}

bool verify_proof(const Bytes& known_good_payload, const LivenessProof& proof) {
    return liveness_response(known_good_payload, proof.nonce) == proof.response;
}

void ContentStore::save_dir(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [digest, payload] : blobs_) {
        std::ofstream out(std::filesystem::path(dir) / hex(digest), std::ios::binary);
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size()));
    }
}

void ContentStore::load_dir(const std::string& dir) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        Bytes payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (payload.empty()) continue;
        Digest d = sha256(std::span<const uint8_t>(payload.data(), payload.size()));
        if (hex(d) != entry.path().filename().string()) continue; // corrupted file, skip
        blobs_[d] = std::move(payload);
    }
}

} // namespace tdm
