#ifndef TDM_SHA256_HPP
#define TDM_SHA256_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tdm {

using Digest = std::array<uint8_t, 32>;

Digest sha256(std::span<const uint8_t> data);
Digest sha256(const std::string& data);

std::string hex(const Digest& d);
Digest unhex_digest(const std::string& text);

// 64-bit seed derivation: first 8 bytes (big-endian) of
// sha256(seed_be8 || index_be8).
uint64_t derive_seed(uint64_t master_seed, uint64_t index);

} // namespace tdm

#endif
