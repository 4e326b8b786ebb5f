#include "tdm/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace tdm {

Digest sha256(std::span<const uint8_t> data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size())
        throw std::runtime_error("sha256 failed");
    return out;
}

Digest sha256(const std::string& data) {
    return sha256(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

std::string hex(const Digest& d) {
    static const char* k = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (uint8_t b : d) {
        out.push_back(k[b >> 4]);
        out.push_back(k[b & 0xf]);
    }
    return out;
}

static int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::runtime_error("bad hex digit");
}

Digest unhex_digest(const std::string& text) {
    if (text.size() != 64)
        throw std::runtime_error("digest hex must be 64 chars");
    Digest d{};
    for (size_t i = 0; i < 32; ++i)
        d[i] = static_cast<uint8_t>(nibble(text[2 * i]) << 4 | nibble(text[2 * i + 1]));
    return d;
}

uint64_t derive_seed(uint64_t master_seed, uint64_t index) {
    std::array<uint8_t, 16> buf{};
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<uint8_t>(master_seed >> (56 - 8 * i));
        buf[8 + i] = static_cast<uint8_t>(index >> (56 - 8 * i));
    }
    Digest d = sha256(std::span<const uint8_t>(buf.data(), buf.size()));
    uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out = out << 8 | d[i];
    return out;
}

} // namespace tdm
