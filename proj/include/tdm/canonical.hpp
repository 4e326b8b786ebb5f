#ifndef TDM_CANONICAL_HPP
#define TDM_CANONICAL_HPP

#include <json.hpp>

#include "tdm/structure.hpp"

namespace tdm {

// Canonical JSON: UTF-8, object keys sorted (nlohmann::json's default
// std::map backing), fixed-point amounts rendered as 6-digit strings.
using Json = nlohmann::json;

std::string canonical_dump(const Json& j);

Json params_to_json(const Params& p);
Params params_from_json(const Json& j);

Json economy_to_json(const TokenEconomy& e);
TokenEconomy economy_from_json(const Json& j);

Json structure_to_json(const TokenizedDataStructure& td);
TokenizedDataStructure structure_from_json(const Json& j);

// SHA-256 of the canonical structure snapshot, hex encoded.
std::string snapshot_digest(const TokenizedDataStructure& td);

std::string bytes_to_hex(const Bytes& b);
Bytes hex_to_bytes(const std::string& text);

} // namespace tdm

#endif
