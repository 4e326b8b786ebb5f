#include "tdm/canonical.hpp"

namespace tdm {

std::string canonical_dump(const Json& j) { return j.dump(); }

std::string bytes_to_hex(const Bytes& b) {
    static const char* k = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (uint8_t c : b) {
        out.push_back(k[c >> 4]);
        out.push_back(k[c & 0xf]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw DomainError(DomainError::Code::ConfigInvalid, "bad hex digit");
}

Bytes hex_to_bytes(const std::string& text) {
    if (text.size() % 2)
        throw DomainError(DomainError::Code::ConfigInvalid, "odd hex length");
    Bytes out(text.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>(hex_nibble(text[2 * i]) << 4 | hex_nibble(text[2 * i + 1]));
    return out;
}

Json params_to_json(const Params& p) {
    Json j;
    j["candidate_deposit"] = p.candidate_deposit.str();
    j["candidate_vote_period"] = p.candidate_vote_period;
    j["candidate_reward"] = p.candidate_reward.str();
    j["candidate_quorum"] = basis_points_str(p.candidate_quorum);
    j["reward_stake_period"] = p.reward_stake_period;
    j["challenge_deposit"] = p.challenge_deposit.str();
    j["challenge_vote_period"] = p.challenge_vote_period;
    j["challenge_reward"] = p.challenge_reward.str();
    j["challenge_quorum"] = basis_points_str(p.challenge_quorum);
    j["fork_deposit"] = p.fork_deposit.str();
    j["fork_vote_period"] = p.fork_vote_period;
    j["fork_threshold"] = basis_points_str(p.fork_threshold);
    j["query_stake"] = p.query_stake.str();
    j["offchain"] = p.offchain;
    j["membership_price"] = p.membership_price.str();
    j["dedup_enabled"] = p.dedup_enabled;
    j["seizure_to_challenger"] = p.seizure_to_challenger;
    j["forfeit_rejected_deposit"] = p.forfeit_rejected_deposit;
    j["steady_state_membership"] = p.steady_state_membership;
    return j;
}

Params params_from_json(const Json& j) {
    Params p;
    if (j.contains("candidate_deposit")) p.candidate_deposit = Tokens::parse(j.at("candidate_deposit"));
    if (j.contains("candidate_vote_period")) p.candidate_vote_period = j.at("candidate_vote_period").get<Tick>();
    if (j.contains("candidate_reward")) p.candidate_reward = Tokens::parse(j.at("candidate_reward"));
    if (j.contains("candidate_quorum")) p.candidate_quorum = parse_basis_points(j.at("candidate_quorum"));
    if (j.contains("reward_stake_period")) p.reward_stake_period = j.at("reward_stake_period").get<Tick>();
    if (j.contains("challenge_deposit")) p.challenge_deposit = Tokens::parse(j.at("challenge_deposit"));
    if (j.contains("challenge_vote_period")) p.challenge_vote_period = j.at("challenge_vote_period").get<Tick>();
    if (j.contains("challenge_reward")) p.challenge_reward = Tokens::parse(j.at("challenge_reward"));
    if (j.contains("challenge_quorum")) p.challenge_quorum = parse_basis_points(j.at("challenge_quorum"));
    if (j.contains("fork_deposit")) p.fork_deposit = Tokens::parse(j.at("fork_deposit"));
    if (j.contains("fork_vote_period")) p.fork_vote_period = j.at("fork_vote_period").get<Tick>();
    if (j.contains("fork_threshold")) p.fork_threshold = parse_basis_points(j.at("fork_threshold"));
    if (j.contains("query_stake")) p.query_stake = Tokens::parse(j.at("query_stake"));
    if (j.contains("offchain")) p.offchain = j.at("offchain").get<bool>();
    if (j.contains("membership_price")) p.membership_price = Money::parse(j.at("membership_price"));
    if (j.contains("dedup_enabled")) p.dedup_enabled = j.at("dedup_enabled").get<bool>();
    if (j.contains("seizure_to_challenger")) p.seizure_to_challenger = j.at("seizure_to_challenger").get<bool>();
    if (j.contains("forfeit_rejected_deposit")) p.forfeit_rejected_deposit = j.at("forfeit_rejected_deposit").get<bool>();
    if (j.contains("steady_state_membership")) p.steady_state_membership = j.at("steady_state_membership").get<bool>();
    p.validate();
    return p;
}

static const char* purpose_name(BondPurpose p) {
    switch (p) {
        case BondPurpose::CandidateDeposit: return "candidate_deposit";
        case BondPurpose::CandidateReward: return "candidate_reward";
        case BondPurpose::ChallengeDeposit: return "challenge_deposit";
        case BondPurpose::ForkDeposit: return "fork_deposit";
        case BondPurpose::QueryStake: return "query_stake";
    }
    return "?";
}

static BondPurpose purpose_from(const std::string& s) {
    if (s == "candidate_deposit") return BondPurpose::CandidateDeposit;
    if (s == "candidate_reward") return BondPurpose::CandidateReward;
    if (s == "challenge_deposit") return BondPurpose::ChallengeDeposit;
    if (s == "fork_deposit") return BondPurpose::ForkDeposit;
    if (s == "query_stake") return BondPurpose::QueryStake;
    throw DomainError(DomainError::Code::ConfigInvalid, "unknown bond purpose " + s);
}

static const char* bond_state_name(BondState s) {
    switch (s) {
        case BondState::Active: return "active";
        case BondState::Released: return "released";
        case BondState::Seized: return "seized";
    }
    return "?";
}

static BondState bond_state_from(const std::string& s) {
    if (s == "active") return BondState::Active;
    if (s == "released") return BondState::Released;
    if (s == "seized") return BondState::Seized;
    throw DomainError(DomainError::Code::ConfigInvalid, "unknown bond state " + s);
}

Json economy_to_json(const TokenEconomy& e) {
    Json j;
    j["token_id"] = e.token_id();
    j["issuance"] = e.issuance() == Issuance::Mining ? "mining" : "predetermined";
    j["total_supply"] = e.total_supply().str();
    Json holdings = Json::object();
    for (const auto& [agent, amount] : e.holdings()) holdings[agent] = amount.str();
    j["holdings"] = holdings;
    Json bonds = Json::array();
    for (const auto& b : e.bonds()) {
        Json bj;
        bj["id"] = b.id;
        bj["owner"] = b.owner;
        bj["amount"] = b.amount.str();
        bj["purpose"] = purpose_name(b.purpose);
        bj["release_tick"] = b.release_tick;
        bj["state"] = bond_state_name(b.state);
        bonds.push_back(bj);
    }
    j["bonds"] = bonds;
    return j;
}

TokenEconomy economy_from_json(const Json& j) {
    Issuance iss = j.at("issuance") == "mining" ? Issuance::Mining : Issuance::Predetermined;
    std::map<AgentId, Tokens> holdings;
    for (const auto& [agent, amount] : j.at("holdings").items())
        holdings[agent] = Tokens::parse(amount.get<std::string>());
    std::vector<BondRecord> bonds;
    for (const auto& bj : j.at("bonds")) {
        BondRecord b;
        b.id = bj.at("id").get<BondId>();
        b.owner = bj.at("owner");
        b.amount = Tokens::parse(bj.at("amount"));
        b.purpose = purpose_from(bj.at("purpose"));
        b.release_tick = bj.at("release_tick").get<Tick>();
        b.state = bond_state_from(bj.at("state"));
        bonds.push_back(b);
    }
    return TokenEconomy::restore(j.at("token_id").get<std::string>(), iss,
                                 Tokens::parse(j.at("total_supply")), std::move(holdings),
                                 std::move(bonds));
}

static Json element_to_json(const Element& e) {
    Json j;
    j["id"] = e.id;
    if (e.is_leaf) {
        j["kind"] = "leaf";
        j["visibility"] = e.visibility == Visibility::Public ? "public" : "private";
        if (e.data.kind == DataRef::Kind::Inline) {
            j["storage"] = "inline";
            j["payload"] = bytes_to_hex(e.data.payload);
        } else {
            j["storage"] = "offchain";
            j["owner"] = e.data.owner;
        }
        j["content_hash"] = hex(e.data.content_hash);
    } else {
        j["kind"] = "nested";
        j["child"] = structure_to_json(*e.child);
    }
    return j;
}

static Element element_from_json(const Json& j) {
    Element e;
    e.id = j.at("id");
    if (j.at("kind") == "leaf") {
        e.is_leaf = true;
        e.visibility = j.at("visibility") == "public" ? Visibility::Public : Visibility::Private;
        if (j.at("storage") == "inline") {
            e.data.kind = DataRef::Kind::Inline;
            e.data.payload = hex_to_bytes(j.at("payload"));
        } else {
            e.data.kind = DataRef::Kind::Offchain;
            e.data.owner = j.at("owner");
        }
        e.data.content_hash = unhex_digest(j.at("content_hash"));
    } else {
        e.is_leaf = false;
        e.child = std::make_unique<TokenizedDataStructure>(structure_from_json(j.at("child")));
    }
    return e;
}

static ElementState state_from(const std::string& s) {
    if (s == "candidate") return ElementState::Candidate;
    if (s == "quasi_finalized") return ElementState::QuasiFinalized;
    if (s == "challenged") return ElementState::Challenged;
    if (s == "removed") return ElementState::Removed;
    throw DomainError(DomainError::Code::ConfigInvalid, "unknown element state " + s);
}

Json structure_to_json(const TokenizedDataStructure& td) {
    Json j;
    Json elems = Json::array();
    for (const auto& e : td.elements()) elems.push_back(element_to_json(e));
    j["elements"] = elems;
    if (td.has_economy())
        j["economy"] = economy_to_json(td.economy());
    else
        j["economy"] = nullptr;
    Json meta = Json::object();
    for (const auto& [id, m] : td.metadata()) {
        Json mj;
        mj["state"] = element_state_name(m.state);
        mj["proposer"] = m.proposer;
        mj["reward_bond"] = m.reward_bond ? Json(*m.reward_bond) : Json(nullptr);
        mj["added_tick"] = m.added_tick;
        meta[id] = mj;
    }
    j["metadata"] = meta;
    j["params"] = params_to_json(td.params());
    return j;
}

TokenizedDataStructure structure_from_json(const Json& j) {
    std::vector<Element> elements;
    for (const auto& ej : j.at("elements")) elements.push_back(element_from_json(ej));
    std::optional<TokenEconomy> economy;
    if (!j.at("economy").is_null()) economy = economy_from_json(j.at("economy"));
    std::map<ElementId, ElementMetadata> metadata;
    for (const auto& [id, mj] : j.at("metadata").items()) {
        ElementMetadata m;
        m.state = state_from(mj.at("state"));
        m.proposer = mj.at("proposer");
        if (!mj.at("reward_bond").is_null()) m.reward_bond = mj.at("reward_bond").get<BondId>();
        m.added_tick = mj.at("added_tick").get<Tick>();
        metadata[id] = m;
    }
    return TokenizedDataStructure::assemble(std::move(elements), std::move(economy),
                                            std::move(metadata), params_from_json(j.at("params")));
}

std::string snapshot_digest(const TokenizedDataStructure& td) {
    return hex(sha256(canonical_dump(structure_to_json(td))));
}

} // namespace tdm
