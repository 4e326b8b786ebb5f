#include "tdm/structure.hpp"

#include <algorithm>

namespace tdm {

void Params::validate() const {
    auto check_fraction = [](BasisPoints bp, const char* name) {
        if (bp <= 0 || bp > kBpOne)
            throw DomainError(DomainError::Code::InvalidParams,
                              std::string(name) + " must be in (0, 1]");
    };
    check_fraction(candidate_quorum, "candidate_quorum");
    check_fraction(challenge_quorum, "challenge_quorum");
    check_fraction(fork_threshold, "fork_threshold");
    auto check_period = [](Tick t, const char* name) {
        if (t < 1)
            throw DomainError(DomainError::Code::InvalidParams,
                              std::string(name) + " must be >= 1 tick");
    };
    check_period(candidate_vote_period, "candidate_vote_period");
    check_period(challenge_vote_period, "challenge_vote_period");
    check_period(fork_vote_period, "fork_vote_period");
    if (reward_stake_period < 0)
        throw DomainError(DomainError::Code::InvalidParams, "reward_stake_period must be >= 0");
    if (membership_price < Money{})
        throw DomainError(DomainError::Code::InvalidParams, "membership_price must be >= 0");
}

const char* element_state_name(ElementState s) {
    switch (s) {
        case ElementState::Candidate: return "candidate";
        case ElementState::QuasiFinalized: return "quasi_finalized";
        case ElementState::Challenged: return "challenged";
        case ElementState::Removed: return "removed";
    }
    return "?";
}

bool legal_transition(ElementState from, ElementState to) {
    if (from == ElementState::Candidate)
        return to == ElementState::QuasiFinalized || to == ElementState::Removed;
    if (from == ElementState::QuasiFinalized) return to == ElementState::Challenged;
    return false; // Challenged and Removed are terminal
}

Element Element::clone() const {
    Element out;
    out.id = id;
    out.is_leaf = is_leaf;
    out.data = data;
    out.visibility = visibility;
    if (child) out.child = std::make_unique<TokenizedDataStructure>(child->clone());
    return out;
}

TokenizedDataStructure TokenizedDataStructure::create(
    Params params, const std::map<AgentId, Tokens>& initial_allocation,
    std::optional<Issuance> issuance) {
    params.validate();
    TokenizedDataStructure td;
    td.params_ = params;
    if (issuance) {
        if (initial_allocation.empty() && *issuance == Issuance::Predetermined)
            throw DomainError(DomainError::Code::InvalidParams,
                              "predetermined economy needs a non-empty allocation");
        td.economy_.emplace("T", *issuance);
        for (const auto& [agent, amount] : initial_allocation)
            td.economy_->allocate(agent, amount);
    } else if (!initial_allocation.empty()) {
        throw DomainError(DomainError::Code::InvalidParams,
                          "allocation given but no economy declared");
    }
    return td;
}

const TokenEconomy& TokenizedDataStructure::economy() const {
    if (!economy_)
        throw DomainError(DomainError::Code::NoEconomy, "structure has no token economy");
    return *economy_;
}

TokenEconomy& TokenizedDataStructure::economy_mut() {
    if (!economy_)
        throw DomainError(DomainError::Code::NoEconomy, "structure has no token economy");
    return *economy_;
}

const Element* TokenizedDataStructure::find_element(const ElementId& id) const {
    for (const auto& e : elements_)
        if (e.id == id) return &e;
    return nullptr;
}

const ElementMetadata& TokenizedDataStructure::metadata_of(const ElementId& id) const {
    auto it = metadata_.find(id);
    if (it == metadata_.end())
        throw DomainError(DomainError::Code::UnknownElement, "unknown element " + id);
    return it->second;
}

void TokenizedDataStructure::add_element(Element element, AgentId proposer, Tick now) {
    if (metadata_.count(element.id))
        throw DomainError(DomainError::Code::InvalidParams, "duplicate element id " + element.id);
    if (element.is_leaf && element.data.kind == DataRef::Kind::Offchain && !params_.offchain)
        throw DomainError(DomainError::Code::OffchainDisabled,
                          "offchain leaves disabled by params");
    metadata_[element.id] =
        ElementMetadata{ElementState::Candidate, std::move(proposer), std::nullopt, now};
    elements_.push_back(std::move(element));
}

void TokenizedDataStructure::set_state(const ElementId& id, ElementState to) {
    auto it = metadata_.find(id);
    if (it == metadata_.end())
        throw DomainError(DomainError::Code::UnknownElement, "unknown element " + id);
    if (!legal_transition(it->second.state, to))
        throw DomainError(DomainError::Code::InvalidParams,
                          std::string("illegal transition ") +
                              element_state_name(it->second.state) + " -> " +
                              element_state_name(to));
    it->second.state = to;
}

void TokenizedDataStructure::set_reward_bond(const ElementId& id, std::optional<BondId> bond) {
    auto it = metadata_.find(id);
    if (it == metadata_.end())
        throw DomainError(DomainError::Code::UnknownElement, "unknown element " + id);
    it->second.reward_bond = bond;
}

int TokenizedDataStructure::depth() const {
    int max_child = 0;
    for (const auto& e : elements_)
        if (!e.is_leaf && e.child) max_child = std::max(max_child, e.child->depth());
    return 1 + max_child;
}

std::vector<ElementId> TokenizedDataStructure::live_elements() const {
    std::vector<ElementId> out;
    for (const auto& e : elements_)
        if (metadata_.at(e.id).state == ElementState::QuasiFinalized) out.push_back(e.id);
    return out;
}

bool TokenizedDataStructure::content_pending_or_live(const Digest& hash) const {
    for (const auto& e : elements_) {
        if (!e.is_leaf) continue;
        ElementState s = metadata_.at(e.id).state;
        if ((s == ElementState::Candidate || s == ElementState::QuasiFinalized) &&
            e.data.content_hash == hash)
            return true;
    }
    return false;
}

void TokenizedDataStructure::validate() const {
    if (metadata_.size() != elements_.size())
        throw DomainError(DomainError::Code::InvalidParams,
                          "metadata count does not match element count");
    std::map<ElementId, int> seen;
    for (const auto& e : elements_) {
        if (++seen[e.id] > 1)
            throw DomainError(DomainError::Code::InvalidParams, "duplicate element id " + e.id);
        if (!metadata_.count(e.id))
            throw DomainError(DomainError::Code::InvalidParams,
                              "element without metadata: " + e.id);
        if (e.is_leaf && e.data.kind == DataRef::Kind::Offchain && !params_.offchain)
            throw DomainError(DomainError::Code::OffchainDisabled,
                              "offchain leaf in on-chain-only structure");
        if (!e.is_leaf) {
            if (!e.child)
                throw DomainError(DomainError::Code::InvalidParams,
                                  "nested element without child structure");
            e.child->validate();
        }
    }
    if (economy_ && !economy_->conserved())
        throw DomainError(DomainError::Code::InvalidParams, "economy conservation violated");
    params_.validate();
}

TokenizedDataStructure TokenizedDataStructure::clone() const {
    TokenizedDataStructure out;
    out.economy_ = economy_;
    out.metadata_ = metadata_;
    out.params_ = params_;
    out.elements_.reserve(elements_.size());
    for (const auto& e : elements_) out.elements_.push_back(e.clone());
    return out;
}

TokenizedDataStructure TokenizedDataStructure::assemble(
    std::vector<Element> elements, std::optional<TokenEconomy> economy,
    std::map<ElementId, ElementMetadata> metadata, Params params) {
    TokenizedDataStructure out;
    out.elements_ = std::move(elements);
    out.economy_ = std::move(economy);
    out.metadata_ = std::move(metadata);
    out.params_ = params;
    return out;
}

} // namespace tdm
