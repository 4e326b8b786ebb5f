#include "tdm/ledger.hpp"

#include <algorithm>

namespace tdm {

Tokens TokenEconomy::holdings_of(const AgentId& agent) const {
    auto it = holdings_.find(agent);
    return it == holdings_.end() ? Tokens{} : it->second;
}

Tokens TokenEconomy::bonded_of(const AgentId& agent) const {
    Tokens total;
    for (const auto& b : bonds_)
        if (b.state == BondState::Active && b.owner == agent) total += b.amount;
    return total;
}

void TokenEconomy::allocate(const AgentId& agent, Tokens amount) {
    if (amount.is_zero()) return;
    holdings_[agent] += amount;
    total_supply_ += amount;
}

void TokenEconomy::mint(const AgentId& agent, Tokens amount) {
    if (issuance_ != Issuance::Mining)
        throw DomainError(DomainError::Code::IssuanceForbidden,
                          "predetermined issuance: supply is fixed");
    if (amount.is_zero())
        throw DomainError(DomainError::Code::NegativeAmount, "mint amount must be positive");
    holdings_[agent] += amount;
    total_supply_ += amount;
}

BondRecord& TokenEconomy::bond_mut(BondId id) {
    for (auto& b : bonds_)
        if (b.id == id) return b;
    throw DomainError(DomainError::Code::BondNotActive, "unknown bond id");
}

const BondRecord& TokenEconomy::bond(BondId id) const {
    return const_cast<TokenEconomy*>(this)->bond_mut(id);
}

void TokenEconomy::burn_bond(BondId id) {
    auto& b = bond_mut(id);
    if (b.state != BondState::Active)
        throw DomainError(DomainError::Code::BondNotActive, "bond not active");
    b.state = BondState::Seized;
    total_supply_ -= b.amount;
}

BondId TokenEconomy::bond_stake(const AgentId& agent, Tokens amount, BondPurpose purpose,
                                Tick release_tick) {
    Tokens held = holdings_of(agent);
    if (held < amount)
        throw DomainError(DomainError::Code::InsufficientTokens,
                          "agent " + agent + " holds " + held.str() + ", needs " + amount.str());
    if (!amount.is_zero()) holdings_[agent] -= amount;
    BondRecord rec{next_bond_id_++, agent, amount, purpose, release_tick, BondState::Active};
    bonds_.push_back(rec);
    return rec.id;
}

void TokenEconomy::release_bond(BondId id, Tick current_tick) {
    auto& b = bond_mut(id);
    if (b.state != BondState::Active)
        throw DomainError(DomainError::Code::BondNotActive, "bond not active");
    if (current_tick < b.release_tick)
        throw DomainError(DomainError::Code::BondStillLocked, "bond locked until tick " +
                                                                  std::to_string(b.release_tick));
    b.state = BondState::Released;
    holdings_[b.owner] += b.amount;
}

void TokenEconomy::seize_bond(BondId id, const AgentId& recipient) {
    auto& b = bond_mut(id);
    if (b.state != BondState::Active)
        throw DomainError(DomainError::Code::BondNotActive, "bond not active");
    b.state = BondState::Seized;
    if (recipient.empty())
        total_supply_ -= b.amount;
    else
        holdings_[recipient] += b.amount;
}

namespace {
struct Share {
    AgentId agent;
    uint64_t floor_part;
    unsigned __int128 remainder;
};
} // namespace

std::map<AgentId, Money> TokenEconomy::distribute_pro_rata(Money payment) const {
    unsigned __int128 total = 0;
    for (const auto& [agent, amount] : holdings_)
        total += amount.micro();
    if (total == 0)
        throw DomainError(DomainError::Code::EmptyEconomy, "no token holder present");
    if (payment.micro() < 0)
        throw DomainError(DomainError::Code::NegativeAmount, "negative payment");

    std::vector<Share> shares;
    shares.reserve(holdings_.size());
    unsigned __int128 pay = static_cast<unsigned __int128>(payment.micro());
    uint64_t assigned = 0;
    for (const auto& [agent, amount] : holdings_) {
        unsigned __int128 num = pay * amount.micro();
        uint64_t fl = static_cast<uint64_t>(num / total);
        shares.push_back({agent, fl, num % total});
        assigned += fl;
    }
    uint64_t leftover = static_cast<uint64_t>(payment.micro()) - assigned;
    // Largest remainder first; holdings_ iterates in ascending agent id,
    // stable_sort keeps that order for ties.
    std::stable_sort(shares.begin(), shares.end(),
                     [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
    for (uint64_t i = 0; i < leftover; ++i) shares[i].floor_part += 1;

    std::map<AgentId, Money> out;
    for (const auto& s : shares)
        out[s.agent] = Money::from_micro(static_cast<int64_t>(s.floor_part));
    return out;
}

void TokenEconomy::transfer_pro_rata(const AgentId& buyer, Tokens amount) {
    unsigned __int128 total = 0;
    for (const auto& [agent, held] : holdings_)
        total += held.micro();
    if (total == 0)
        throw DomainError(DomainError::Code::EmptyEconomy, "no token holder present");
    if (static_cast<unsigned __int128>(amount.micro()) > total)
        throw DomainError(DomainError::Code::InsufficientTokens,
                          "not enough circulating tokens to transfer");

    std::vector<Share> shares;
    uint64_t assigned = 0;
    for (const auto& [agent, held] : holdings_) {
        unsigned __int128 num = static_cast<unsigned __int128>(amount.micro()) * held.micro();
        uint64_t fl = static_cast<uint64_t>(num / total);
        shares.push_back({agent, fl, num % total});
        assigned += fl;
    }
    uint64_t leftover = amount.micro() - assigned;
    std::stable_sort(shares.begin(), shares.end(),
                     [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
    for (uint64_t i = 0; i < leftover; ++i) shares[i].floor_part += 1;
    for (const auto& s : shares) {
        Tokens take = Tokens::from_micro(s.floor_part);
        if (holdings_[s.agent] < take)
            throw DomainError(DomainError::Code::InsufficientTokens,
                              "pro-rata transfer exceeds a holder balance");
        holdings_[s.agent] -= take;
    }
    holdings_[buyer] += amount;
}

Money TokenEconomy::economy_size(Money unit_value) const {
    __int128 product = static_cast<__int128>(unit_value.micro()) *
                       static_cast<__int128>(total_supply_.micro());
    return Money::from_micro(static_cast<int64_t>(product / kMicro));
}

TokenEconomy TokenEconomy::restore(std::string token_id, Issuance issuance, Tokens total_supply,
                                   std::map<AgentId, Tokens> holdings,
                                   std::vector<BondRecord> bonds) {
    TokenEconomy e(std::move(token_id), issuance);
    e.total_supply_ = total_supply;
    e.holdings_ = std::move(holdings);
    e.bonds_ = std::move(bonds);
    for (const auto& b : e.bonds_)
        e.next_bond_id_ = std::max(e.next_bond_id_, b.id + 1);
    if (!e.conserved())
        throw DomainError(DomainError::Code::ConfigInvalid,
                          "restored economy fails conservation");
    return e;
}

bool TokenEconomy::conserved() const {
    unsigned __int128 sum = 0;
    for (const auto& [agent, amount] : holdings_)
        sum += amount.micro();
    for (const auto& b : bonds_)
        if (b.state == BondState::Active) sum += b.amount.micro();
    return sum == total_supply_.micro();
}

} // namespace tdm
