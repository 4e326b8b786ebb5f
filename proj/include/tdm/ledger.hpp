#ifndef TDM_LEDGER_HPP
#define TDM_LEDGER_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tdm/money.hpp"

namespace tdm {

using AgentId = std::string;
using BondId = uint64_t;

enum class Issuance { Predetermined, Mining };
enum class BondPurpose { CandidateDeposit, CandidateReward, ChallengeDeposit, ForkDeposit, QueryStake };
enum class BondState { Active, Released, Seized };

struct BondRecord {
    BondId id = 0;
    AgentId owner;
    Tokens amount;
    BondPurpose purpose = BondPurpose::CandidateDeposit;
    Tick release_tick = 0;
    BondState state = BondState::Active;
};

// Token accounting for one structure's economy. Single-writer; all
// mutations are sequential. Conservation invariant:
//   total_supply == sum(holdings) + sum(active bond amounts).
class TokenEconomy {
public:
    TokenEconomy() = default;
    TokenEconomy(std::string token_id, Issuance issuance) : token_id_(std::move(token_id)), issuance_(issuance) {}

    const std::string& token_id() const { return token_id_; }
    Issuance issuance() const { return issuance_; }
    Tokens total_supply() const { return total_supply_; }
    const std::map<AgentId, Tokens>& holdings() const { return holdings_; }
    const std::vector<BondRecord>& bonds() const { return bonds_; }

    Tokens holdings_of(const AgentId& agent) const;
    // Unbonded holdings; bonded stake is tracked separately in bonds_.
    Tokens unbonded(const AgentId& agent) const { return holdings_of(agent); }
    Tokens bonded_of(const AgentId& agent) const;

    // Initial allocation (construction only; bypasses issuance rules).
    void allocate(const AgentId& agent, Tokens amount);

    void mint(const AgentId& agent, Tokens amount);
    void burn_bond(BondId bond);
    BondId bond_stake(const AgentId& agent, Tokens amount, BondPurpose purpose, Tick release_tick);
    void release_bond(BondId bond, Tick current_tick);
    // Seize a bond's tokens: burned when recipient is empty, otherwise
    // transferred to recipient's holdings.
    void seize_bond(BondId bond, const AgentId& recipient = {});

    const BondRecord& bond(BondId id) const;

    // Exact pro-rata split of `payment` by holdings, largest-remainder
    // rounding, ties broken by ascending agent id. Sum of shares ==
    // payment exactly.
    std::map<AgentId, Money> distribute_pro_rata(Money payment) const;

    // Transfer `amount` tokens to `buyer`, taken pro-rata (largest
    // remainder over holdings) from existing holders.
    void transfer_pro_rata(const AgentId& buyer, Tokens amount);

    Money economy_size(Money unit_value) const;

    bool conserved() const;

    // Exact state restore (snapshot deserialization). Verifies the
    // conservation invariant against the declared supply.
    static TokenEconomy restore(std::string token_id, Issuance issuance, Tokens total_supply,
                                std::map<AgentId, Tokens> holdings,
                                std::vector<BondRecord> bonds);

private:
    BondRecord& bond_mut(BondId id);

    std::string token_id_;
    Issuance issuance_ = Issuance::Predetermined;
    Tokens total_supply_;
    std::map<AgentId, Tokens> holdings_;
    std::vector<BondRecord> bonds_;
    BondId next_bond_id_ = 1;
};

} // namespace tdm

#endif
