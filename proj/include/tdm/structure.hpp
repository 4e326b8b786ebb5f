#ifndef TDM_STRUCTURE_HPP
#define TDM_STRUCTURE_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tdm/ledger.hpp"
#include "tdm/offchain.hpp"

namespace tdm {

using ElementId = std::string;

// Protocol parameters. Day-valued defaults convert at 1 tick = 1 hour.
struct Params {
    Tokens candidate_deposit;
    Tick candidate_vote_period = 72;  // 3 days
    Tokens candidate_reward = Tokens::from_display(1);
    BasisPoints candidate_quorum = 6667;
    Tick reward_stake_period = 720;  // 30 days
    Tokens challenge_deposit;
    Tick challenge_vote_period = 120;  // 5 days
    Tokens challenge_reward;
    BasisPoints challenge_quorum = 6667;
    Tokens fork_deposit;
    Tick fork_vote_period = 720;  // 30 days
    BasisPoints fork_threshold = 5000;
    Tokens query_stake;
    bool offchain = false;

    Money membership_price;
    bool dedup_enabled = true;
    bool seizure_to_challenger = false;
    bool forfeit_rejected_deposit = false;
    bool steady_state_membership = false;

    void validate() const;
};

enum class Visibility { Public, Private };
enum class ElementState { Candidate, QuasiFinalized, Challenged, Removed };

struct DataRef {
    enum class Kind { Inline, Offchain };
    Kind kind = Kind::Inline;
    Bytes payload;       // Inline only
    Digest content_hash{};  // both kinds (Inline: hash of payload)
    AgentId owner;       // Offchain only
};

struct ElementMetadata {
    ElementState state = ElementState::Candidate;
    AgentId proposer;
    std::optional<BondId> reward_bond;
    Tick added_tick = 0;
};

const char* element_state_name(ElementState s);
bool legal_transition(ElementState from, ElementState to);

class TokenizedDataStructure;

struct Element {
    ElementId id;
    bool is_leaf = true;
    // Leaf fields
    DataRef data;
    Visibility visibility = Visibility::Public;
    // Nested structure (is_leaf == false)
    std::unique_ptr<TokenizedDataStructure> child;

    Element clone() const;
};

// The recursive tuple ((e1..eN), T, L, M) with protocol parameters.
// Token-free structures (no economy) reject staking operations and
// behave as a plain distributed hash table.
class TokenizedDataStructure {
public:
    TokenizedDataStructure() = default;

    static TokenizedDataStructure create(Params params,
                                         const std::map<AgentId, Tokens>& initial_allocation,
                                         std::optional<Issuance> issuance);

    const Params& params() const { return params_; }
    Params& params_mut() { return params_; }
    bool has_economy() const { return economy_.has_value(); }
    const TokenEconomy& economy() const;
    TokenEconomy& economy_mut();

    const std::vector<Element>& elements() const { return elements_; }
    const std::map<ElementId, ElementMetadata>& metadata() const { return metadata_; }

    const Element* find_element(const ElementId& id) const;
    const ElementMetadata& metadata_of(const ElementId& id) const;

    // Adds an element with fresh Candidate metadata. Enforces id
    // uniqueness and the offchain flag.
    void add_element(Element element, AgentId proposer, Tick now);
    void set_state(const ElementId& id, ElementState to);
    void set_reward_bond(const ElementId& id, std::optional<BondId> bond);

    int depth() const;
    std::vector<ElementId> live_elements() const;
    // Whether any element in Candidate or QuasiFinalized state carries
    // this content hash (dedup check).
    bool content_pending_or_live(const Digest& hash) const;

    // Recursive well-formedness: unique ids, one metadata entry per
    // element, offchain-flag consistency, economy conservation.
    void validate() const;

    TokenizedDataStructure clone() const;

    // Rebuild from explicit parts (fork resolution, deserialization).
    static TokenizedDataStructure assemble(std::vector<Element> elements,
                                           std::optional<TokenEconomy> economy,
                                           std::map<ElementId, ElementMetadata> metadata,
                                           Params params);

private:
    std::vector<Element> elements_;
    std::optional<TokenEconomy> economy_;
    std::map<ElementId, ElementMetadata> metadata_;
    Params params_;
};

} // namespace tdm

#endif
