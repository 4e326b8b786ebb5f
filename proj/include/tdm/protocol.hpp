#ifndef TDM_PROTOCOL_HPP
#define TDM_PROTOCOL_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tdm/canonical.hpp"
#include "tdm/offchain.hpp"
#include "tdm/structure.hpp"

namespace tdm {

using PollId = uint64_t;

enum class VoteChoice { Yes, No };

struct Vote {
    VoteChoice choice = VoteChoice::No;
    Tokens weight;  // voter's unbonded holdings at cast time
};

struct ForkPartition {
    std::vector<ElementId> elements_side1, elements_side2;
    std::vector<AgentId> holders_side1, holders_side2;
};

struct CandidacyPoll {
    ElementId element_id;
};
struct ChallengePoll {
    ElementId element_id;
};
struct LivenessPoll {
    ElementId element_id;
    Nonce nonce{};
    std::optional<LivenessProof> submitted;
};
struct ForkPoll {
    ForkPartition partition;
};

struct Poll {
    PollId id = 0;
    std::variant<CandidacyPoll, ChallengePoll, LivenessPoll, ForkPoll> kind;
    AgentId proposer;
    BondId deposit_bond = 0;
    Tick open_tick = 0;
    Tick close_tick = 0;
    std::map<AgentId, Vote> votes;
    bool resolved = false;
};

enum class CandidacyOutcome { Accepted, Rejected };
enum class ChallengeOutcome { Upheld, Dismissed };

struct MembershipRecord {
    AgentId agent;
    BondId stake_bond = 0;
    Tick acquired_tick = 0;
};

struct ResolvedPoll {
    PollId poll_id = 0;
    std::string kind;     // "candidacy" | "challenge" | "liveness" | "fork"
    std::string outcome;  // "accepted" | "rejected" | "upheld" | "dismissed" | "forked" | "no_fork"
    ElementId element_id; // empty for forks
};

struct ForkResult {
    TokenizedDataStructure direct_offshoot;  // side 1
    TokenizedDataStructure forked_variant;   // side 2, detached from any parent
};

// Tick-driven poll state machine over one structure and its economy.
// Single sequential event loop: every mutating call is an event applied
// at the engine's clock and appended to the event log.
class Engine {
public:
    explicit Engine(TokenizedDataStructure td, FaultModel store_fault = {});

    const TokenizedDataStructure& structure() const { return td_; }
    TokenizedDataStructure& structure_mut() { return td_; }
    ContentStore& store() { return store_; }
    const ContentStore& store() const { return store_; }
    Tick now() const { return now_; }
    const std::map<PollId, Poll>& polls() const { return polls_; }
    const Poll& poll(PollId id) const;
    const std::map<AgentId, MembershipRecord>& members() const { return members_; }
    bool is_member(const AgentId& agent) const;

    // Stores an off-chain payload ahead of candidacy.
    Digest put_blob(const Bytes& payload);

    PollId propose_candidate(const AgentId& agent, Element element);
    void cast_vote(PollId poll_id, const AgentId& agent, VoteChoice choice);
    CandidacyOutcome resolve_candidacy(PollId poll_id);
    PollId issue_challenge(const AgentId& agent, const ElementId& element_id);
    ChallengeOutcome resolve_challenge(PollId poll_id);
    PollId liveness_challenge(const AgentId& agent, const ElementId& element_id,
                              const Nonce& nonce);
    // Owner answers a liveness probe from their store view; evaluated
    // at poll close against the trusted ground-truth payload.
    void submit_liveness_proof(PollId poll_id, const LivenessProof& proof);
    MembershipRecord acquire_membership(const AgentId& agent, Money payment);
    // Seizes the member's query stake (leak detected). Sim-facing.
    void revoke_membership(const AgentId& agent);
    // Market response to leaks: reprice future membership sales.
    void set_membership_price(Money price);
    Bytes query_element(const AgentId& agent, const ElementId& element_id) const;
    PollId propose_fork(const AgentId& agent, ForkPartition partition);
    // Returns true when the fork proceeded; the two children are then
    // available via take_fork_result() (the engine keeps side 1).
    bool resolve_fork(PollId poll_id);

    std::vector<ResolvedPoll> advance_time(Tick to_tick);

    // Present when the last advance_time resolved a fork.
    std::optional<ForkResult> take_fork_result();

    // Membership payments distributed so far, per recipient (the sim
    // credits these to cash accounts).
    const std::map<AgentId, Money>& pending_payouts() const { return payouts_; }
    void clear_payouts() { payouts_.clear(); }

    struct EventCounts {
        uint64_t candidacies = 0, accepted = 0, rejected = 0;
        uint64_t challenges_upheld = 0, challenges_dismissed = 0;
        uint64_t liveness_failures = 0, forks = 0;
        uint64_t mints = 0, burns = 0;
    };
    const EventCounts& counts() const { return counts_; }

    const std::vector<Json>& event_log() const { return event_log_; }
    // Replay hook: apply one logged op; returns the recomputed result
    // JSON for comparison with the recorded one.
    Json apply_logged_op(const Json& record);

private:
    PollId open_poll(std::variant<CandidacyPoll, ChallengePoll, LivenessPoll, ForkPoll> kind,
                     const AgentId& proposer, Tokens deposit, BondPurpose purpose, Tick period);
    Poll& poll_mut(PollId id);
    ResolvedPoll resolve_poll(Poll& p);
    CandidacyOutcome resolve_candidacy_impl(Poll& p);
    ChallengeOutcome resolve_challenge_impl(Poll& p);
    ChallengeOutcome resolve_liveness_impl(Poll& p);
    bool resolve_fork_impl(Poll& p);
    Tokens yes_weight(const Poll& p) const;
    void log_event(const std::string& op, Json args, Json result);

    TokenizedDataStructure td_;
    ContentStore store_;
    Tick now_ = 0;
    std::map<PollId, Poll> polls_;
    PollId next_poll_id_ = 1;
    std::map<AgentId, MembershipRecord> members_;
    std::map<ElementId, Bytes> ground_truth_;
    std::map<AgentId, Money> payouts_;
    std::optional<ForkResult> fork_result_;
    EventCounts counts_;
    std::vector<Json> event_log_;
    bool logging_enabled_ = true;
    bool replaying_ = false;
};

Json fork_partition_to_json(const ForkPartition& p);
ForkPartition fork_partition_from_json(const Json& j);

} // namespace tdm

#endif
