#include "tdm/protocol.hpp"

#include <algorithm>
#include <set>

namespace tdm {

namespace {
Json nonce_to_json(const Nonce& n) {
    Bytes b(n.begin(), n.end());
    return bytes_to_hex(b);
}

Nonce nonce_from_json(const Json& j) {
    Bytes b = hex_to_bytes(j.get<std::string>());
    if (b.size() != 32)
        throw DomainError(DomainError::Code::ConfigInvalid, "nonce must be 32 bytes");
    Nonce n{};
    std::copy(b.begin(), b.end(), n.begin());
    return n;
}
} // namespace

Json fork_partition_to_json(const ForkPartition& p) {
    Json j;
    j["elements_side1"] = p.elements_side1;
    j["elements_side2"] = p.elements_side2;
    j["holders_side1"] = p.holders_side1;
    j["holders_side2"] = p.holders_side2;
    return j;
}

ForkPartition fork_partition_from_json(const Json& j) {
    ForkPartition p;
    p.elements_side1 = j.at("elements_side1").get<std::vector<ElementId>>();
    p.elements_side2 = j.at("elements_side2").get<std::vector<ElementId>>();
    p.holders_side1 = j.at("holders_side1").get<std::vector<AgentId>>();
    p.holders_side2 = j.at("holders_side2").get<std::vector<AgentId>>();
    return p;
}

Engine::Engine(TokenizedDataStructure td, FaultModel store_fault)
    : td_(std::move(td)), store_(store_fault) {
    td_.params().validate();
    Json fault;
    fault["drop_probability"] = store_fault.drop_probability;
    fault["rng_seed"] = store_fault.rng_seed;
    log_event("genesis", Json{{"structure", structure_to_json(td_)}, {"fault", fault}},
              Json{{"snapshot_digest", snapshot_digest(td_)}});
}

const Poll& Engine::poll(PollId id) const {
    auto it = polls_.find(id);
    if (it == polls_.end())
        throw DomainError(DomainError::Code::UnknownPoll, "unknown poll " + std::to_string(id));
    return it->second;
}

Poll& Engine::poll_mut(PollId id) {
    auto it = polls_.find(id);
    if (it == polls_.end())
        throw DomainError(DomainError::Code::UnknownPoll, "unknown poll " + std::to_string(id));
    return it->second;
}

bool Engine::is_member(const AgentId& agent) const {
    auto it = members_.find(agent);
    if (it == members_.end()) return false;
    if (it->second.stake_bond == 0) return true; // zero-stake membership
    return td_.economy().bond(it->second.stake_bond).state == BondState::Active;
}

void Engine::log_event(const std::string& op, Json args, Json result) {
    if (!logging_enabled_ || replaying_) return;
    Json rec;
    rec["tick"] = now_;
    rec["op"] = op;
    rec["args"] = std::move(args);
    rec["result"] = std::move(result);
    event_log_.push_back(std::move(rec));
}

Digest Engine::put_blob(const Bytes& payload) {
    Digest d = store_.put(payload);
    log_event("put_blob", Json{{"payload", bytes_to_hex(payload)}}, Json{{"digest", hex(d)}});
    return d;
}

PollId Engine::open_poll(std::variant<CandidacyPoll, ChallengePoll, LivenessPoll, ForkPoll> kind,
                         const AgentId& proposer, Tokens deposit, BondPurpose purpose,
                         Tick period) {
    Poll p;
    p.id = next_poll_id_++;
    p.kind = std::move(kind);
    p.proposer = proposer;
    p.open_tick = now_;
    p.close_tick = now_ + period;
    if (td_.has_economy()) {
        p.deposit_bond = td_.economy_mut().bond_stake(proposer, deposit, purpose, p.close_tick);
    } else if (!deposit.is_zero()) {
        throw DomainError(DomainError::Code::NoEconomy,
                          "token-free structure rejects staking operations");
    }
    PollId id = p.id;
    polls_.emplace(id, std::move(p));
    return id;
}

PollId Engine::propose_candidate(const AgentId& agent, Element element) {
    const Params& params = td_.params();
    if (element.is_leaf) {
        if (element.data.kind == DataRef::Kind::Inline) {
            if (element.data.payload.empty())
                throw DomainError(DomainError::Code::EmptyPayload, "inline leaf needs a payload");
            element.data.content_hash = sha256(std::span<const uint8_t>(
                element.data.payload.data(), element.data.payload.size()));
        } else {
            if (!params.offchain)
                throw DomainError(DomainError::Code::OffchainDisabled,
                                  "offchain leaves disabled by params");
            if (!store_.contains(element.data.content_hash))
                throw DomainError(DomainError::Code::DataUnavailable,
                                  "offchain payload must be stored before candidacy");
        }
        if (params.dedup_enabled && td_.content_pending_or_live(element.data.content_hash))
            throw DomainError(DomainError::Code::DuplicateContent,
                              "identical content already pending or live");
    }
    if (td_.has_economy()) {
        if (td_.economy().unbonded(agent) < params.candidate_deposit)
            throw DomainError(DomainError::Code::InsufficientTokens,
                              "maker cannot cover candidate deposit");
    } else if (!params.candidate_deposit.is_zero()) {
        throw DomainError(DomainError::Code::NoEconomy,
                          "token-free structure rejects staking operations");
    }

    ElementId eid = element.id;
    Json element_json; // logged before the move below
    {
        Json j;
        j["id"] = element.id;
        j["is_leaf"] = element.is_leaf;
        if (element.is_leaf) {
            j["visibility"] = element.visibility == Visibility::Public ? "public" : "private";
            j["storage"] = element.data.kind == DataRef::Kind::Inline ? "inline" : "offchain";
            if (element.data.kind == DataRef::Kind::Inline)
                j["payload"] = bytes_to_hex(element.data.payload);
            else
                j["content_hash"] = hex(element.data.content_hash);
            j["owner"] = element.data.owner;
        }
        element_json = j;
    }

    Bytes ground_truth;
    if (element.is_leaf) {
        ground_truth = element.data.kind == DataRef::Kind::Inline
                           ? element.data.payload
                           : *store_.get(element.data.content_hash);
    }

    td_.add_element(std::move(element), agent, now_);
    ground_truth_[eid] = std::move(ground_truth);

    PollId id = open_poll(CandidacyPoll{eid}, agent, params.candidate_deposit,
                          BondPurpose::CandidateDeposit, params.candidate_vote_period);
    counts_.candidacies++;
    log_event("propose_candidate", Json{{"agent", agent}, {"element", element_json}},
              Json{{"poll_id", id}});
    return id;
}

void Engine::cast_vote(PollId poll_id, const AgentId& agent, VoteChoice choice) {
    Poll& p = poll_mut(poll_id);
    if (p.resolved || now_ < p.open_tick || now_ >= p.close_tick)
        throw DomainError(DomainError::Code::PollClosed, "poll not open for voting");
    if (p.votes.count(agent))
        throw DomainError(DomainError::Code::AlreadyVoted, "agent already voted on this poll");
    if (!td_.has_economy())
        throw DomainError(DomainError::Code::NotTokenHolder, "no token economy");
    Tokens weight = td_.economy().unbonded(agent);
    if (weight.is_zero())
        throw DomainError(DomainError::Code::NotTokenHolder, "agent holds no unbonded tokens");
    p.votes[agent] = Vote{choice, weight};
    log_event("cast_vote",
              Json{{"poll_id", poll_id},
                   {"agent", agent},
                   {"choice", choice == VoteChoice::Yes ? "yes" : "no"}},
              Json{{"weight", weight.str()}});
}

Tokens Engine::yes_weight(const Poll& p) const {
    Tokens total;
    for (const auto& [agent, v] : p.votes)
        if (v.choice == VoteChoice::Yes) total += v.weight;
    return total;
}

CandidacyOutcome Engine::resolve_candidacy(PollId poll_id) {
    Poll& p = poll_mut(poll_id);
    if (!std::holds_alternative<CandidacyPoll>(p.kind))
        throw DomainError(DomainError::Code::UnknownPoll, "not a candidacy poll");
    if (p.resolved)
        throw DomainError(DomainError::Code::PollAlreadyResolved, "poll already resolved");
    if (now_ < p.close_tick)
        throw DomainError(DomainError::Code::PollStillOpen, "poll still open");
    CandidacyOutcome out = resolve_candidacy_impl(p);
    log_event("resolve_candidacy", Json{{"poll_id", poll_id}},
              Json{{"outcome", out == CandidacyOutcome::Accepted ? "accepted" : "rejected"}});
    return out;
}

CandidacyOutcome Engine::resolve_candidacy_impl(Poll& p) {
    p.resolved = true;
    const auto& kind = std::get<CandidacyPoll>(p.kind);
    const Params& params = td_.params();
    Tokens supply = td_.has_economy() ? td_.economy().total_supply() : Tokens{};
    bool accepted = quorum_met(yes_weight(p), supply, params.candidate_quorum);
    if (accepted) {
        td_.set_state(kind.element_id, ElementState::QuasiFinalized);
        if (p.deposit_bond) td_.economy_mut().release_bond(p.deposit_bond, now_);
        if (td_.has_economy() && td_.economy().issuance() == Issuance::Mining &&
            !params.candidate_reward.is_zero()) {
            auto& econ = td_.economy_mut();
            econ.mint(p.proposer, params.candidate_reward);
            counts_.mints++;
            Tick release = now_ + params.reward_stake_period;
            BondId reward = econ.bond_stake(p.proposer, params.candidate_reward,
                                            BondPurpose::CandidateReward, release);
            if (release <= now_)
                econ.release_bond(reward, now_); // zero statute of limitations
            else
                td_.set_reward_bond(kind.element_id, reward);
        }
        counts_.accepted++;
        return CandidacyOutcome::Accepted;
    }
    td_.set_state(kind.element_id, ElementState::Removed);
    if (p.deposit_bond) {
        if (params.forfeit_rejected_deposit) {
            td_.economy_mut().seize_bond(p.deposit_bond);
            counts_.burns++;
        } else {
            td_.economy_mut().release_bond(p.deposit_bond, now_);
        }
    }
    counts_.rejected++;
    return CandidacyOutcome::Rejected;
}

PollId Engine::issue_challenge(const AgentId& agent, const ElementId& element_id) {
    if (td_.metadata_of(element_id).state != ElementState::QuasiFinalized)
        throw DomainError(DomainError::Code::ElementNotLive, "element not quasi-finalized");
    const Params& params = td_.params();
    if (td_.has_economy() && td_.economy().unbonded(agent) < params.challenge_deposit)
        throw DomainError(DomainError::Code::InsufficientTokens,
                          "challenger cannot cover challenge deposit");
    PollId id = open_poll(ChallengePoll{element_id}, agent, params.challenge_deposit,
                          BondPurpose::ChallengeDeposit, params.challenge_vote_period);
    log_event("issue_challenge", Json{{"agent", agent}, {"element_id", element_id}},
              Json{{"poll_id", id}});
    return id;
}

ChallengeOutcome Engine::resolve_challenge(PollId poll_id) {
    Poll& p = poll_mut(poll_id);
    if (!std::holds_alternative<ChallengePoll>(p.kind) &&
        !std::holds_alternative<LivenessPoll>(p.kind))
        throw DomainError(DomainError::Code::UnknownPoll, "not a challenge poll");
    if (p.resolved)
        throw DomainError(DomainError::Code::PollAlreadyResolved, "poll already resolved");
    if (now_ < p.close_tick)
        throw DomainError(DomainError::Code::PollStillOpen, "poll still open");
    ChallengeOutcome out = std::holds_alternative<ChallengePoll>(p.kind)
                               ? resolve_challenge_impl(p)
                               : resolve_liveness_impl(p);
    log_event("resolve_challenge", Json{{"poll_id", poll_id}},
              Json{{"outcome", out == ChallengeOutcome::Upheld ? "upheld" : "dismissed"}});
    return out;
}

ChallengeOutcome Engine::resolve_challenge_impl(Poll& p) {
    p.resolved = true;
    const auto& kind = std::get<ChallengePoll>(p.kind);
    const Params& params = td_.params();
    Tokens supply = td_.has_economy() ? td_.economy().total_supply() : Tokens{};
    bool upheld = quorum_met(yes_weight(p), supply, params.challenge_quorum);
    if (!upheld) {
        if (p.deposit_bond) {
            td_.economy_mut().seize_bond(p.deposit_bond);
            counts_.burns++;
        }
        counts_.challenges_dismissed++;
        return ChallengeOutcome::Dismissed;
    }
    td_.set_state(kind.element_id, ElementState::Challenged);
    const auto& meta = td_.metadata_of(kind.element_id);
    if (meta.reward_bond && td_.has_economy() &&
        td_.economy().bond(*meta.reward_bond).state == BondState::Active) {
        // Within the statute of limitations: the bonded reward is seized.
        if (params.seizure_to_challenger)
            td_.economy_mut().seize_bond(*meta.reward_bond, p.proposer);
        else {
            td_.economy_mut().seize_bond(*meta.reward_bond);
            counts_.burns++;
        }
    }
    // Past the statute of limitations the ledger is not amended; only
    // metadata changed above.
    if (p.deposit_bond) td_.economy_mut().release_bond(p.deposit_bond, now_);
    if (td_.has_economy() && td_.economy().issuance() == Issuance::Mining &&
        !params.challenge_reward.is_zero()) {
        td_.economy_mut().mint(p.proposer, params.challenge_reward);
        counts_.mints++;
    }
    counts_.challenges_upheld++;
    return ChallengeOutcome::Upheld;
}

PollId Engine::liveness_challenge(const AgentId& agent, const ElementId& element_id,
                                  const Nonce& nonce) {
    const Element* e = td_.find_element(element_id);
    if (!e || !e->is_leaf || e->data.kind != DataRef::Kind::Offchain)
        throw DomainError(DomainError::Code::NotOffchainLeaf, "not an offchain leaf");
    if (td_.metadata_of(element_id).state != ElementState::QuasiFinalized)
        throw DomainError(DomainError::Code::ElementNotLive, "element not quasi-finalized");
    const Params& params = td_.params();
    PollId id = open_poll(LivenessPoll{element_id, nonce, std::nullopt}, agent,
                          params.challenge_deposit, BondPurpose::ChallengeDeposit,
                          params.challenge_vote_period);
    log_event("liveness_challenge",
              Json{{"agent", agent}, {"element_id", element_id}, {"nonce", nonce_to_json(nonce)}},
              Json{{"poll_id", id}});
    return id;
}

void Engine::submit_liveness_proof(PollId poll_id, const LivenessProof& proof) {
    Poll& p = poll_mut(poll_id);
    auto* lp = std::get_if<LivenessPoll>(&p.kind);
    if (!lp) throw DomainError(DomainError::Code::UnknownPoll, "not a liveness poll");
    if (p.resolved || now_ >= p.close_tick)
        throw DomainError(DomainError::Code::PollClosed, "liveness window closed");
    lp->submitted = proof;
    log_event("submit_liveness_proof",
              Json{{"poll_id", poll_id},
                   {"element_id", proof.element_id},
                   {"nonce", nonce_to_json(proof.nonce)},
                   {"response", hex(proof.response)}},
              Json::object());
}

ChallengeOutcome Engine::resolve_liveness_impl(Poll& p) {
    p.resolved = true;
    const auto& kind = std::get<LivenessPoll>(p.kind);
    bool proven = false;
    if (kind.submitted) {
        const Bytes& truth = ground_truth_.at(kind.element_id);
        proven = kind.submitted->nonce == kind.nonce && verify_proof(truth, *kind.submitted);
    }
    if (proven) {
        if (p.deposit_bond) td_.economy_mut().release_bond(p.deposit_bond, now_);
        counts_.challenges_dismissed++;
        return ChallengeOutcome::Dismissed;
    }
    td_.set_state(kind.element_id, ElementState::Challenged);
    const auto& meta = td_.metadata_of(kind.element_id);
    if (meta.reward_bond && td_.has_economy() &&
        td_.economy().bond(*meta.reward_bond).state == BondState::Active) {
        td_.economy_mut().burn_bond(*meta.reward_bond);
        counts_.burns++;
    }
    if (p.deposit_bond) td_.economy_mut().release_bond(p.deposit_bond, now_);
    counts_.liveness_failures++;
    counts_.challenges_upheld++;
    return ChallengeOutcome::Upheld;
}

MembershipRecord Engine::acquire_membership(const AgentId& agent, Money payment) {
    if (!td_.has_economy())
        throw DomainError(DomainError::Code::NoEconomy, "membership needs a token economy");
    const Params& params = td_.params();
    if (payment != params.membership_price)
        throw DomainError(DomainError::Code::WrongPrice,
                          "payment must equal membership price " + params.membership_price.str());
    if (members_.count(agent))
        throw DomainError(DomainError::Code::ConfigInvalid, "agent already holds membership");

    auto& econ = td_.economy_mut();
    auto split = econ.distribute_pro_rata(payment);
    for (const auto& [holder, share] : split) payouts_[holder] += share;

    if (!params.query_stake.is_zero()) {
        if (params.steady_state_membership || econ.issuance() == Issuance::Predetermined)
            econ.transfer_pro_rata(agent, params.query_stake);
        else {
            econ.mint(agent, params.query_stake);
            counts_.mints++;
        }
    }
    BondId stake = 0;
    if (!params.query_stake.is_zero())
        stake = econ.bond_stake(agent, params.query_stake, BondPurpose::QueryStake, kTickNever);
    MembershipRecord rec{agent, stake, now_};
    members_[agent] = rec;

    Json payout_json = Json::object();
    for (const auto& [holder, share] : split)
        if (share != Money{}) payout_json[holder] = share.str();
    log_event("acquire_membership", Json{{"agent", agent}, {"payment", payment.str()}},
              Json{{"stake_bond", stake}, {"payouts", payout_json}});
    return rec;
}

void Engine::revoke_membership(const AgentId& agent) {
    auto it = members_.find(agent);
    if (it == members_.end())
        throw DomainError(DomainError::Code::NotAMember, "agent holds no membership");
    if (it->second.stake_bond) {
        td_.economy_mut().seize_bond(it->second.stake_bond);
        counts_.burns++;
    }
    members_.erase(it);
    log_event("revoke_membership", Json{{"agent", agent}}, Json::object());
}

void Engine::set_membership_price(Money price) {
    if (price < Money{})
        throw DomainError(DomainError::Code::InvalidParams, "membership price must be >= 0");
    td_.params_mut().membership_price = price;
    log_event("set_membership_price", Json{{"price", price.str()}}, Json::object());
}

Bytes Engine::query_element(const AgentId& agent, const ElementId& element_id) const {
    const Element* e = td_.find_element(element_id);
    if (!e || !e->is_leaf)
        throw DomainError(DomainError::Code::UnknownElement, "no such leaf element");
    if (td_.metadata_of(element_id).state != ElementState::QuasiFinalized)
        throw DomainError(DomainError::Code::ElementNotLive, "element not quasi-finalized");
    if (e->visibility == Visibility::Private && !is_member(agent))
        throw DomainError(DomainError::Code::NotAMember, "private data requires membership");
    if (e->data.kind == DataRef::Kind::Inline) return e->data.payload;
    auto blob = store_.get(e->data.content_hash);
    if (!blob)
        throw DomainError(DomainError::Code::DataUnavailable,
                          "offchain payload missing (grounds for liveness challenge)");
    return *blob;
}

PollId Engine::propose_fork(const AgentId& agent, ForkPartition partition) {
    // Element sets must cover every element exactly once; holder sets
    // every current holder exactly once.
    std::set<ElementId> seen_elems;
    for (const auto& id : partition.elements_side1)
        if (!seen_elems.insert(id).second)
            throw DomainError(DomainError::Code::InvalidPartition, "element repeated: " + id);
    for (const auto& id : partition.elements_side2)
        if (!seen_elems.insert(id).second)
            throw DomainError(DomainError::Code::InvalidPartition, "element repeated: " + id);
    if (seen_elems.size() != td_.elements().size())
        throw DomainError(DomainError::Code::InvalidPartition, "element set not exhaustive");
    for (const auto& e : td_.elements())
        if (!seen_elems.count(e.id))
            throw DomainError(DomainError::Code::InvalidPartition, "unknown element in partition");

    std::set<AgentId> seen_holders;
    for (const auto& a : partition.holders_side1)
        if (!seen_holders.insert(a).second)
            throw DomainError(DomainError::Code::InvalidPartition, "holder repeated: " + a);
    for (const auto& a : partition.holders_side2)
        if (!seen_holders.insert(a).second)
            throw DomainError(DomainError::Code::InvalidPartition, "holder repeated: " + a);
    std::set<AgentId> holders;
    if (td_.has_economy())
        for (const auto& [a, t] : td_.economy().holdings())
            if (!t.is_zero()) holders.insert(a);
    if (holders != seen_holders)
        throw DomainError(DomainError::Code::InvalidPartition,
                          "holder sets must cover all current holders exactly once");

    const Params& params = td_.params();
    if (td_.has_economy() && td_.economy().unbonded(agent) < params.fork_deposit)
        throw DomainError(DomainError::Code::InsufficientTokens,
                          "proposer cannot cover fork deposit");
    Json partition_json = fork_partition_to_json(partition);
    PollId id = open_poll(ForkPoll{std::move(partition)}, agent, params.fork_deposit,
                          BondPurpose::ForkDeposit, params.fork_vote_period);
    log_event("propose_fork", Json{{"agent", agent}, {"partition", partition_json}},
              Json{{"poll_id", id}});
    return id;
}

bool Engine::resolve_fork(PollId poll_id) {
    Poll& p = poll_mut(poll_id);
    if (!std::holds_alternative<ForkPoll>(p.kind))
        throw DomainError(DomainError::Code::UnknownPoll, "not a fork poll");
    if (p.resolved)
        throw DomainError(DomainError::Code::PollAlreadyResolved, "poll already resolved");
    if (now_ < p.close_tick)
        throw DomainError(DomainError::Code::PollStillOpen, "poll still open");
    bool forked = resolve_fork_impl(p);
    log_event("resolve_fork", Json{{"poll_id", poll_id}},
              Json{{"outcome", forked ? "forked" : "no_fork"}});
    return forked;
}

bool Engine::resolve_fork_impl(Poll& p) {
    p.resolved = true;
    const auto partition = std::get<ForkPoll>(p.kind).partition;
    const Params& params = td_.params();

    // Adoption weight for the forked variant (side 2); non-voters
    // default to the direct offshoot (side 1).
    Tokens adopt = yes_weight(p);
    Tokens supply = td_.has_economy() ? td_.economy().total_supply() : Tokens{};
    if (p.deposit_bond) td_.economy_mut().release_bond(p.deposit_bond, now_);
    if (!quorum_met(adopt, supply, params.fork_threshold)) return false;

    // Cancel every other open poll first, releasing its deposit in the
    // parent ledger, deterministically by poll id.
    for (auto& [id, other] : polls_) {
        if (other.resolved || id == p.id) continue;
        other.resolved = true;
        if (other.deposit_bond) td_.economy_mut().release_bond(other.deposit_bond, now_);
    }

    std::set<ElementId> side2_elems(partition.elements_side2.begin(),
                                    partition.elements_side2.end());
    std::set<AgentId> side2_holders;
    for (const auto& [agent, v] : p.votes)
        if (v.choice == VoteChoice::Yes) side2_holders.insert(agent);

    std::vector<Element> elems1, elems2;
    std::map<ElementId, ElementMetadata> meta1, meta2;
    for (const auto& e : td_.elements()) {
        bool two = side2_elems.count(e.id) > 0;
        (two ? elems2 : elems1).push_back(e.clone());
        (two ? meta2 : meta1)[e.id] = td_.metadata().at(e.id);
    }

    std::optional<TokenEconomy> econ1, econ2;
    if (td_.has_economy()) {
        const auto& econ = td_.economy();
        std::map<AgentId, Tokens> h1, h2;
        for (const auto& [agent, amount] : econ.holdings()) {
            if (amount.is_zero()) continue;
            // Tokens exist only on the adopted side; the other side's
            // balance is destroyed.
            (side2_holders.count(agent) ? h2 : h1)[agent] = amount;
        }
        std::vector<BondRecord> b1, b2;
        for (const auto& b : econ.bonds()) {
            bool two;
            if (b.purpose == BondPurpose::CandidateReward) {
                // Reward bonds stay with their element's side.
                two = false;
                for (const auto& [eid, m] : td_.metadata())
                    if (m.reward_bond && *m.reward_bond == b.id) two = side2_elems.count(eid) > 0;
            } else {
                two = side2_holders.count(b.owner) > 0;
            }
            (two ? b2 : b1).push_back(b);
        }
        auto supply_of = [](const std::map<AgentId, Tokens>& h, const std::vector<BondRecord>& bs) {
            Tokens s;
            for (const auto& [a, t] : h) s += t;
            for (const auto& b : bs)
                if (b.state == BondState::Active) s += b.amount;
            return s;
        };
        Tokens s1 = supply_of(h1, b1);
        Tokens s2 = supply_of(h2, b2);
        econ1 = TokenEconomy::restore(econ.token_id() + ".1", econ.issuance(), s1,
                                      std::move(h1), b1);
        econ2 = TokenEconomy::restore(econ.token_id() + ".2", econ.issuance(), s2,
                                      std::move(h2), b2);
    }

    TokenizedDataStructure td1 = TokenizedDataStructure::assemble(
        std::move(elems1), std::move(econ1), std::move(meta1), params);
    TokenizedDataStructure td2 = TokenizedDataStructure::assemble(
        std::move(elems2), std::move(econ2), std::move(meta2), params);

    fork_result_ = ForkResult{td1.clone(), std::move(td2)};
    td_ = std::move(td1);
    members_.clear(); // query stakes moved with owners; memberships re-acquired per child
    counts_.forks++;
    return true;
}

std::optional<ForkResult> Engine::take_fork_result() {
    auto out = std::move(fork_result_);
    fork_result_.reset();
    return out;
}

std::vector<ResolvedPoll> Engine::advance_time(Tick to_tick) {
    if (to_tick < now_)
        throw DomainError(DomainError::Code::ClockRegression, "clock cannot move backwards");

    std::vector<ResolvedPoll> results;
    std::set<Tick> event_ticks;
    if (td_.has_economy())
        for (const auto& b : td_.economy().bonds())
            if (b.state == BondState::Active && b.purpose == BondPurpose::CandidateReward &&
                b.release_tick <= to_tick)
                event_ticks.insert(std::max(b.release_tick, now_));
    for (const auto& [id, p] : polls_)
        if (!p.resolved && p.close_tick <= to_tick) event_ticks.insert(std::max(p.close_tick, now_));

    for (Tick t : event_ticks) {
        now_ = t;
        store_.advance_to_tick(t);
        if (td_.has_economy()) {
            // Reward bonds release before any poll closing at the same
            // tick: past-statute challenges cannot touch the ledger.
            auto& econ = td_.economy_mut();
            std::vector<BondId> due;
            for (const auto& b : econ.bonds())
                if (b.state == BondState::Active && b.purpose == BondPurpose::CandidateReward &&
                    b.release_tick <= t)
                    due.push_back(b.id);
            for (BondId id : due) econ.release_bond(id, t);
        }
        for (auto& [id, p] : polls_) {
            if (p.resolved || p.close_tick > t) continue;
            results.push_back(resolve_poll(p));
        }
    }
    now_ = to_tick;
    store_.advance_to_tick(to_tick);

    Json resolved_json = Json::array();
    for (const auto& r : results) {
        Json rj;
        rj["poll_id"] = r.poll_id;
        rj["kind"] = r.kind;
        rj["outcome"] = r.outcome;
        rj["element_id"] = r.element_id;
        resolved_json.push_back(rj);
    }
    log_event("advance_time", Json{{"to_tick", to_tick}}, Json{{"resolved", resolved_json}});
    return results;
}

ResolvedPoll Engine::resolve_poll(Poll& p) {
    ResolvedPoll r;
    r.poll_id = p.id;
    if (auto* c = std::get_if<CandidacyPoll>(&p.kind)) {
        r.kind = "candidacy";
        r.element_id = c->element_id;
        r.outcome =
            resolve_candidacy_impl(p) == CandidacyOutcome::Accepted ? "accepted" : "rejected";
    } else if (auto* ch = std::get_if<ChallengePoll>(&p.kind)) {
        r.kind = "challenge";
        r.element_id = ch->element_id;
        r.outcome = resolve_challenge_impl(p) == ChallengeOutcome::Upheld ? "upheld" : "dismissed";
    } else if (auto* lv = std::get_if<LivenessPoll>(&p.kind)) {
        r.kind = "liveness";
        r.element_id = lv->element_id;
        r.outcome = resolve_liveness_impl(p) == ChallengeOutcome::Upheld ? "upheld" : "dismissed";
    } else {
        r.kind = "fork";
        r.outcome = resolve_fork_impl(p) ? "forked" : "no_fork";
    }
    return r;
}

Json Engine::apply_logged_op(const Json& record) {
    replaying_ = true;
    struct Guard {
        bool* flag;
        ~Guard() { *flag = false; }
    } guard{&replaying_};

    const std::string op = record.at("op");
    const Json& args = record.at("args");
    if (op == "genesis") {
        // The caller constructed the engine from this record; confirm
        // the starting state matches.
        return Json{{"snapshot_digest", snapshot_digest(td_)}};
    }
    if (op == "put_blob") {
        Digest d = put_blob(hex_to_bytes(args.at("payload")));
        return Json{{"digest", hex(d)}};
    }
    if (op == "propose_candidate") {
        const Json& ej = args.at("element");
        Element e;
        e.id = ej.at("id");
        e.is_leaf = ej.at("is_leaf");
        if (e.is_leaf) {
            e.visibility =
                ej.at("visibility") == "public" ? Visibility::Public : Visibility::Private;
            if (ej.at("storage") == "inline") {
                e.data.kind = DataRef::Kind::Inline;
                e.data.payload = hex_to_bytes(ej.at("payload"));
            } else {
                e.data.kind = DataRef::Kind::Offchain;
                e.data.content_hash = unhex_digest(ej.at("content_hash"));
            }
            e.data.owner = ej.at("owner");
        }
        PollId id = propose_candidate(args.at("agent"), std::move(e));
        return Json{{"poll_id", id}};
    }
    if (op == "cast_vote") {
        VoteChoice choice = args.at("choice") == "yes" ? VoteChoice::Yes : VoteChoice::No;
        cast_vote(args.at("poll_id"), args.at("agent"), choice);
        return Json{{"weight", poll(args.at("poll_id")).votes.at(args.at("agent")).weight.str()}};
    }
    if (op == "issue_challenge") {
        PollId id = issue_challenge(args.at("agent"), args.at("element_id"));
        return Json{{"poll_id", id}};
    }
    if (op == "liveness_challenge") {
        PollId id = liveness_challenge(args.at("agent"), args.at("element_id"),
                                       nonce_from_json(args.at("nonce")));
        return Json{{"poll_id", id}};
    }
    if (op == "submit_liveness_proof") {
        LivenessProof proof{args.at("element_id"), nonce_from_json(args.at("nonce")),
                            unhex_digest(args.at("response"))};
        submit_liveness_proof(args.at("poll_id"), proof);
        return Json::object();
    }
    if (op == "acquire_membership") {
        auto payouts_before = payouts_;
        MembershipRecord rec = acquire_membership(args.at("agent"), Money::parse(args.at("payment")));
        Json payout_json = Json::object();
        for (const auto& [holder, share] : payouts_) {
            Money before;
            auto it = payouts_before.find(holder);
            if (it != payouts_before.end()) before = it->second;
            Money delta = share - before;
            if (delta != Money{}) payout_json[holder] = delta.str();
        }
        return Json{{"stake_bond", rec.stake_bond}, {"payouts", payout_json}};
    }
    if (op == "revoke_membership") {
        revoke_membership(args.at("agent"));
        return Json::object();
    }
    if (op == "set_membership_price") {
        set_membership_price(Money::parse(args.at("price")));
        return Json::object();
    }
    if (op == "propose_fork") {
        PollId id = propose_fork(args.at("agent"), fork_partition_from_json(args.at("partition")));
        return Json{{"poll_id", id}};
    }
    if (op == "resolve_candidacy") {
        CandidacyOutcome out = resolve_candidacy(args.at("poll_id"));
        return Json{{"outcome", out == CandidacyOutcome::Accepted ? "accepted" : "rejected"}};
    }
    if (op == "resolve_challenge") {
        ChallengeOutcome out = resolve_challenge(args.at("poll_id"));
        return Json{{"outcome", out == ChallengeOutcome::Upheld ? "upheld" : "dismissed"}};
    }
    if (op == "resolve_fork") {
        bool forked = resolve_fork(args.at("poll_id"));
        return Json{{"outcome", forked ? "forked" : "no_fork"}};
    }
    if (op == "advance_time") {
        auto results = advance_time(args.at("to_tick"));
        Json resolved_json = Json::array();
        for (const auto& r : results) {
            Json rj;
            rj["poll_id"] = r.poll_id;
            rj["kind"] = r.kind;
            rj["outcome"] = r.outcome;
            rj["element_id"] = r.element_id;
            resolved_json.push_back(rj);
        }
        return Json{{"resolved", resolved_json}};
    }
    throw DomainError(DomainError::Code::ConfigInvalid, "unknown logged op: " + op);
}

} // namespace tdm
