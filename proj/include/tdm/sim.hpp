#ifndef TDM_SIM_HPP
#define TDM_SIM_HPP

#include <variant>

#include "tdm/economics.hpp"
#include "tdm/protocol.hpp"

namespace tdm::sim {

struct HonestMaker {
    int elements_per_epoch = 1;      // epoch = 24 ticks
    Money acquisition_cost;          // paid per element, leaves the system
    int max_elements = -1;           // unlimited when < 0
};
struct HonestVoter {
    double accuracy = 1.0;
};
struct LazyHolder {};
struct LivenessProber {
    Money cost;                      // per probe, leaves the system
    int future_sales = 0;            // k in the budget rule ell = kD/(cN)
};
struct Troll {
    double garbage_rate = 0.1;       // submissions per tick (Bernoulli)
};
struct Madman {
    Money loss_budget;
};
struct SybilDuplicator {
    int identity_count = 3;
};
struct Leaker {
    Tick leak_tick = 0;
    Tick arrival_tick = 0;
};
struct MembershipBuyer {
    Money price;
    Tick arrival_tick = 0;
};

using Strategy = std::variant<HonestMaker, HonestVoter, LazyHolder, LivenessProber, Troll, Madman,
                              SybilDuplicator, Leaker, MembershipBuyer>;

enum class AccessMode { Membership, Transaction };

struct AgentSpec {
    AgentId id;
    Strategy strategy;
    Tokens initial_tokens;
    Money initial_cash;
};

struct ScenarioConfig {
    Params params;
    std::vector<AgentSpec> agents;
    Tick horizon = 720;
    int replicates = 1;
    uint64_t master_seed = 0;
    AccessMode access_mode = AccessMode::Membership;
    double ground_truth_valid_fraction = 1.0;
    double p_detect = 0.0;
    double beta = 1.0;
    double gamma = 0.0;
    int ell_counterfeit = 0;
    Money unit_value = Money::from_units(1);
    std::optional<Issuance> issuance = Issuance::Mining;
    double store_drop_probability = 0.0;

    void validate() const;  // throws ConfigInvalid with a field path
    static ScenarioConfig from_json(const Json& j);
    Json to_json() const;
};

struct TheoremRow {
    std::string name;
    std::string closed_form;      // fixed-point string
    std::string monte_carlo_mean; // fixed-point string
    std::string stderr_;          // fixed-point string
    int replicates = 0;
    bool flagged = false;         // |mean - closed_form| > 3*stderr
};

struct SimReport {
    std::map<AgentId, Money> agent_net;        // mean across replicates
    std::map<AgentId, Money> agent_cash_delta; // mean across replicates
    std::vector<TheoremRow> theorems;
    Engine::EventCounts events;                // summed across replicates
    std::string snapshot_digest;               // replicate 0 final structure
    Json to_json() const;
};

struct RunResult {
    SimReport report;
    std::vector<Json> event_log; // replicate 0 engine event log
};

RunResult run_scenario(const ScenarioConfig& config);

// Theorem-2 Monte Carlo grid.
struct Theorem2Cell {
    econ::Rational p_detect, beta, gamma, alpha, k, ell, D;
};
struct Theorem2Row {
    Theorem2Cell cell;
    econ::Rational closed_form;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
    int replicates = 0;
    bool sign_agrees = false;
    bool within_3stderr = false;
};

std::vector<Theorem2Cell> theorem2_random_grid(int cells, uint64_t seed);
std::vector<Theorem2Row> estimate_theorem2(const std::vector<Theorem2Cell>& grid, int replicates,
                                           uint64_t seed);

// Vote-flip cost against geometrically shrinking nested economies.
struct DepthDilutionRow {
    int depth = 0;
    Tokens supply;
    Tokens flip_cost_tokens; // ceil(quorum * supply)
    Money flip_cost_value;
    bool degenerate = false; // zero-supply child
};
std::vector<DepthDilutionRow> depth_dilution_scan(Tokens base_supply, BasisPoints quorum,
                                                  Money unit_value, int shrink_divisor,
                                                  int max_depth);

// Deterministic RNG used across the simulator.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}
    uint64_t next();
    double unit();               // [0, 1)
    bool bernoulli(double p) { return unit() < p; }
    uint64_t below(uint64_t n);  // [0, n)

private:
    uint64_t state_;
};

} // namespace tdm::sim

#endif
