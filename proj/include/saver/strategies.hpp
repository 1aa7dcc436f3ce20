#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "saver/estimator.hpp"
#include "saver/mdp.hpp"

namespace saver {

enum class StrategyKind {
    OnPolicy,
    BaselineOnly,
    OracleUnconstrained,
    SafeOracle,
    SaVeR,
    BanditSaVeR,
};

std::string strategy_name(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(const std::string& name);

enum class Phase { Baseline, Explore, Track };

/// Episode-level phase rule shared by the safe oracle and SaVeR:
/// Baseline when the budget is negative, exploration for the first
/// ceil(sqrt(K)) episodes, tracking afterwards.
Phase phase_for_episode(int64_t k, int64_t K, double z);

/// Tracking rule: argmax_a b(a|s) / T(s,a), with T = 0 mapping the ratio to
/// +inf; ties break toward the lowest action index.
int track_action(int state, const SufficientStats& stats, const AllocationTable& alloc);

/// Uniform over all A+1 actions.
int explore_action(const LayeredMdp& mdp, Rng& rng);

/// Samples a ~ pi(.|state).
int on_policy_action(int state, const TargetPolicy& policy, Rng& rng);

/// Running lower-confidence safety budget
///   z_k = sum_{k' <= k} Ylcb^{(k')} - (1-alpha) k V_c^{pi0}(root).
struct SafetyBudgetState {
    double alpha = 1.0;
    double baseline_cost_value = 0.0;
    double z = 0.0;
    double lcb_sum = 0.0;
    int64_t episodes_seen = 0;
    int64_t violation_count = 0;
    std::vector<double> trace;
};

/// Folds episode k into the budget: evaluates the realized trajectory's
/// deterministic action choices (baseline action elsewhere) under cost_lcb
/// means, with unvisited pairs contributing the trivial lower bound 0.
void update_budget_mdp(SafetyBudgetState& budget, const EpisodeRecord& episode,
                       const EstimateView& view, const LayeredMdp& mdp);

/// Per-round bandit rule with the lookahead budget
///   Z_l = sum_{l' < l} lcb(A_{l'}) + lcb(J_l) - (1-alpha) l mu_c(0).
/// Returns the action for round l and records the budget decision.
int bandit_saver_step(const LayeredMdp& mdp, const TargetPolicy& policy, int64_t round,
                      int64_t n, const SufficientStats& stats, const EstimateView& view,
                      SafetyBudgetState& budget, Rng& rng);

struct RunResult {
    double estimate = 0.0;          // Y^pi_n at the root
    int64_t violations = 0;         // decision points with negative budget
    double final_budget = 0.0;
    bool constraint_satisfied = true;  // true cumulative cost vs Eq. constraint
    double budget_p10 = 0.0, budget_p50 = 0.0, budget_p90 = 0.0;
    std::vector<int> action_trace;      // filled only when requested
    std::vector<double> budget_trace;   // filled only when requested
};

struct StrategyOptions {
    StrategyKind kind = StrategyKind::OnPolicy;
    double alpha = 1.0;
    WidthParams width;
    bool inject_exact_sigma = false;  // plug-in allocation sees the true sigma
    bool record_actions = false;
};

/// Runs one full data-collection pass of K = n/L episodes (or n rounds for
/// BanditSaVeR) and reports the terminal estimate plus safety bookkeeping.
RunResult run_strategy(const LayeredMdp& mdp, MdpMode mode, const TargetPolicy& policy,
                       const StrategyOptions& options, int64_t budget_n, uint64_t seed);

} // namespace saver
