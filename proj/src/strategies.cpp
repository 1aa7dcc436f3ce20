#include "saver/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    double idx = q * (values.size() - 1);
    size_t lo = static_cast<size_t>(idx);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = idx - lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// EstimateView whose std_ucb is the true sigma table; used by the oracle
// strategies and by the exact-sigma injection.
void inject_sigma(EstimateView& view, const LayeredMdp& mdp) {
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions; ++a)
            view.std_ucb[s][a] = mdp.reward_std[s][a];
}

AllocationTable exact_allocation(const LayeredMdp& mdp, MdpMode mode,
                                 const TargetPolicy& policy) {
    if (mode == MdpMode::Dag) {
        SufficientStats stats = SufficientStats::zeros(mdp);
        WidthParams params;
        params.mode = WidthMode::Zero;
        EstimateView view = estimates(stats, params);
        inject_sigma(view, mdp);
        return plug_in_allocation_dag(mdp, policy, view);
    }
    return compute_b_star(mdp, policy);
}

} // namespace

std::string strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::OnPolicy: return "on_policy";
        case StrategyKind::BaselineOnly: return "baseline_only";
        case StrategyKind::OracleUnconstrained: return "oracle_unconstrained";
        case StrategyKind::SafeOracle: return "safe_oracle";
        case StrategyKind::SaVeR: return "saver";
        case StrategyKind::BanditSaVeR: return "bandit_saver";
    }
    return "unknown";
}

std::optional<StrategyKind> parse_strategy(const std::string& name) {
    for (StrategyKind k :
         {StrategyKind::OnPolicy, StrategyKind::BaselineOnly, StrategyKind::OracleUnconstrained,
          StrategyKind::SafeOracle, StrategyKind::SaVeR, StrategyKind::BanditSaVeR})
        if (strategy_name(k) == name) return k;
    return std::nullopt;
}

Phase phase_for_episode(int64_t k, int64_t K, double z) {
    if (z < 0.0) return Phase::Baseline;
    int64_t horizon = static_cast<int64_t>(std::ceil(std::sqrt(static_cast<double>(K))));
    return (k <= horizon) ? Phase::Explore : Phase::Track;
}

int track_action(int state, const SufficientStats& stats, const AllocationTable& alloc) {
    const auto& row = alloc.b_star[state];
    int best = 0;
    double best_ratio = -kInf;
    for (int a = 0; a < static_cast<int>(row.size()); ++a) {
        const int64_t T = stats.count[state][a];
        double ratio = (T == 0) ? kInf : row[a] / static_cast<double>(T);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = a;
        }
    }
    return best;
}

int explore_action(const LayeredMdp& mdp, Rng& rng) { return rng.uniform_int(mdp.num_actions); }

int on_policy_action(int state, const TargetPolicy& policy, Rng& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    const auto& row = policy.probs[state];
    for (int a = 0; a < static_cast<int>(row.size()); ++a) {
        acc += row[a];
        if (u < acc) return a;
    }
    return static_cast<int>(row.size()) - 1;
}

void update_budget_mdp(SafetyBudgetState& budget, const EpisodeRecord& episode,
                       const EstimateView& view, const LayeredMdp& mdp) {
    // realized trajectory's deterministic choices; baseline elsewhere
    std::vector<int> action_of(mdp.num_states(), 0);
    for (const auto& step : episode.steps) action_of[step.state] = step.action;
    TargetPolicy realized = deterministic_policy(mdp, action_of);

    std::vector<std::vector<double>> means(mdp.num_states(),
                                           std::vector<double>(mdp.num_actions, 0.0));
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
            double lcb = view.cost_lcb[s][a];
            means[s][a] = std::isinf(lcb) ? 0.0 : lcb;  // unvisited: means lie in [0, eta]
        }

    double y = certainty_value(mdp, realized.probs, means)[mdp.root()];
    budget.lcb_sum += y;
    budget.episodes_seen++;
    budget.z = budget.lcb_sum -
               (1.0 - budget.alpha) * static_cast<double>(budget.episodes_seen) *
                   budget.baseline_cost_value;
    budget.trace.push_back(budget.z);
    if (budget.z < 0.0) budget.violation_count++;
}

int bandit_saver_step(const LayeredMdp& mdp, const TargetPolicy& policy, int64_t round,
                      int64_t n, const SufficientStats& stats, const EstimateView& view,
                      SafetyBudgetState& budget, Rng& rng) {
    const int s = mdp.root();
    const int A = mdp.num_actions;

    bool any_visit = false;
    for (int a = 0; a < A; ++a)
        if (stats.count[s][a] > 0) any_visit = true;
    if (!any_visit) {
        // initialization: the budget starts at zero, explore
        budget.trace.push_back(budget.z);
        return explore_action(mdp, rng);
    }

    // candidate J_l = argmax pi(a) std_ucb(a) / T(a)
    int cand = 0;
    double best_ratio = -kInf;
    for (int a = 0; a < A; ++a) {
        const int64_t T = stats.count[s][a];
        double ratio = (T == 0) ? kInf : policy.probs[s][a] * view.std_ucb[s][a] / T;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            cand = a;
        }
    }

    double lookahead = view.cost_lcb[s][cand];
    if (std::isinf(lookahead)) lookahead = 0.0;
    double z = budget.lcb_sum + lookahead -
               (1.0 - budget.alpha) * static_cast<double>(round) * budget.baseline_cost_value;
    budget.z = z;
    budget.trace.push_back(z);
    if (z < 0.0) budget.violation_count++;

    if (z < 0.0) return 0;
    int64_t horizon = static_cast<int64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    if (round <= horizon) return explore_action(mdp, rng);
    return cand;
}

RunResult run_strategy(const LayeredMdp& mdp, MdpMode mode, const TargetPolicy& policy,
                       const StrategyOptions& options, int64_t budget_n, uint64_t seed) {
    if (budget_n % mdp.levels != 0)
        throw std::invalid_argument("budget not divisible by the horizon");
    const int64_t K = budget_n / mdp.levels;
    if (options.kind == StrategyKind::BanditSaVeR && mdp.levels != 1)
        throw std::invalid_argument("bandit_saver requires a single-level environment");

    Rng rng(seed);
    SufficientStats stats = SufficientStats::zeros(mdp);
    SafetyBudgetState budget;
    budget.alpha = options.alpha;
    budget.baseline_cost_value =
        true_value(mdp, baseline_policy(mdp), Channel::Cost)[mdp.root()];

    // true cost values of the stochastic behavior policies, for the
    // constraint bookkeeping (sum_k V_c^{b^k} vs (1-alpha) k V_c^{pi0})
    double on_policy_cost = true_value(mdp, policy, Channel::Cost)[mdp.root()];
    double uniform_cost;
    {
        TargetPolicy uniform;
        uniform.probs.assign(mdp.num_states(),
                             std::vector<double>(mdp.num_actions, 1.0 / mdp.num_actions));
        uniform_cost = true_value(mdp, uniform, Channel::Cost)[mdp.root()];
    }

    double true_cost_sum = 0.0;
    bool satisfied = true;

    RunResult result;

    AllocationTable oracle_table;
    const bool needs_oracle_table = options.kind == StrategyKind::OracleUnconstrained ||
                                    options.kind == StrategyKind::SafeOracle;
    if (needs_oracle_table) oracle_table = exact_allocation(mdp, mode, policy);

    if (options.kind == StrategyKind::BanditSaVeR) {
        for (int64_t round = 1; round <= budget_n; ++round) {
            EstimateView view = estimates(stats, options.width);
            if (options.inject_exact_sigma) inject_sigma(view, mdp);
            int action = bandit_saver_step(mdp, policy, round, budget_n, stats, view, budget, rng);
            StepOutcome o = sample_step(mdp, mdp.root(), action, rng);
            EpisodeRecord rec;
            rec.steps.push_back({mdp.root(), action, o.reward, o.cost});
            update(stats, rec);
            if (options.record_actions) result.action_trace.push_back(action);

            EstimateView post = estimates(stats, options.width);
            double lcb = post.cost_lcb[mdp.root()][action];
            budget.lcb_sum += std::isinf(lcb) ? 0.0 : lcb;

            true_cost_sum += mdp.cost_mean[mdp.root()][action];
            if (true_cost_sum < (1.0 - options.alpha) * static_cast<double>(round) *
                                        budget.baseline_cost_value -
                                    1e-9)
                satisfied = false;
        }
    } else {
        for (int64_t k = 1; k <= K; ++k) {
            EstimateView view = estimates(stats, options.width);
            if (options.inject_exact_sigma) inject_sigma(view, mdp);

            const AllocationTable* alloc = nullptr;
            AllocationTable plugin;
            if (options.kind == StrategyKind::SaVeR) {
                plugin = (mode == MdpMode::Dag) ? plug_in_allocation_dag(mdp, policy, view)
                                                : plug_in_allocation(mdp, policy, view);
                alloc = &plugin;
            } else if (needs_oracle_table) {
                alloc = &oracle_table;
            }

            Phase phase;
            switch (options.kind) {
                case StrategyKind::BaselineOnly: phase = Phase::Baseline; break;
                case StrategyKind::OracleUnconstrained: phase = Phase::Track; break;
                case StrategyKind::SafeOracle:
                case StrategyKind::SaVeR:
                    phase = phase_for_episode(k, K, budget.z);
                    break;
                default: phase = Phase::Track; break;  // OnPolicy resolved below
            }

            ActionSelector select;
            if (options.kind == StrategyKind::OnPolicy) {
                select = [&](int s) { return on_policy_action(s, policy, rng); };
            } else if (phase == Phase::Baseline) {
                select = [](int) { return 0; };
            } else if (phase == Phase::Explore) {
                select = [&](int) { return explore_action(mdp, rng); };
            } else {
                select = [&](int s) { return track_action(s, stats, *alloc); };
            }

            EpisodeRecord episode = run_episode(mdp, select, rng);
            update(stats, episode);
            if (options.record_actions)
                for (const auto& step : episode.steps) result.action_trace.push_back(step.action);

            EstimateView post = estimates(stats, options.width);
            update_budget_mdp(budget, episode, post, mdp);

            // episode-k behavior policy value for the constraint bookkeeping:
            // the stochastic phases use their exact policy values, tracking
            // uses the realized deterministic choices (baseline elsewhere)
            if (options.kind == StrategyKind::OnPolicy) {
                true_cost_sum += on_policy_cost;
            } else if (phase == Phase::Baseline) {
                true_cost_sum += budget.baseline_cost_value;
            } else if (phase == Phase::Explore) {
                true_cost_sum += uniform_cost;
            } else {
                std::vector<int> action_of(mdp.num_states(), 0);
                for (const auto& step : episode.steps) action_of[step.state] = step.action;
                TargetPolicy realized = deterministic_policy(mdp, action_of);
                true_cost_sum += true_value(mdp, realized, Channel::Cost)[mdp.root()];
            }
            if (true_cost_sum < (1.0 - options.alpha) * static_cast<double>(k) *
                                        budget.baseline_cost_value -
                                    1e-9)
                satisfied = false;
        }
    }

    EstimateView final_view = estimates(stats, options.width);
    result.estimate = certainty_value(mdp, policy.probs, final_view.mean_hat)[mdp.root()];
    result.violations = budget.violation_count;
    result.final_budget = budget.z;
    result.constraint_satisfied = satisfied;
    result.budget_p10 = quantile(budget.trace, 0.10);
    result.budget_p50 = quantile(budget.trace, 0.50);
    result.budget_p90 = quantile(budget.trace, 0.90);
    if (options.record_actions) result.budget_trace = budget.trace;
    return result;
}

} // namespace saver
