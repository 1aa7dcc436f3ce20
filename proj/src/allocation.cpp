#include "saver/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saver {

namespace {

double action_weight(const LayeredMdp& mdp, const TargetPolicy& policy,
                     const std::vector<double>& child_m, int s, int a) {
    const double pa = policy.probs[s][a];
    if (pa == 0.0) return 0.0;
    double inner = mdp.reward_std[s][a] * mdp.reward_std[s][a];
    double g2 = mdp.gamma * mdp.gamma;
    for (const auto& t : mdp.transitions[s][a])
        inner += g2 * t.prob * child_m[t.next_state] * child_m[t.next_state];
    return std::sqrt(pa * pa * inner);
}

} // namespace

std::vector<double> compute_M(const LayeredMdp& mdp, const TargetPolicy& policy) {
    std::vector<double> m(mdp.num_states(), 0.0);
    for (int lvl = mdp.levels; lvl >= 1; --lvl)
        for (int s : mdp.level_states[lvl - 1]) {
            double sum = 0.0;
            for (int a = 0; a < mdp.num_actions; ++a)
                sum += action_weight(mdp, policy, m, s, a);
            m[s] = sum;
        }
    return m;
}

AllocationTable compute_b_star(const LayeredMdp& mdp, const TargetPolicy& policy) {
    AllocationTable table;
    table.m = compute_M(mdp, policy);
    table.b_star.assign(mdp.num_states(), std::vector<double>(mdp.num_actions, 0.0));
    table.m_total = 0.0;
    table.m_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < mdp.num_states(); ++s) {
        table.m_total += table.m[s];
        table.m_min = std::min(table.m_min, table.m[s]);
        auto& row = table.b_star[s];
        if (table.m[s] > 0.0) {
            for (int a = 0; a < mdp.num_actions; ++a)
                row[a] = action_weight(mdp, policy, table.m, s, a) / table.m[s];
        } else {
            // degenerate state: every allocation is MSE-equivalent, spread
            // uniformly over the support of pi
            int support = 0;
            for (int a = 0; a < mdp.num_actions; ++a)
                if (policy.probs[s][a] > 0.0) support++;
            for (int a = 0; a < mdp.num_actions; ++a)
                if (policy.probs[s][a] > 0.0) row[a] = 1.0 / support;
        }
    }
    return table;
}

std::vector<double> bandit_b_star(const std::vector<double>& pi,
                                  const std::vector<double>& sigma) {
    double total = 0.0;
    for (size_t a = 0; a < pi.size(); ++a) total += pi[a] * sigma[a];
    if (total <= 0.0) throw std::invalid_argument("bandit_b_star: sum pi*sigma is zero");
    std::vector<double> b(pi.size());
    for (size_t a = 0; a < pi.size(); ++a) b[a] = pi[a] * sigma[a] / total;
    return b;
}

std::vector<double> dag_B0(const LayeredMdp& mdp, const TargetPolicy& policy) {
    const int S = mdp.num_states();
    std::vector<double> curr(S, 0.0), next(S, 0.0);  // B_{t'} and B_{t'+1}
    for (int t = mdp.levels - 1; t >= 0; --t) {
        std::swap(curr, next);  // next now holds B_{t'+1}
        for (int s = 0; s < S; ++s) {
            double sum = 0.0;
            for (int a = 0; a < mdp.num_actions; ++a)
                sum += action_weight(mdp, policy, next, s, a);
            curr[s] = sum;
        }
    }
    return curr;
}

double min_plus(double x, double y) { return std::abs(std::min(x, y)); }

ComplexityReport hardness_h2(const LayeredMdp& mdp, const TargetPolicy& policy, double alpha,
                             bool bstar_weights) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in (0,1]");
    const int S = mdp.num_states();
    ComplexityReport rep;
    rep.h2_per_state.assign(S, 0.0);
    rep.delta_c.assign(S, std::vector<double>(mdp.num_actions, 0.0));
    rep.delta_c_alpha.assign(S, std::vector<double>(mdp.num_actions, 0.0));

    AllocationTable table;
    if (bstar_weights) table = compute_b_star(mdp, policy);

    for (int s = 0; s < S; ++s) {
        const double mu_c0 = mdp.cost_mean[s][0];
        if (mu_c0 <= 0.0)
            throw std::invalid_argument("hardness_h2: baseline cost mean is zero at state " +
                                        std::to_string(s));
        double best = *std::max_element(mdp.cost_mean[s].begin(), mdp.cost_mean[s].end());
        for (int a = 0; a < mdp.num_actions; ++a) {
            rep.delta_c[s][a] = best - mdp.cost_mean[s][a];
            rep.delta_c_alpha[s][a] = (1.0 - alpha) * mu_c0 - mdp.cost_mean[s][a];
        }
        double sum = 0.0;
        for (int a = 1; a < mdp.num_actions; ++a) {
            double w = bstar_weights ? table.b_star[s][a]
                                     : policy.probs[s][a] * mdp.reward_std[s][a];
            sum += w * min_plus(rep.delta_c[s][a], rep.delta_c[s][0] - rep.delta_c[s][a]);
        }
        rep.h2_per_state[s] = sum / (alpha * mu_c0);
        rep.h2_total += rep.h2_per_state[s];
    }
    return rep;
}

double hardness_h1(double v_c_baseline, double v_c_oracle, double alpha) {
    if (v_c_baseline <= 0.0) throw std::invalid_argument("hardness_h1: baseline value must be > 0");
    double delta0 = std::abs(v_c_oracle - v_c_baseline);
    return (alpha * v_c_baseline + delta0) / (alpha * v_c_baseline);
}

WorstCostPolicy worst_cost_policy(const LayeredMdp& mdp) {
    WorstCostPolicy out;
    out.action_of.assign(mdp.num_states(), 0);
    std::vector<double> v(mdp.num_states(), 0.0);
    for (int lvl = mdp.levels; lvl >= 1; --lvl)
        for (int s : mdp.level_states[lvl - 1]) {
            double best = std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < mdp.num_actions; ++a) {
                double cont = 0.0;
                for (const auto& t : mdp.transitions[s][a]) cont += t.prob * v[t.next_state];
                double q = mdp.cost_mean[s][a] + mdp.gamma * cont;
                if (q < best) {
                    best = q;
                    best_a = a;
                }
            }
            v[s] = best;
            out.action_of[s] = best_a;
        }
    out.value = v[mdp.root()];
    return out;
}

TractabilityResult tractability_from(double c_sigma, double cost_ratio, double alpha) {
    TractabilityResult res;
    res.c_sigma = c_sigma;
    res.cost_ratio = cost_ratio;
    const double gap = 1.0 - cost_ratio;
    if (gap <= 0.0) {
        // worst policy at least as costly as the baseline: constraint vacuous
        res.tractable = true;
        res.n_min = 0.0;
        return res;
    }
    const double denom = (c_sigma / alpha) * gap - 1.0;
    if (denom <= 0.0) {
        res.tractable = false;
        res.n_min = std::numeric_limits<double>::infinity();
        return res;
    }
    const double sqrt_n = (gap / alpha) / denom;
    res.tractable = true;
    res.n_min = std::ceil(sqrt_n * sqrt_n);
    return res;
}

TractabilityResult tractability_bound(const LayeredMdp& mdp, const TargetPolicy& policy,
                                      double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in (0,1]");

    double c_sigma = 0.0;
    AllocationTable table = compute_b_star(mdp, policy);
    for (int s = 0; s < mdp.num_states(); ++s) {
        if (table.m[s] <= 0.0) continue;  // no variance contribution, skip
        for (int a = 0; a < mdp.num_actions; ++a)
            c_sigma = std::max(c_sigma, table.b_star[s][a] / table.m[s]);
    }

    double v_baseline = true_value(mdp, baseline_policy(mdp), Channel::Cost)[mdp.root()];
    if (v_baseline <= 0.0)
        throw std::invalid_argument("tractability_bound: baseline cost value is zero");
    return tractability_from(c_sigma, worst_cost_policy(mdp).value / v_baseline, alpha);
}

ComplexityReport complexity_report(const LayeredMdp& mdp, const TargetPolicy& policy,
                                   double alpha) {
    ComplexityReport rep = hardness_h2(mdp, policy, alpha);
    TractabilityResult tract = tractability_bound(mdp, policy, alpha);
    rep.c_sigma = tract.c_sigma;
    rep.tractable = tract.tractable;
    rep.n_min = tract.n_min;
    rep.worst_cost_value = worst_cost_policy(mdp).value;

    double v_baseline = true_value(mdp, baseline_policy(mdp), Channel::Cost)[mdp.root()];
    AllocationTable table = compute_b_star(mdp, policy);
    double v_oracle = 0.0;
    {
        // cost value of sampling in the oracle proportions
        TargetPolicy oracle_pi;
        oracle_pi.probs = table.b_star;
        v_oracle = true_value(mdp, oracle_pi, Channel::Cost)[mdp.root()];
    }
    rep.h1 = hardness_h1(v_baseline, v_oracle, alpha);
    return rep;
}

} // namespace saver
