#include "saver/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace saver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// weight(s,a) = sqrt(pi^2 (sigma^2 + gamma^2 sum P child^2)) with the
// conventions pi = 0 -> 0 and sigma or child = +inf -> +inf.
double plugin_weight(const LayeredMdp& mdp, const TargetPolicy& policy,
                     const std::vector<std::vector<double>>& sigma,
                     const std::vector<double>& child, int s, int a) {
    const double pa = policy.probs[s][a];
    if (pa == 0.0) return 0.0;
    const double sig = sigma[s][a];
    if (std::isinf(sig)) return kInf;
    double inner = sig * sig;
    const double g2 = mdp.gamma * mdp.gamma;
    for (const auto& t : mdp.transitions[s][a]) {
        if (t.prob == 0.0) continue;
        if (std::isinf(child[t.next_state])) return kInf;
        inner += g2 * t.prob * child[t.next_state] * child[t.next_state];
    }
    return std::sqrt(pa * pa * inner);
}

void fill_row(const LayeredMdp& mdp, const TargetPolicy& policy, const EstimateView& view,
              const std::vector<double>& weights, int s, std::vector<double>& row) {
    const int A = mdp.num_actions;
    bool any_unvisited = false;
    for (int a = 0; a < A; ++a)
        if (std::isinf(view.std_ucb[s][a])) any_unvisited = true;
    if (any_unvisited) {
        int k = 0;
        for (int a = 0; a < A; ++a)
            if (std::isinf(view.std_ucb[s][a])) k++;
        for (int a = 0; a < A; ++a)
            row[a] = std::isinf(view.std_ucb[s][a]) ? 1.0 / k : 0.0;
        return;
    }
    bool any_inf = false;
    double total = 0.0;
    for (int a = 0; a < A; ++a) {
        if (std::isinf(weights[a])) any_inf = true;
        total += weights[a];
    }
    if (any_inf) {
        // diverging through an unvisited descendant: steer there
        int k = 0;
        for (int a = 0; a < A; ++a)
            if (std::isinf(weights[a])) k++;
        for (int a = 0; a < A; ++a) row[a] = std::isinf(weights[a]) ? 1.0 / k : 0.0;
        return;
    }
    if (total > 0.0) {
        for (int a = 0; a < A; ++a) row[a] = weights[a] / total;
        return;
    }
    int support = 0;
    for (int a = 0; a < A; ++a)
        if (policy.probs[s][a] > 0.0) support++;
    for (int a = 0; a < A; ++a)
        row[a] = (policy.probs[s][a] > 0.0) ? 1.0 / support : 0.0;
}

void finish_table(AllocationTable& table) {
    table.m_total = 0.0;
    table.m_min = kInf;
    for (double v : table.m) {
        table.m_total += v;
        table.m_min = std::min(table.m_min, v);
    }
}

} // namespace

SufficientStats SufficientStats::zeros(const LayeredMdp& mdp) {
    SufficientStats s;
    const int S = mdp.num_states(), A = mdp.num_actions;
    s.count.assign(S, std::vector<int64_t>(A, 0));
    s.sum_reward.assign(S, std::vector<double>(A, 0.0));
    s.sum_reward_sq.assign(S, std::vector<double>(A, 0.0));
    s.sum_cost.assign(S, std::vector<double>(A, 0.0));
    return s;
}

void update(SufficientStats& stats, const EpisodeRecord& episode) {
    for (const auto& step : episode.steps) {
        stats.count[step.state][step.action]++;
        stats.sum_reward[step.state][step.action] += step.reward;
        stats.sum_reward_sq[step.state][step.action] += step.reward * step.reward;
        stats.sum_cost[step.state][step.action] += step.cost;
        stats.steps++;
    }
    stats.episodes++;
}

double width(int64_t T, const WidthParams& params) {
    if (params.mode == WidthMode::Zero) return 0.0;
    if (T <= 0) return kInf;
    const double n = static_cast<double>(params.budget);
    const double sa = static_cast<double>(params.num_states) * params.num_actions;
    if (params.mode == WidthMode::Appendix) {
        const double c = 2.0 * params.eta + 4.0 * params.eta * params.eta;
        return c * std::sqrt(std::log(sa * n * (n + 1.0) / params.delta) / (2.0 * T));
    }
    return params.horizon * std::sqrt(std::log(sa * n * (n + 1.0)) / T);
}

EstimateView estimates(const SufficientStats& stats, const WidthParams& params) {
    EstimateView v;
    const size_t S = stats.count.size();
    const size_t A = S ? stats.count[0].size() : 0;
    auto blank = std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0));
    v.mean_hat = blank;
    v.std_hat = blank;
    v.std_ucb = blank;
    v.cost_mean_hat = blank;
    v.cost_lcb = blank;
    v.conf_width = blank;
    for (size_t s = 0; s < S; ++s)
        for (size_t a = 0; a < A; ++a) {
            const int64_t T = stats.count[s][a];
            const double w = width(T, params);
            v.conf_width[s][a] = w;
            if (T > 0) {
                const double mean = stats.sum_reward[s][a] / T;
                v.mean_hat[s][a] = mean;
                v.std_hat[s][a] =
                    std::sqrt(std::max(0.0, stats.sum_reward_sq[s][a] / T - mean * mean));
                v.cost_mean_hat[s][a] = stats.sum_cost[s][a] / T;
            }
            v.std_ucb[s][a] = v.std_hat[s][a] + w;
            v.cost_lcb[s][a] = std::isinf(w) ? -kInf
                                             : v.cost_mean_hat[s][a] - params.lcb_scale * w;
        }
    return v;
}

std::vector<double> certainty_value(const LayeredMdp& mdp,
                                    const std::vector<std::vector<double>>& policy_probs,
                                    const std::vector<std::vector<double>>& means) {
    std::vector<double> y(mdp.num_states(), 0.0);
    for (int lvl = mdp.levels; lvl >= 1; --lvl)
        for (int s : mdp.level_states[lvl - 1]) {
            double val = 0.0;
            for (int a = 0; a < mdp.num_actions; ++a) {
                const double pa = policy_probs[s][a];
                if (pa == 0.0) continue;
                double cont = 0.0;
                for (const auto& t : mdp.transitions[s][a]) cont += t.prob * y[t.next_state];
                val += pa * (means[s][a] + mdp.gamma * cont);
            }
            y[s] = val;
        }
    return y;
}

AllocationTable plug_in_allocation(const LayeredMdp& mdp, const TargetPolicy& policy,
                                   const EstimateView& view) {
    AllocationTable table;
    const int S = mdp.num_states(), A = mdp.num_actions;
    table.m.assign(S, 0.0);
    table.b_star.assign(S, std::vector<double>(A, 0.0));
    std::vector<double> weights(A);
    for (int lvl = mdp.levels; lvl >= 1; --lvl)
        for (int s : mdp.level_states[lvl - 1]) {
            double sum = 0.0;
            for (int a = 0; a < A; ++a) {
                weights[a] = plugin_weight(mdp, policy, view.std_ucb, table.m, s, a);
                sum += weights[a];
            }
            table.m[s] = sum;
            fill_row(mdp, policy, view, weights, s, table.b_star[s]);
        }
    finish_table(table);
    return table;
}

AllocationTable plug_in_allocation_dag(const LayeredMdp& mdp, const TargetPolicy& policy,
                                       const EstimateView& view) {
    AllocationTable table;
    const int S = mdp.num_states(), A = mdp.num_actions;
    // B0 sweep on the plug-in sigma
    std::vector<double> curr(S, 0.0), next(S, 0.0);
    std::vector<double> weights(A);
    for (int t = mdp.levels - 1; t >= 0; --t) {
        std::swap(curr, next);
        for (int s = 0; s < S; ++s) {
            double sum = 0.0;
            for (int a = 0; a < A; ++a)
                sum += plugin_weight(mdp, policy, view.std_ucb, next, s, a);
            curr[s] = sum;
        }
    }
    table.m = curr;
    table.b_star.assign(S, std::vector<double>(A, 0.0));
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a)
            weights[a] = plugin_weight(mdp, policy, view.std_ucb, table.m, s, a);
        fill_row(mdp, policy, view, weights, s, table.b_star[s]);
    }
    finish_table(table);
    return table;
}

} // namespace saver
