#pragma once

#include <limits>
#include <vector>

#include "saver/mdp.hpp"

namespace saver {

/// Per-state normalization factors M(s) and oracle sampling proportions
/// b*(a|s). Rows satisfy b(a|s) * M(s) =
/// sqrt(pi^2(a|s)[sigma^2(s,a) + gamma^2 * sum_s' P(s'|s,a) M^2(s')]).
struct AllocationTable {
    std::vector<double> m;                   // M(s) per state
    std::vector<std::vector<double>> b_star; // proportions per state
    double m_total = 0.0;                    // sum over states of M(s)
    double m_min = 0.0;                      // min over states of M(s)
};

struct ComplexityReport {
    std::vector<double> h2_per_state;
    double h2_total = 0.0;
    double h1 = 1.0;
    std::vector<std::vector<double>> delta_c;       // max_a' mu_c(s,a') - mu_c(s,a)
    std::vector<std::vector<double>> delta_c_alpha; // (1-alpha) mu_c(s,0) - mu_c(s,a)
    double c_sigma = 0.0;                           // max_{s,a} b*(a|s) / M(s)
    double worst_cost_value = 0.0;                  // V_c of the cost-minimizing policy
    bool tractable = false;
    double n_min = std::numeric_limits<double>::infinity();
};

/// Backward recursion for the per-state normalization factor:
///   M(s) = sum_a sqrt(pi^2(a|s) [sigma^2(s,a) + gamma^2 sum_s' P(s'|s,a) M^2(s')]).
std::vector<double> compute_M(const LayeredMdp& mdp, const TargetPolicy& policy);

/// Oracle proportions on a tree (or bandit). States with M(s) = 0 get a
/// uniform row over the support of pi(.|s).
AllocationTable compute_b_star(const LayeredMdp& mdp, const TargetPolicy& policy);

/// Single-state special case: b*(a) = pi(a) sigma(a) / sum pi sigma.
/// Throws std::invalid_argument when sum pi sigma = 0.
std::vector<double> bandit_b_star(const std::vector<double>& pi,
                                  const std::vector<double>& sigma);

/// Backward sweep estimating B_0(s) on a layered DAG:
///   B_L(s) = 0;  for t' = L-1..0:
///   B_{t'}(s) = sum_a sqrt(pi^2(a|s)(sigma^2(s,a) + gamma^2 sum_s' P(s'|s,a) B_{t'+1}^2(s'))).
/// Coincides with compute_M on trees.
std::vector<double> dag_B0(const LayeredMdp& mdp, const TargetPolicy& policy);

/// |min(x, y)|
double min_plus(double x, double y);

/// Gap-weighted per-state safety hardness; requires mu_c(s,0) > 0 for all s.
/// The variant flag switches the weights from pi(a|s) sigma(s,a) to b*(a|s).
ComplexityReport hardness_h2(const LayeredMdp& mdp, const TargetPolicy& policy, double alpha,
                             bool bstar_weights = false);

/// (alpha * v_baseline + |v_oracle - v_baseline|) / (alpha * v_baseline)
double hardness_h1(double v_c_baseline, double v_c_oracle, double alpha);

struct WorstCostPolicy {
    std::vector<int> action_of;  // argmin-cost action per state
    double value = 0.0;          // V_c at the root
};

/// Exact backward dynamic program minimizing the cost value; ties broken
/// toward the lowest action index.
WorstCostPolicy worst_cost_policy(const LayeredMdp& mdp);

struct TractabilityResult {
    bool tractable = false;
    double n_min = std::numeric_limits<double>::infinity();
    double c_sigma = 0.0;
    double cost_ratio = 0.0;  // V_c(worst) / V_c(baseline)
};

/// Smallest integer budget satisfying the tractability inequality, or
/// (false, inf) when no budget does.
TractabilityResult tractability_bound(const LayeredMdp& mdp, const TargetPolicy& policy,
                                      double alpha);

/// Core arithmetic of the bound, from C_sigma, the worst-to-baseline cost
/// ratio r, and alpha.
TractabilityResult tractability_from(double c_sigma, double cost_ratio, double alpha);

/// Full report: hardness parameters, C_sigma, worst-cost value, tractability.
ComplexityReport complexity_report(const LayeredMdp& mdp, const TargetPolicy& policy,
                                   double alpha);

} // namespace saver
