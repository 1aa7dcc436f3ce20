#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "saver/rng.hpp"

namespace saver {

enum class MdpMode { Bandit, Tree, Dag };

enum class ValidationCode {
    RowNotStochastic,
    TreeMultiParent,
    LevelSkip,
    NegativeStd,
    MeanOutOfRange,
    BadStructure,
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(ValidationCode code, std::string msg)
        : std::runtime_error(std::move(msg)), code_(code) {}
    ValidationCode code() const { return code_; }

private:
    ValidationCode code_;
};

struct Transition {
    int next_state;
    double prob;
};

/// Tabular layered environment. A bandit is a single level with one state;
/// tree and DAG environments have L levels with transitions only from level
/// l to level l+1. Action 0 is the baseline (safe) action everywhere.
struct LayeredMdp {
    int levels = 1;                              // L
    int num_actions = 1;                         // A+1, uniform across states
    std::vector<int> state_level;                // level of each state, 1-based
    std::vector<std::vector<int>> level_states;  // states per level (index 0 = level 1)
    // indexed [state][action]
    std::vector<std::vector<std::vector<Transition>>> transitions;
    std::vector<std::vector<double>> reward_mean;
    std::vector<std::vector<double>> reward_std;
    std::vector<std::vector<double>> cost_mean;
    std::vector<std::vector<double>> cost_std;
    double gamma = 1.0;
    double eta = 1.0;  // all means lie in [0, eta]

    int num_states() const { return static_cast<int>(state_level.size()); }
    int root() const { return level_states.at(0).at(0); }
    bool is_terminal_level(int state) const { return state_level[state] == levels; }
};

struct TargetPolicy {
    // probs[state] is a distribution over the A+1 actions
    std::vector<std::vector<double>> probs;
};

/// Deterministic baseline: probability one on action 0 in every state.
TargetPolicy baseline_policy(const LayeredMdp& mdp);

/// One-hot policy from a per-state action map.
TargetPolicy deterministic_policy(const LayeredMdp& mdp, const std::vector<int>& action_of);

struct EpisodeStep {
    int state;
    int action;
    double reward;
    double cost;
};

struct EpisodeRecord {
    std::vector<EpisodeStep> steps;
};

enum class Channel { Reward, Cost };

/// Checks all LayeredMdp invariants for the requested mode; throws
/// ValidationError on the first violation.
void validate(const LayeredMdp& mdp, MdpMode mode);

void validate_policy(const LayeredMdp& mdp, const TargetPolicy& policy);

/// Exact backward recursion
///   V(s) = sum_a pi(a|s) [mean(s,a) + gamma * sum_{s'} P(s'|s,a) V(s')]
/// over the chosen channel; no sampling.
std::vector<double> true_value(const LayeredMdp& mdp, const TargetPolicy& policy, Channel channel);

struct StepOutcome {
    double reward;
    double cost;
    int next_state;  // -1 when the level-L interaction terminates
};

/// Draws reward ~ N(mu, sigma), cost ~ N(mu_c, sigma_c), and the successor
/// state. Samples are not clipped to [0, eta].
StepOutcome sample_step(const LayeredMdp& mdp, int state, int action, Rng& rng);

using ActionSelector = std::function<int(int state)>;

/// Rolls one episode of length L from the root, invoking the selector at
/// each visited state.
EpisodeRecord run_episode(const LayeredMdp& mdp, const ActionSelector& select, Rng& rng);

} // namespace saver
