#include "saver/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace saver {

namespace {

constexpr double kRowTol = 1e-9;

std::string sa(int s, int a) {
    return "state " + std::to_string(s) + ", action " + std::to_string(a);
}

} // namespace

TargetPolicy baseline_policy(const LayeredMdp& mdp) {
    TargetPolicy p;
    p.probs.assign(mdp.num_states(), std::vector<double>(mdp.num_actions, 0.0));
    for (auto& row : p.probs) row[0] = 1.0;
    return p;
}

TargetPolicy deterministic_policy(const LayeredMdp& mdp, const std::vector<int>& action_of) {
    TargetPolicy p;
    p.probs.assign(mdp.num_states(), std::vector<double>(mdp.num_actions, 0.0));
    for (int s = 0; s < mdp.num_states(); ++s) p.probs[s][action_of[s]] = 1.0;
    return p;
}

void validate(const LayeredMdp& mdp, MdpMode mode) {
    const int S = mdp.num_states();
    if (mdp.levels < 1 || S == 0)
        throw ValidationError(ValidationCode::BadStructure, "empty environment");
    if (static_cast<int>(mdp.level_states.size()) != mdp.levels)
        throw ValidationError(ValidationCode::BadStructure, "level_states size != levels");
    if (mdp.level_states[0].size() != 1)
        throw ValidationError(ValidationCode::BadStructure, "level 1 must hold the single root");
    if (mode == MdpMode::Bandit && (mdp.levels != 1 || S != 1))
        throw ValidationError(ValidationCode::BadStructure, "bandit must be one level, one state");

    for (int s = 0; s < S; ++s) {
        const int lvl = mdp.state_level[s];
        if (lvl < 1 || lvl > mdp.levels)
            throw ValidationError(ValidationCode::BadStructure, "state level out of range");
        for (int a = 0; a < mdp.num_actions; ++a) {
            if (mdp.reward_std[s][a] < 0.0 || mdp.cost_std[s][a] < 0.0)
                throw ValidationError(ValidationCode::NegativeStd, "negative std at " + sa(s, a));
            if (mdp.reward_mean[s][a] < 0.0 || mdp.reward_mean[s][a] > mdp.eta ||
                mdp.cost_mean[s][a] < 0.0 || mdp.cost_mean[s][a] > mdp.eta)
                throw ValidationError(ValidationCode::MeanOutOfRange,
                                      "mean outside [0, eta] at " + sa(s, a));

            const auto& row = mdp.transitions[s][a];
            if (lvl == mdp.levels) {
                if (!row.empty())
                    throw ValidationError(ValidationCode::LevelSkip,
                                          "terminal-level state " + std::to_string(s) +
                                              " has outgoing transitions");
                continue;
            }
            if (row.empty())
                throw ValidationError(ValidationCode::RowNotStochastic,
                                      "missing transition row at " + sa(s, a));
            double sum = 0.0;
            for (const auto& t : row) {
                if (t.prob < 0.0)
                    throw ValidationError(ValidationCode::RowNotStochastic,
                                          "negative probability at " + sa(s, a));
                if (mdp.state_level[t.next_state] != lvl + 1)
                    throw ValidationError(ValidationCode::LevelSkip,
                                          "transition skips a level at " + sa(s, a));
                sum += t.prob;
            }
            if (std::abs(sum - 1.0) > kRowTol)
                throw ValidationError(ValidationCode::RowNotStochastic,
                                      "row does not sum to 1 at " + sa(s, a));
        }
    }

    if (mode == MdpMode::Tree) {
        // each non-root state reachable through exactly one (state, action)
        std::vector<int> parents(S, 0);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < mdp.num_actions; ++a)
                for (const auto& t : mdp.transitions[s][a])
                    if (t.prob > 0.0) parents[t.next_state]++;
        for (int s = 0; s < S; ++s)
            if (s != mdp.root() && parents[s] > 1)
                throw ValidationError(ValidationCode::TreeMultiParent,
                                      "state " + std::to_string(s) + " has multiple parents");
    }
}

void validate_policy(const LayeredMdp& mdp, const TargetPolicy& policy) {
    if (static_cast<int>(policy.probs.size()) != mdp.num_states())
        throw ValidationError(ValidationCode::BadStructure, "policy size != state count");
    for (int s = 0; s < mdp.num_states(); ++s) {
        double sum = 0.0;
        for (double p : policy.probs[s]) {
            if (p < 0.0)
                throw ValidationError(ValidationCode::RowNotStochastic,
                                      "negative policy mass at state " + std::to_string(s));
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTol)
            throw ValidationError(ValidationCode::RowNotStochastic,
                                  "policy row does not sum to 1 at state " + std::to_string(s));
    }
}

std::vector<double> true_value(const LayeredMdp& mdp, const TargetPolicy& policy, Channel channel) {
    const auto& mean = (channel == Channel::Reward) ? mdp.reward_mean : mdp.cost_mean;
    std::vector<double> v(mdp.num_states(), 0.0);
    for (int lvl = mdp.levels; lvl >= 1; --lvl) {
        for (int s : mdp.level_states[lvl - 1]) {
            double val = 0.0;
            for (int a = 0; a < mdp.num_actions; ++a) {
                const double pa = policy.probs[s][a];
                if (pa == 0.0) continue;
                double cont = 0.0;
                for (const auto& t : mdp.transitions[s][a]) cont += t.prob * v[t.next_state];
                val += pa * (mean[s][a] + mdp.gamma * cont);
            }
            v[s] = val;
        }
    }
    return v;
}

StepOutcome sample_step(const LayeredMdp& mdp, int state, int action, Rng& rng) {
    StepOutcome out;
    out.reward = rng.normal(mdp.reward_mean[state][action], mdp.reward_std[state][action]);
    out.cost = rng.normal(mdp.cost_mean[state][action], mdp.cost_std[state][action]);
    out.next_state = -1;
    if (!mdp.is_terminal_level(state)) {
        const auto& row = mdp.transitions[state][action];
        double u = rng.uniform();
        double acc = 0.0;
        out.next_state = row.back().next_state;
        for (const auto& t : row) {
            acc += t.prob;
            if (u < acc) {
                out.next_state = t.next_state;
                break;
            }
        }
    }
    return out;
}

EpisodeRecord run_episode(const LayeredMdp& mdp, const ActionSelector& select, Rng& rng) {
    EpisodeRecord rec;
    rec.steps.reserve(mdp.levels);
    int state = mdp.root();
    for (int lvl = 1; lvl <= mdp.levels; ++lvl) {
        int action = select(state);
        if (action < 0 || action >= mdp.num_actions)
            throw std::runtime_error("selector returned invalid action " +
                                     std::to_string(action));
        StepOutcome o = sample_step(mdp, state, action, rng);
        rec.steps.push_back({state, action, o.reward, o.cost});
        state = o.next_state;
    }
    return rec;
}

} // namespace saver
