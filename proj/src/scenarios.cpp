#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "saver/harness.hpp"

namespace saver {

namespace {

LayeredMdp make_bandit(std::vector<double> mean, std::vector<double> stdev,
                       std::vector<double> cost_mean, std::vector<double> cost_std,
                       double eta) {
    LayeredMdp mdp;
    mdp.levels = 1;
    mdp.num_actions = static_cast<int>(mean.size());
    mdp.state_level = {1};
    mdp.level_states = {{0}};
    mdp.transitions.assign(1, std::vector<std::vector<Transition>>(mdp.num_actions));
    mdp.reward_mean = {std::move(mean)};
    mdp.reward_std = {std::move(stdev)};
    mdp.cost_mean = {std::move(cost_mean)};
    mdp.cost_std = {std::move(cost_std)};
    mdp.gamma = 1.0;
    mdp.eta = eta;
    return mdp;
}

TargetPolicy uniform_policy(const LayeredMdp& mdp) {
    TargetPolicy p;
    p.probs.assign(mdp.num_states(),
                   std::vector<double>(mdp.num_actions, 1.0 / mdp.num_actions));
    return p;
}

std::vector<int64_t> default_grid() { return {500, 1000, 2000, 4000, 8000}; }

Scenario intractable_bandit() {
    Scenario sc;
    sc.id = "intractable_bandit";
    const double alpha = 0.25;
    // three arms: the high-variance arm has zero constraint value
    sc.mdp = make_bandit({0.5, 0.5, 0.5}, {0.001, 0.001, 0.25}, {0.5, 0.5 + alpha, 0.0},
                         {0.0, 0.0, 0.0}, 1.0);
    sc.mode = MdpMode::Bandit;
    sc.policy = uniform_policy(sc.mdp);
    sc.defaults.alpha = alpha;
    sc.defaults.delta = 0.1;
    sc.defaults.lcb_scale = 0.01;
    sc.defaults.budgets = default_grid();
    return sc;
}

Scenario bandit11() {
    Scenario sc;
    sc.id = "bandit11";
    const int arms = 11;
    std::vector<double> mean(arms), stdev(arms), cmean(arms), cstd(arms, 0.0);
    mean[0] = 0.5;
    stdev[0] = 0.01;
    mean[1] = 0.9;
    stdev[1] = 0.01;
    for (int a = 2; a < arms; ++a) {
        mean[a] = 0.02 + 0.01 * (a - 2) / 8.0;  // spread across [0.02, 0.03]
        stdev[a] = std::sqrt(40.0);
    }
    cmean = mean;  // constraint-value means equal the reward means
    sc.mdp = make_bandit(mean, stdev, cmean, cstd, 1.0);
    sc.mode = MdpMode::Bandit;
    TargetPolicy pi;
    pi.probs.assign(1, std::vector<double>(arms, 0.2 / 9.0));
    pi.probs[0][0] = 0.4;
    pi.probs[0][1] = 0.4;
    sc.policy = pi;
    sc.defaults.alpha = 0.9;
    sc.defaults.delta = 0.1;
    sc.defaults.lcb_scale = 0.05;
    sc.defaults.budgets = default_grid();
    return sc;
}

Scenario tree4x2() {
    Scenario sc;
    sc.id = "tree4x2";
    LayeredMdp mdp;
    mdp.levels = 4;
    mdp.num_actions = 2;
    // complete binary tree: 1 + 2 + 4 + 8 = 15 states, action a leads
    // deterministically to child 2*s + 1 + a
    const int S = 15;
    mdp.state_level.assign(S, 0);
    mdp.level_states.assign(4, {});
    for (int s = 0; s < S; ++s) {
        int lvl = 1;
        for (int t = s; t > 0; t = (t - 1) / 2) lvl++;
        mdp.state_level[s] = lvl;
        mdp.level_states[lvl - 1].push_back(s);
    }
    mdp.transitions.assign(S, std::vector<std::vector<Transition>>(2));
    for (int s = 0; s < S; ++s)
        if (mdp.state_level[s] < 4)
            for (int a = 0; a < 2; ++a)
                mdp.transitions[s][a] = {{2 * s + 1 + a, 1.0}};
    mdp.reward_mean.assign(S, {1.0, 0.5});
    mdp.reward_std.assign(S, {0.1, std::sqrt(20.0)});
    // the high-variance action carries the lower constraint value; chosen so
    // the oracle-tracked policy stays above the alpha = 0.25 threshold
    mdp.cost_mean.assign(S, {0.5, 0.3});
    mdp.cost_std.assign(S, {0.0, 0.0});
    mdp.gamma = 1.0;
    mdp.eta = 1.0;
    sc.mdp = std::move(mdp);
    sc.mode = MdpMode::Tree;
    TargetPolicy pi;
    pi.probs.assign(S, {0.95, 0.05});
    sc.policy = pi;
    sc.defaults.alpha = 0.25;
    sc.defaults.delta = 0.05;
    sc.defaults.lcb_scale = 0.05;
    sc.defaults.budgets = default_grid();
    return sc;
}

} // namespace

Scenario scenario_grid4x4(bool lu_high_variance) {
    Scenario sc;
    sc.id = "grid4x4";
    const int W = 4, H = 4, L = 4;
    // actions: 0 = right, 1 = down, 2 = left, 3 = up; moves succeed with
    // probability 0.9 and stay in place otherwise (walls force a stay).
    const int dx[4] = {1, 0, -1, 0};
    const int dy[4] = {0, 1, 0, -1};
    const double kMove = 0.9;

    // unroll the grid over the 4 timesteps into a layered DAG
    std::vector<std::vector<int>> cell_ids(L, std::vector<int>(W * H, -1));
    LayeredMdp mdp;
    mdp.levels = L;
    mdp.num_actions = 4;
    mdp.gamma = 1.0;
    mdp.eta = 1.0;
    mdp.level_states.assign(L, {});

    auto add_state = [&](int lvl, int cell) {
        if (cell_ids[lvl][cell] >= 0) return cell_ids[lvl][cell];
        int id = static_cast<int>(mdp.state_level.size());
        cell_ids[lvl][cell] = id;
        mdp.state_level.push_back(lvl + 1);
        mdp.level_states[lvl].push_back(id);
        return id;
    };

    add_state(0, 0);  // start at the top-left corner
    for (int lvl = 0; lvl + 1 < L; ++lvl)
        for (int cell = 0; cell < W * H; ++cell) {
            if (cell_ids[lvl][cell] < 0) continue;
            int x = cell % W, y = cell / W;
            for (int a = 0; a < 4; ++a) {
                int nx = x + dx[a], ny = y + dy[a];
                if (nx >= 0 && nx < W && ny >= 0 && ny < H) add_state(lvl + 1, ny * W + nx);
                add_state(lvl + 1, cell);  // stay
            }
        }

    const int S = static_cast<int>(mdp.state_level.size());
    mdp.transitions.assign(S, std::vector<std::vector<Transition>>(4));
    for (int lvl = 0; lvl + 1 < L; ++lvl)
        for (int cell = 0; cell < W * H; ++cell) {
            int id = cell_ids[lvl][cell];
            if (id < 0) continue;
            int x = cell % W, y = cell / W;
            for (int a = 0; a < 4; ++a) {
                int nx = x + dx[a], ny = y + dy[a];
                bool wall = nx < 0 || nx >= W || ny < 0 || ny >= H;
                int stay_id = cell_ids[lvl + 1][cell];
                if (wall) {
                    mdp.transitions[id][a] = {{stay_id, 1.0}};
                } else {
                    int move_id = cell_ids[lvl + 1][ny * W + nx];
                    mdp.transitions[id][a] = {{move_id, kMove}, {stay_id, 1.0 - kMove}};
                }
            }
        }

    const double lu_var = lu_high_variance ? 20.0 : 0.01;
    mdp.reward_mean.assign(S, {1.0, 1.0, 0.5, 0.5});
    mdp.reward_std.assign(S, {0.1, 0.1, std::sqrt(lu_var), std::sqrt(lu_var)});
    mdp.cost_mean.assign(S, {0.5, 0.5, 0.35, 0.35});
    mdp.cost_std.assign(S, {0.0, 0.0, 0.0, 0.0});

    sc.mdp = std::move(mdp);
    sc.mode = MdpMode::Dag;
    TargetPolicy pi;
    pi.probs.assign(S, {0.45, 0.45, 0.05, 0.05});
    sc.policy = pi;
    sc.defaults.alpha = 0.25;
    sc.defaults.delta = 0.05;
    sc.defaults.lcb_scale = 0.05;
    sc.defaults.budgets = default_grid();
    return sc;
}

std::vector<std::string> scenario_ids() {
    return {"intractable_bandit", "bandit11", "tree4x2", "grid4x4"};
}

Scenario scenario(const std::string& id) {
    if (id == "intractable_bandit") return intractable_bandit();
    if (id == "bandit11") return bandit11();
    if (id == "tree4x2") return tree4x2();
    if (id == "grid4x4") return scenario_grid4x4(true);
    throw std::invalid_argument("unknown scenario: " + id);
}

LayeredMdp load_arm_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");

    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) out.push_back(field);
        return out;
    };

    std::map<std::string, int> col;
    {
        auto names = split(header);
        for (size_t i = 0; i < names.size(); ++i) col[names[i]] = static_cast<int>(i);
        for (const char* need : {"arm", "reward_mean", "reward_std", "cost_mean", "cost_std"})
            if (!col.count(need))
                throw std::runtime_error(path + ": missing column " + need);
    }

    std::map<int, std::array<double, 4>> rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() < col.size())
            throw std::runtime_error(path + ": parse error at line " + std::to_string(lineno));
        try {
            int arm = std::stoi(fields[col["arm"]]);
            rows[arm] = {std::stod(fields[col["reward_mean"]]),
                         std::stod(fields[col["reward_std"]]),
                         std::stod(fields[col["cost_mean"]]),
                         std::stod(fields[col["cost_std"]])};
        } catch (const std::exception&) {
            throw std::runtime_error(path + ": parse error at line " + std::to_string(lineno));
        }
    }
    if (rows.empty()) throw std::runtime_error(path + ": empty arm table");

    const int arms = static_cast<int>(rows.size());
    std::vector<double> mean(arms), stdev(arms), cmean(arms), cstd(arms);
    double max_mean = 0.0;
    int expect = 0;
    for (const auto& [arm, vals] : rows) {
        if (arm != expect)
            throw std::runtime_error(path + ": arm ids must be consecutive from 0");
        mean[arm] = vals[0];
        stdev[arm] = vals[1];
        cmean[arm] = vals[2];
        cstd[arm] = vals[3];
        max_mean = std::max({max_mean, vals[0], vals[2]});
        expect++;
    }
    LayeredMdp mdp = make_bandit(mean, stdev, cmean, cstd, std::max(1.0, max_mean));
    validate(mdp, MdpMode::Bandit);
    return mdp;
}

} // namespace saver
