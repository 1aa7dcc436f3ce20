#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "saver/harness.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace saver {

using ordered_json = nlohmann::ordered_json;

namespace {

const char* mode_name(MdpMode mode) {
    switch (mode) {
        case MdpMode::Bandit: return "bandit";
        case MdpMode::Tree: return "tree";
        case MdpMode::Dag: return "dag";
    }
    return "bandit";
}

MdpMode parse_mode(const std::string& name) {
    if (name == "bandit") return MdpMode::Bandit;
    if (name == "tree") return MdpMode::Tree;
    if (name == "dag") return MdpMode::Dag;
    throw std::invalid_argument("unknown mode: " + name);
}

const char* width_mode_name(WidthMode mode) {
    switch (mode) {
        case WidthMode::Appendix: return "appendix";
        case WidthMode::Main: return "main";
        case WidthMode::Zero: return "zero";
    }
    return "appendix";
}

WidthMode parse_width_mode(const std::string& name) {
    if (name == "appendix") return WidthMode::Appendix;
    if (name == "main") return WidthMode::Main;
    if (name == "zero") return WidthMode::Zero;
    throw std::invalid_argument("unknown width mode: " + name);
}

ordered_json mdp_to_json(const LayeredMdp& mdp, MdpMode mode) {
    ordered_json j;
    j["mode"] = mode_name(mode);
    j["gamma"] = mdp.gamma;
    j["eta"] = mdp.eta;
    j["levels"] = mdp.level_states;
    j["reward_mean"] = mdp.reward_mean;
    j["reward_std"] = mdp.reward_std;
    j["cost_mean"] = mdp.cost_mean;
    j["cost_std"] = mdp.cost_std;
    ordered_json trans = ordered_json::array();
    for (const auto& per_state : mdp.transitions) {
        ordered_json rows = ordered_json::array();
        for (const auto& row : per_state) {
            ordered_json pairs = ordered_json::array();
            for (const auto& t : row) pairs.push_back({t.next_state, t.prob});
            rows.push_back(pairs);
        }
        trans.push_back(rows);
    }
    j["transitions"] = trans;
    return j;
}

std::pair<LayeredMdp, MdpMode> mdp_from_json(const ordered_json& j) {
    LayeredMdp mdp;
    MdpMode mode = parse_mode(j.at("mode").get<std::string>());
    mdp.gamma = j.value("gamma", 1.0);
    mdp.eta = j.value("eta", 1.0);
    mdp.level_states = j.at("levels").get<std::vector<std::vector<int>>>();
    mdp.levels = static_cast<int>(mdp.level_states.size());
    int S = 0;
    for (const auto& lvl : mdp.level_states) S += static_cast<int>(lvl.size());
    mdp.state_level.assign(S, 0);
    for (int lvl = 0; lvl < mdp.levels; ++lvl)
        for (int s : mdp.level_states[lvl]) mdp.state_level.at(s) = lvl + 1;
    mdp.reward_mean = j.at("reward_mean").get<std::vector<std::vector<double>>>();
    mdp.reward_std = j.at("reward_std").get<std::vector<std::vector<double>>>();
    mdp.cost_mean = j.at("cost_mean").get<std::vector<std::vector<double>>>();
    mdp.cost_std = j.at("cost_std").get<std::vector<std::vector<double>>>();
    mdp.num_actions = mdp.reward_mean.empty() ? 1 : static_cast<int>(mdp.reward_mean[0].size());
    mdp.transitions.assign(S, std::vector<std::vector<Transition>>(mdp.num_actions));
    const auto& trans = j.at("transitions");
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < mdp.num_actions; ++a)
            for (const auto& pair : trans.at(s).at(a))
                mdp.transitions[s][a].push_back(
                    {pair.at(0).get<int>(), pair.at(1).get<double>()});
    return {std::move(mdp), mode};
}

double mean_of(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    return buf;
}

} // namespace

void ExperimentConfig::check() const {
    if (strategies.empty()) throw std::invalid_argument("config: strategies must be nonempty");
    if (repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
    if (budgets.empty()) throw std::invalid_argument("config: budget grid must be nonempty");
    for (int64_t n : budgets)
        if (n <= 0 || n % mdp.levels != 0)
            throw std::invalid_argument("config: budget " + std::to_string(n) +
                                        " not divisible by horizon " +
                                        std::to_string(mdp.levels));
    validate(mdp, mode);
    validate_policy(mdp, policy);
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("config: alpha must be in (0,1]");
}

WidthParams ExperimentConfig::width_params(int64_t budget) const {
    WidthParams p;
    p.delta = delta;
    p.eta = mdp.eta;
    p.num_states = mdp.num_states();
    p.num_actions = mdp.num_actions;
    p.budget = budget;
    p.horizon = mdp.levels;
    p.mode = width_mode;
    p.lcb_scale = lcb_scale;
    return p;
}

ExperimentConfig config_from_json_text(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    ExperimentConfig cfg;

    const auto& env = j.at("environment");
    if (env.is_object() && env.contains("scenario")) {
        Scenario sc = scenario(env.at("scenario").get<std::string>());
        if (sc.id == "grid4x4" && env.contains("lu_high_variance"))
            sc = scenario_grid4x4(env.at("lu_high_variance").get<bool>());
        cfg.mdp = sc.mdp;
        cfg.mode = sc.mode;
        cfg.policy = sc.policy;
        cfg.alpha = sc.defaults.alpha;
        cfg.delta = sc.defaults.delta;
        cfg.width_mode = sc.defaults.width_mode;
        cfg.lcb_scale = sc.defaults.lcb_scale;
        cfg.budgets = sc.defaults.budgets;
        cfg.repetitions = sc.defaults.repetitions;
    } else if (env.is_object() && env.contains("csv")) {
        cfg.mdp = load_arm_table_csv(env.at("csv").get<std::string>());
        cfg.mode = MdpMode::Bandit;
    } else {
        auto [mdp, mode] = mdp_from_json(env);
        cfg.mdp = std::move(mdp);
        cfg.mode = mode;
    }

    if (j.contains("policy")) {
        cfg.policy.probs = j.at("policy").get<std::vector<std::vector<double>>>();
    } else if (cfg.policy.probs.empty()) {
        cfg.policy.probs.assign(cfg.mdp.num_states(),
                                std::vector<double>(cfg.mdp.num_actions,
                                                    1.0 / cfg.mdp.num_actions));
    }

    if (j.contains("strategies")) {
        cfg.strategies.clear();
        for (const auto& name : j.at("strategies")) {
            auto kind = parse_strategy(name.get<std::string>());
            if (!kind) throw std::invalid_argument("unknown strategy: " +
                                                   name.get<std::string>());
            cfg.strategies.push_back(*kind);
        }
    }
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("budgets")) cfg.budgets = j.at("budgets").get<std::vector<int64_t>>();
    if (j.contains("repetitions")) cfg.repetitions = j.at("repetitions").get<int64_t>();
    if (j.contains("seed")) cfg.base_seed = j.at("seed").get<uint64_t>();
    if (j.contains("width")) {
        const auto& w = j.at("width");
        if (w.contains("mode")) cfg.width_mode = parse_width_mode(w.at("mode").get<std::string>());
        if (w.contains("delta")) cfg.delta = w.at("delta").get<double>();
        if (w.contains("lcb_scale")) cfg.lcb_scale = w.at("lcb_scale").get<double>();
    }
    if (j.contains("output") && j.at("output").contains("dir"))
        cfg.out_dir = j.at("output").at("dir").get<std::string>();

    if (const char* env_seed = std::getenv("SAVER_SEED"))
        cfg.base_seed = std::strtoull(env_seed, nullptr, 10);

    cfg.check();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

std::string dump_scenario(const Scenario& sc) {
    ordered_json j;
    j["environment"] = mdp_to_json(sc.mdp, sc.mode);
    j["policy"] = sc.policy.probs;
    j["strategies"] = {"on_policy", "safe_oracle", "saver"};
    j["alpha"] = sc.defaults.alpha;
    j["budgets"] = sc.defaults.budgets;
    j["repetitions"] = sc.defaults.repetitions;
    j["seed"] = 1;
    j["width"] = {{"mode", width_mode_name(sc.defaults.width_mode)},
                  {"delta", sc.defaults.delta},
                  {"lcb_scale", sc.defaults.lcb_scale}};
    return j.dump(2) + "\n";
}

namespace {

RunMetrics run_cells(const ExperimentConfig& config, int threads, bool parallel) {
    const auto t0 = std::chrono::steady_clock::now();
    RunMetrics metrics;
    metrics.true_value_root =
        true_value(config.mdp, config.policy, Channel::Reward)[config.mdp.root()];

    const int64_t reps = config.repetitions;
    const size_t num_cells = config.strategies.size() * config.budgets.size();
    metrics.cells.resize(num_cells);

    struct Task {
        size_t cell;
        size_t strategy_idx;
        size_t budget_idx;
        int64_t rep;
    };
    std::vector<Task> tasks;
    tasks.reserve(num_cells * static_cast<size_t>(reps));
    for (size_t si = 0; si < config.strategies.size(); ++si)
        for (size_t bi = 0; bi < config.budgets.size(); ++bi) {
            size_t cell = si * config.budgets.size() + bi;
            auto& cm = metrics.cells[cell];
            cm.strategy = config.strategies[si];
            cm.n = config.budgets[bi];
            cm.mse.resize(reps);
            cm.violations.resize(reps);
            cm.final_budget.resize(reps);
            cm.satisfied.resize(reps);
            for (int64_t r = 0; r < reps; ++r) tasks.push_back({cell, si, bi, r});
        }

    std::vector<double> p10(num_cells * reps), p50(num_cells * reps), p90(num_cells * reps);

    auto run_task = [&](const Task& task) {
        const int64_t n = config.budgets[task.budget_idx];
        StrategyOptions opts;
        opts.kind = config.strategies[task.strategy_idx];
        opts.alpha = config.alpha;
        opts.width = config.width_params(n);
        uint64_t seed = Rng::stream_seed(config.base_seed, task.strategy_idx,
                                         task.budget_idx, static_cast<uint64_t>(task.rep));
        RunResult res = run_strategy(config.mdp, config.mode, config.policy, opts, n, seed);
        auto& cm = metrics.cells[task.cell];
        double err = res.estimate - metrics.true_value_root;
        cm.mse[task.rep] = err * err;
        cm.violations[task.rep] = res.violations;
        cm.final_budget[task.rep] = res.final_budget;
        cm.satisfied[task.rep] = res.constraint_satisfied ? 1 : 0;
        size_t idx = task.cell * reps + task.rep;
        p10[idx] = res.budget_p10;
        p50[idx] = res.budget_p50;
        p90[idx] = res.budget_p90;
    };

    if (parallel) {
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic)
        for (int64_t i = 0; i < static_cast<int64_t>(tasks.size()); ++i) run_task(tasks[i]);
#else
        (void)threads;
        for (const auto& task : tasks) run_task(task);
#endif
    } else {
        for (const auto& task : tasks) run_task(task);
    }

    // aggregation in fixed rep order
    for (auto& cm : metrics.cells) {
        cm.mean_mse = mean_of(cm.mse);
        int64_t vsum = 0, vmax = 0, sat = 0;
        for (size_t r = 0; r < cm.violations.size(); ++r) {
            vsum += cm.violations[r];
            vmax = std::max(vmax, cm.violations[r]);
            sat += cm.satisfied[r];
        }
        cm.violation_mean = static_cast<double>(vsum) / static_cast<double>(reps);
        cm.violation_max = vmax;
        cm.satisfied_fraction = static_cast<double>(sat) / static_cast<double>(reps);
    }
    for (size_t cell = 0; cell < num_cells; ++cell) {
        auto& cm = metrics.cells[cell];
        double s10 = 0, s50 = 0, s90 = 0;
        for (int64_t r = 0; r < reps; ++r) {
            s10 += p10[cell * reps + r];
            s50 += p50[cell * reps + r];
            s90 += p90[cell * reps + r];
        }
        cm.budget_p10_mean = s10 / static_cast<double>(reps);
        cm.budget_p50_mean = s50 / static_cast<double>(reps);
        cm.budget_p90_mean = s90 / static_cast<double>(reps);
    }

    // per-strategy curves, regret against the SafeOracle curve, slopes
    std::vector<double> oracle_curve(config.budgets.size(), 0.0);
    bool have_oracle = false;
    for (size_t si = 0; si < config.strategies.size(); ++si)
        if (config.strategies[si] == StrategyKind::SafeOracle) {
            have_oracle = true;
            for (size_t bi = 0; bi < config.budgets.size(); ++bi)
                oracle_curve[bi] = metrics.cells[si * config.budgets.size() + bi].mean_mse;
        }

    for (size_t si = 0; si < config.strategies.size(); ++si) {
        StrategySummary sum;
        sum.strategy = config.strategies[si];
        for (size_t bi = 0; bi < config.budgets.size(); ++bi) {
            const auto& cm = metrics.cells[si * config.budgets.size() + bi];
            sum.mse_curve.push_back({cm.n, cm.mean_mse});
            if (have_oracle)
                sum.regret_curve.push_back({cm.n, cm.mean_mse - oracle_curve[bi]});
        }
        auto try_slope = [](const std::vector<std::pair<int64_t, double>>& curve, double& out) {
            if (curve.size() < 3) return false;
            for (const auto& [n, y] : curve)
                if (y <= 0.0) return false;
            std::vector<std::pair<int64_t, double>> pts(curve.begin(), curve.end());
            out = fit_slope(pts);
            return true;
        };
        sum.has_mse_slope = try_slope(sum.mse_curve, sum.mse_slope);
        if (have_oracle) sum.has_regret_slope = try_slope(sum.regret_curve, sum.regret_slope);
        metrics.summaries.push_back(std::move(sum));
    }

    metrics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return metrics;
}

} // namespace

RunMetrics run_experiment(const ExperimentConfig& config, int threads) {
    config.check();
    return run_cells(config, threads, true);
}

RunMetrics run_experiment_serial(const ExperimentConfig& config) {
    config.check();
    return run_cells(config, 1, false);
}

double fit_slope(const std::vector<std::pair<int64_t, double>>& points) {
    if (points.size() < 3) throw std::invalid_argument("fit_slope: need at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [n, y] : points) {
        if (y <= 0.0) throw std::invalid_argument("fit_slope: non-positive value");
        double lx = std::log(static_cast<double>(n));
        double ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = static_cast<double>(points.size());
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::string curves_csv_text(const RunMetrics& metrics) {
    std::string out = "strategy,n,rep,mse,violations,final_budget\n";
    for (const auto& cm : metrics.cells)
        for (size_t r = 0; r < cm.mse.size(); ++r) {
            out += strategy_name(cm.strategy);
            out += ',';
            out += std::to_string(cm.n);
            out += ',';
            out += std::to_string(r);
            out += ',';
            out += format_double(cm.mse[r]);
            out += ',';
            out += std::to_string(cm.violations[r]);
            out += ',';
            out += format_double(cm.final_budget[r]);
            out += '\n';
        }
    return out;
}

std::string summary_json_text(const RunMetrics& metrics, const ExperimentConfig& config) {
    ordered_json j;
    j["true_value"] = metrics.true_value_root;
    j["alpha"] = config.alpha;
    j["repetitions"] = config.repetitions;
    j["budgets"] = config.budgets;
    j["width"] = {{"mode", width_mode_name(config.width_mode)},
                  {"delta", config.delta},
                  {"lcb_scale", config.lcb_scale}};

    ComplexityReport rep = complexity_report(config.mdp, config.policy, config.alpha);
    ordered_json cx;
    cx["h2_total"] = rep.h2_total;
    cx["h1"] = rep.h1;
    cx["c_sigma"] = rep.c_sigma;
    cx["worst_cost_value"] = rep.worst_cost_value;
    cx["tractable"] = rep.tractable;
    if (std::isinf(rep.n_min))
        cx["n_min"] = "inf";
    else
        cx["n_min"] = rep.n_min;
    j["complexity"] = cx;

    ordered_json strategies;
    for (const auto& sum : metrics.summaries) {
        ordered_json s;
        ordered_json mse, regret, viol, sat, budget;
        for (const auto& cm : metrics.cells) {
            if (cm.strategy != sum.strategy) continue;
            const std::string key = std::to_string(cm.n);
            mse[key] = cm.mean_mse;
            viol[key] = cm.violation_mean;
            sat[key] = cm.satisfied_fraction;
            budget[key] = {{"p10", cm.budget_p10_mean},
                           {"p50", cm.budget_p50_mean},
                           {"p90", cm.budget_p90_mean}};
        }
        for (const auto& [n, r] : sum.regret_curve) regret[std::to_string(n)] = r;
        s["mse"] = mse;
        if (!sum.regret_curve.empty()) s["regret_vs_safe_oracle"] = regret;
        if (sum.has_mse_slope) s["mse_slope"] = sum.mse_slope;
        if (sum.has_regret_slope) s["regret_slope"] = sum.regret_slope;
        s["violations"] = viol;
        s["constraint_satisfied_fraction"] = sat;
        s["budget_quantiles"] = budget;
        strategies[strategy_name(sum.strategy)] = s;
    }
    j["strategies"] = strategies;
    return j.dump(2) + "\n";
}

void write_outputs(const RunMetrics& metrics, const ExperimentConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    {
        std::ofstream out(config.out_dir + "/curves.csv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write curves.csv");
        out << curves_csv_text(metrics);
    }
    {
        std::ofstream out(config.out_dir + "/summary.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write summary.json");
        out << summary_json_text(metrics, config);
    }
}

} // namespace saver
