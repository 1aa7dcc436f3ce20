#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "saver/allocation.hpp"
#include "saver/strategies.hpp"

namespace saver {

struct ScenarioDefaults {
    double alpha = 0.25;
    double delta = 0.1;
    WidthMode width_mode = WidthMode::Appendix;
    double lcb_scale = 1.0;
    std::vector<int64_t> budgets;
    int64_t repetitions = 200;
};

struct Scenario {
    std::string id;
    LayeredMdp mdp;
    MdpMode mode = MdpMode::Bandit;
    TargetPolicy policy;
    ScenarioDefaults defaults;
};

/// Built-in experiment instances: intractable_bandit, bandit11, tree4x2,
/// grid4x4. Throws std::invalid_argument for unknown ids.
Scenario scenario(const std::string& id);
std::vector<std::string> scenario_ids();

/// grid4x4 with the left/up reward variance chosen explicitly (the prose
/// value 0.01 versus the default 20.0).
Scenario scenario_grid4x4(bool lu_high_variance);

/// Loads a one-level environment from a CSV arm table with header
/// arm,reward_mean,reward_std,cost_mean,cost_std. Arm 0 is the baseline.
LayeredMdp load_arm_table_csv(const std::string& path);

struct ExperimentConfig {
    LayeredMdp mdp;
    MdpMode mode = MdpMode::Bandit;
    TargetPolicy policy;
    std::vector<StrategyKind> strategies;
    double alpha = 0.25;
    std::vector<int64_t> budgets;
    int64_t repetitions = 1;
    uint64_t base_seed = 1;
    double delta = 0.1;
    WidthMode width_mode = WidthMode::Appendix;
    double lcb_scale = 1.0;
    std::string out_dir = ".";

    void check() const;  // invariants: budgets divisible by L, reps >= 1, ...
    WidthParams width_params(int64_t budget) const;
};

/// Parses the JSON config document (see config-schema.md). The SAVER_SEED
/// environment variable overrides the configured seed.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

/// Serializes a scenario as a config document.
std::string dump_scenario(const Scenario& sc);

struct CellMetrics {
    StrategyKind strategy;
    int64_t n = 0;
    std::vector<double> mse;           // squared error per rep
    std::vector<int64_t> violations;   // per rep
    std::vector<double> final_budget;  // per rep
    std::vector<uint8_t> satisfied;    // per rep
    double mean_mse = 0.0;
    double violation_mean = 0.0;
    int64_t violation_max = 0;
    double satisfied_fraction = 0.0;
    double budget_p10_mean = 0.0, budget_p50_mean = 0.0, budget_p90_mean = 0.0;
};

struct StrategySummary {
    StrategyKind strategy;
    std::vector<std::pair<int64_t, double>> mse_curve;
    std::vector<std::pair<int64_t, double>> regret_curve;  // vs SafeOracle
    double mse_slope = 0.0;
    bool has_mse_slope = false;
    double regret_slope = 0.0;
    bool has_regret_slope = false;
};

struct RunMetrics {
    std::vector<CellMetrics> cells;  // strategy-major, budget-minor order
    std::vector<StrategySummary> summaries;
    double true_value_root = 0.0;
    double wall_seconds = 0.0;
};

/// Monte Carlo sweep over strategies x budgets x repetitions. Repetitions
/// run in parallel with per-rep seeds derived from (seed, strategy, n, rep);
/// results are identical to the serial reference for any thread count.
RunMetrics run_experiment(const ExperimentConfig& config, int threads = 0);

/// Serial reference implementation used by the tests and the benchmark.
RunMetrics run_experiment_serial(const ExperimentConfig& config);

/// Least-squares slope of log(y) on log(n); requires >= 3 points, all y > 0.
double fit_slope(const std::vector<std::pair<int64_t, double>>& points);

/// Writes curves.csv and summary.json under config.out_dir with stable
/// formatting.
void write_outputs(const RunMetrics& metrics, const ExperimentConfig& config);

std::string curves_csv_text(const RunMetrics& metrics);
std::string summary_json_text(const RunMetrics& metrics, const ExperimentConfig& config);

} // namespace saver
