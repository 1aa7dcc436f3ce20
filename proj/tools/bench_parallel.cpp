// Compares the serial reference runner against the OpenMP runner on a
// mid-sized sweep and checks that both produce identical metrics.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "saver/harness.hpp"

using clock_type = std::chrono::steady_clock;

int main(int argc, char** argv) {
    int threads = 0;
    if (argc > 1) threads = std::atoi(argv[1]);

    saver::Scenario sc = saver::scenario("bandit11");
    saver::ExperimentConfig cfg;
    cfg.mdp = sc.mdp;
    cfg.mode = sc.mode;
    cfg.policy = sc.policy;
    cfg.strategies = {saver::StrategyKind::OnPolicy, saver::StrategyKind::SafeOracle,
                      saver::StrategyKind::SaVeR};
    cfg.alpha = sc.defaults.alpha;
    cfg.delta = sc.defaults.delta;
    cfg.width_mode = sc.defaults.width_mode;
    cfg.lcb_scale = sc.defaults.lcb_scale;
    cfg.budgets = {1000, 2000, 4000};
    cfg.repetitions = 100;
    cfg.base_seed = 7;

    auto t0 = clock_type::now();
    saver::RunMetrics serial = saver::run_experiment_serial(cfg);
    double serial_s = std::chrono::duration<double>(clock_type::now() - t0).count();

    t0 = clock_type::now();
    saver::RunMetrics parallel = saver::run_experiment(cfg, threads);
    double parallel_s = std::chrono::duration<double>(clock_type::now() - t0).count();

    double max_diff = 0.0;
    for (size_t c = 0; c < serial.cells.size(); ++c)
        for (size_t r = 0; r < serial.cells[c].mse.size(); ++r)
            max_diff = std::max(max_diff,
                                std::abs(serial.cells[c].mse[r] - parallel.cells[c].mse[r]));

    std::printf("serial:   %8.3f s\n", serial_s);
    std::printf("parallel: %8.3f s  (speedup %.2fx)\n", parallel_s, serial_s / parallel_s);
    std::printf("max |serial - parallel| over per-rep mse: %g\n", max_diff);
    return max_diff == 0.0 ? 0 : 1;
}
