#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saver/harness.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads) {
    saver::ExperimentConfig cfg = saver::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    saver::RunMetrics metrics = saver::run_experiment(cfg, threads);
    saver::write_outputs(metrics, cfg);
    std::printf("wrote %s/curves.csv and %s/summary.json (%.2f s)\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str(), metrics.wall_seconds);
    for (const auto& sum : metrics.summaries) {
        std::printf("  %-22s", saver::strategy_name(sum.strategy).c_str());
        for (const auto& [n, mse] : sum.mse_curve) std::printf(" mse(%lld)=%.4e", (long long)n, mse);
        if (sum.has_mse_slope) std::printf("  slope=%.3f", sum.mse_slope);
        std::printf("\n");
    }
    return 0;
}

int cmd_report(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) {
        std::fprintf(stderr, "cannot open %s\n", csv_path.c_str());
        return 1;
    }
    std::string line;
    std::getline(in, line);  // header
    std::map<std::string, std::map<long long, std::pair<double, long long>>> acc;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string strategy, n_s, rep_s, mse_s, viol_s, budget_s;
        std::getline(ss, strategy, ',');
        std::getline(ss, n_s, ',');
        std::getline(ss, rep_s, ',');
        std::getline(ss, mse_s, ',');
        std::getline(ss, viol_s, ',');
        std::getline(ss, budget_s, ',');
        auto& cell = acc[strategy][std::stoll(n_s)];
        cell.first += std::stod(mse_s);
        cell.second += 1;
    }
    for (const auto& [strategy, curve] : acc) {
        std::vector<std::pair<int64_t, double>> pts;
        std::printf("%-22s", strategy.c_str());
        for (const auto& [n, cell] : curve) {
            double mean = cell.first / static_cast<double>(cell.second);
            pts.push_back({n, mean});
            std::printf(" mse(%lld)=%.4e", n, mean);
        }
        bool positive = pts.size() >= 3;
        for (const auto& [n, y] : pts) positive = positive && y > 0.0;
        if (positive) std::printf("  slope=%.3f", saver::fit_slope(pts));
        std::printf("\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"safe data-collection laboratory for policy evaluation"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment from a config document");
    std::string config_path, out_dir;
    int threads = 0;
    run->add_option("--config", config_path, "config document (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--threads", threads, "worker threads (0 = library default)");

    auto* scen = app.add_subcommand("scenario", "inspect built-in scenarios");
    auto* scen_list = scen->add_subcommand("list", "list scenario ids");
    auto* scen_dump = scen->add_subcommand("dump", "print a scenario as a config document");
    std::string scenario_id;
    scen_dump->add_option("id", scenario_id, "scenario id")->required();
    scen->require_subcommand(1);

    auto* report = app.add_subcommand("report", "recompute summaries from a curves.csv");
    std::string csv_path;
    report->add_option("--in", csv_path, "curves.csv from a previous run")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, threads);
        if (scen->parsed()) {
            if (scen_list->parsed()) {
                for (const auto& id : saver::scenario_ids()) std::printf("%s\n", id.c_str());
                return 0;
            }
            if (scen_dump->parsed()) {
                std::fputs(saver::dump_scenario(saver::scenario(scenario_id)).c_str(), stdout);
                return 0;
            }
        }
        if (report->parsed()) return cmd_report(csv_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
