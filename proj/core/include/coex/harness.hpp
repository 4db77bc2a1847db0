#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coex/algo.hpp"
#include "coex/config.hpp"
#include "coex/envs.hpp"

namespace coex {

// Fully-resolved experiment description. Field defaults match the config
// parser's; validation happens in load_experiment_config.
struct ExperimentConfig {
    std::string environment = "gridworld";  // gridworld | mountaincar
    std::string algorithm = "coptimist";    // optimist | coptimist | coptimist2 | cucbvi
    int episodes = 100;
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = "runs/out";
    std::string audit = "exact";  // exact | mc
    int audit_rollouts = 200;

    GridworldConfig gridworld;
    MountainCarConfig mountaincar;

    double alpha = 0.1;
    double delta = 0.1;
    double eps = 1.0;
    double kappa = 3.0;
    double clip = kInf;
    int grid_points = 11;

    Box box;
    std::vector<double> hyper_var;
    std::vector<double> baseline_params;
    bool baseline_known = true;
};

// Parses and validates; throws ConfigError naming the offending key.
// Unknown keys are rejected so typos cannot silently fall back to defaults.
ExperimentConfig load_experiment_config(const Config& raw);
ExperimentConfig load_experiment_config_file(const std::string& path);

// Built-in configs mirroring the files shipped in configs/.
Config experiment_preset(const std::string& name);
std::vector<std::string> experiment_preset_names();

// Canonical key-value rendering; load(dump(cfg)) reproduces cfg exactly.
Config dump_experiment_config(const ExperimentConfig& cfg);

struct SeedSummary {
    std::uint64_t seed = 0;
    double final_regret = 0.0;
    double min_budget = 0.0;
    int violations = 0;  // episodes with audited budget < -1e-9
    int baseline_plays = 0;
};

struct RunSummary {
    std::vector<SeedSummary> per_seed;
    double final_regret_mean = 0.0;
    double final_regret_stderr = 0.0;
    double min_budget_mean = 0.0;
    int violations_total = 0;
    double baseline_plays_mean = 0.0;
    std::vector<double> return_mean;  // per-episode means across seeds
    std::vector<double> budget_mean;
    std::vector<double> regret_mean;
};

// Runs every seed in parallel, writes run_<seed>.csv (plus dataset and
// behavior files for parameter-based algorithms), aggregate.csv, summary.csv
// and the effective config.cfg into the output directory.
RunSummary run_experiment(const ExperimentConfig& cfg);

// One full run per hyperpolicy standard deviation, each in its own
// sigma_<value> subdirectory of the base output directory, plus a
// sweep_summary.csv in the given order. Gridworld parameter-based runs only.
std::vector<RunSummary> sigma_sweep(const ExperimentConfig& cfg,
                                    const std::vector<double>& sigmas);

struct PolicyReportEntry {
    int vertex = -1;
    std::vector<double> params;
    double estimate = 0.0;
    double bonus = 0.0;
    int pulls = 0;
};

struct PolicySeriesPoint {
    int episode = 0;  // data available before this episode's play
    int vertex = -1;
    double estimate = 0.0;
    double bonus = 0.0;
};

struct PolicyReport {
    std::vector<PolicyReportEntry> table;    // all vertices, best final score first
    std::vector<PolicySeriesPoint> series;   // top_n vertices, episodes 2..K+1
};

// Re-scores grid vertices against growing dataset prefixes. Pull counts
// match optimistic plays to vertices by exact parameter equality, so the run
// must use a fixed grid.
PolicyReport top_policy_report(const EpisodeLog& log, const PolicyGrid& grid, int top_n,
                               const ExperimentConfig& cfg);

// Loads a finished fixed-grid run directory and writes report_<seed>.csv and
// pulls_<seed>.csv next to the run files.
void write_policy_reports(const std::string& logdir, int top_n);

}  // namespace coex
