#include <cstdlib>
#include <exception>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coex/config.hpp"
#include "coex/harness.hpp"

namespace {

coex::ExperimentConfig load_from_cli(const std::string& config_path, const std::string& preset) {
    coex::Config raw;
    if (!preset.empty()) {
        try {
            raw = coex::experiment_preset(preset);
        } catch (const std::invalid_argument& e) {
            throw coex::ConfigError(e.what());
        }
    } else {
        raw = coex::Config::parse_file(config_path);
    }
    coex::ExperimentConfig cfg = coex::load_experiment_config(raw);
    // Environment override so batch drivers can redirect every artifact
    // without editing config files.
    if (const char* dir = std::getenv("COEX_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
    return cfg;
}

void print_summary(const coex::RunSummary& s) {
    for (const coex::SeedSummary& seed : s.per_seed)
        std::cout << "  seed " << seed.seed << ": final_regret=" << seed.final_regret
                  << " min_budget=" << seed.min_budget << " violations=" << seed.violations
                  << " baseline_plays=" << seed.baseline_plays << "\n";
    std::cout << "  final_regret mean=" << s.final_regret_mean
              << " stderr=" << s.final_regret_stderr
              << " violations_total=" << s.violations_total << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conservative exploration experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string preset;
    std::vector<double> sigmas;
    std::string logdir;
    int top_n = 5;

    std::string preset_help = "built-in config, one of:";
    for (const std::string& name : coex::experiment_preset_names()) preset_help += " " + name;

    CLI::App* run = app.add_subcommand("run", "run one experiment and write its CSV files");
    CLI::Option* run_cfg = run->add_option("config", config_path, "experiment config file");
    CLI::Option* run_preset = run->add_option("--preset", preset, preset_help);
    run_cfg->excludes(run_preset);

    CLI::App* sweep = app.add_subcommand(
        "sweep", "rerun one gridworld experiment per hyperpolicy sigma");
    CLI::Option* sweep_cfg = sweep->add_option("config", config_path, "experiment config file");
    CLI::Option* sweep_preset = sweep->add_option("--preset", preset, preset_help);
    sweep_cfg->excludes(sweep_preset);
    sweep->add_option("--sigma", sigmas, "hyperpolicy standard deviations")
        ->required()
        ->delimiter(',')
        ->check(CLI::PositiveNumber);

    CLI::App* report = app.add_subcommand(
        "report", "write per-vertex estimate/bonus reports for a finished fixed-grid run");
    report->add_option("logdir", logdir, "output directory of a finished run")->required();
    report->add_option("--top", top_n, "number of leading vertices in the episode series")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (config_path.empty() && preset.empty())
                throw coex::ConfigError("run: give a config file or --preset");
            coex::ExperimentConfig cfg = load_from_cli(config_path, preset);
            coex::RunSummary s = coex::run_experiment(cfg);
            std::cout << "wrote " << cfg.output_dir << "\n";
            print_summary(s);
        } else if (sweep->parsed()) {
            if (config_path.empty() && preset.empty())
                throw coex::ConfigError("sweep: give a config file or --preset");
            coex::ExperimentConfig cfg = load_from_cli(config_path, preset);
            std::vector<coex::RunSummary> all = coex::sigma_sweep(cfg, sigmas);
            std::cout << "wrote " << cfg.output_dir << "\n";
            for (std::size_t i = 0; i < all.size(); ++i) {
                std::cout << "sigma " << sigmas[i] << ":\n";
                print_summary(all[i]);
            }
        } else if (report->parsed()) {
            coex::write_policy_reports(logdir, top_n);
            std::cout << "wrote reports in " << logdir << "\n";
        }
    } catch (const coex::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
