#include "coex/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "coex/csv.hpp"
#include "coex/cucbvi.hpp"
#include "coex/gauss_hermite.hpp"
#include "coex/math_util.hpp"
#include "coex/mis.hpp"
#include "coex/policies.hpp"
#include "coex/rng.hpp"

namespace coex {

namespace {

// Keeps the mixing probability strictly inside (0,1) where the policy
// constructor demands it; sigmoid saturates to exactly 1.0 past ~37.
double mixing_from_theta(double theta) {
    return clamp(sigmoid(theta), 1e-12, 1.0 - 1e-12);
}

std::string format_compact(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

std::string join_seeds(const std::vector<std::uint64_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

void fail(const std::string& key, const std::string& what) {
    throw ConfigError("config error: " + key + ": " + what);
}

void check_known_keys(const Config& raw, const std::string& environment) {
    static const std::set<std::string> experiment = {
        "environment", "algorithm", "episodes", "seeds",
        "output_dir",  "audit",     "audit_rollouts"};
    static const std::set<std::string> env_gridworld = {
        "width",  "height",  "horizon", "slip",   "goal_reward", "trap_reward",
        "start_x", "start_y", "goal_x",  "goal_y", "trap_x",      "trap_y"};
    static const std::set<std::string> env_mountaincar = {
        "min_position", "max_position", "max_speed", "goal_position", "force",
        "gravity",      "goal_reward",  "action_cost", "horizon", "start_lo", "start_hi"};
    static const std::set<std::string> algo = {"alpha", "delta", "eps",
                                               "kappa", "clip",  "grid_points"};
    static const std::set<std::string> policy = {"box_lo", "box_hi", "var"};
    static const std::set<std::string> baseline = {"params", "known"};

    for (const auto& [key, value] : raw.entries()) {
        std::size_t dot = key.find('.');
        std::string section = key.substr(0, dot);
        std::string name = key.substr(dot + 1);
        const std::set<std::string>* allowed = nullptr;
        if (section == "experiment") allowed = &experiment;
        else if (section == "env")
            allowed = environment == "mountaincar" ? &env_mountaincar : &env_gridworld;
        else if (section == "algo") allowed = &algo;
        else if (section == "policy") allowed = &policy;
        else if (section == "baseline") allowed = &baseline;
        if (!allowed) fail(key, "unknown section '" + section + "'");
        if (!allowed->count(name)) fail(key, "unknown key");
    }
}

void validate_experiment(const ExperimentConfig& cfg) {
    if (cfg.environment != "gridworld" && cfg.environment != "mountaincar")
        fail("experiment.environment", "must be gridworld or mountaincar");
    if (cfg.algorithm != "optimist" && cfg.algorithm != "coptimist" &&
        cfg.algorithm != "coptimist2" && cfg.algorithm != "cucbvi")
        fail("experiment.algorithm", "must be optimist, coptimist, coptimist2 or cucbvi");
    if (cfg.algorithm == "cucbvi" && cfg.environment != "gridworld")
        fail("experiment.algorithm",
             "cucbvi needs a tabular environment; " + cfg.environment + " is unsupported");
    if (cfg.episodes < 1) fail("experiment.episodes", "must be >= 1");
    if (cfg.seeds.empty()) fail("experiment.seeds", "must list at least one seed");
    {
        std::set<std::uint64_t> unique(cfg.seeds.begin(), cfg.seeds.end());
        if (unique.size() != cfg.seeds.size())
            fail("experiment.seeds", "seeds must be distinct");
    }
    if (cfg.output_dir.empty()) fail("experiment.output_dir", "must not be empty");
    if (cfg.audit != "exact" && cfg.audit != "mc") fail("experiment.audit", "must be exact or mc");
    if (cfg.environment == "mountaincar" && cfg.audit == "exact")
        fail("experiment.audit", "exact audit needs a tabular environment; use mc");
    if (cfg.audit == "mc" && cfg.audit_rollouts < 2)
        fail("experiment.audit_rollouts", "must be >= 2");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail("algo.alpha", "must be in (0,1)");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) fail("algo.delta", "must be in (0,1)");
    if (!(cfg.eps > 0.0 && cfg.eps <= 1.0)) fail("algo.eps", "must be in (0,1]");
    if (!(cfg.kappa > 2.0)) fail("algo.kappa", "must be greater than 2");
    if (!(cfg.clip > 0.0)) fail("algo.clip", "must be positive");
    if (cfg.grid_points < 1) fail("algo.grid_points", "must be >= 1");

    const int dim = cfg.environment == "gridworld" ? 1 : 2;
    if (cfg.box.dim() != dim || static_cast<int>(cfg.box.hi.size()) != dim)
        fail("policy.box_lo", "the " + cfg.environment + " policy family has " +
                                  std::to_string(dim) + " parameter(s)");
    for (int i = 0; i < dim; ++i)
        if (!(cfg.box.lo[static_cast<std::size_t>(i)] < cfg.box.hi[static_cast<std::size_t>(i)]))
            fail("policy.box_hi", "box must have positive extent per dimension");
    if (static_cast<int>(cfg.hyper_var.size()) != dim)
        fail("policy.var", "needs one variance per parameter dimension");
    for (double v : cfg.hyper_var)
        if (!(v > 0.0)) fail("policy.var", "variances must be positive");
    if (static_cast<int>(cfg.baseline_params.size()) != dim)
        fail("baseline.params", "needs one value per parameter dimension");
    for (int i = 0; i < dim; ++i) {
        double b = cfg.baseline_params[static_cast<std::size_t>(i)];
        if (b < cfg.box.lo[static_cast<std::size_t>(i)] ||
            b > cfg.box.hi[static_cast<std::size_t>(i)])
            fail("baseline.params", "baseline must lie inside the policy box");
    }
    if (cfg.algorithm == "cucbvi" && !cfg.baseline_known)
        fail("baseline.known", "cucbvi supports only a known baseline value");

    if (cfg.environment == "gridworld") {
        try {
            make_gridworld(cfg.gridworld);
        } catch (const std::invalid_argument& e) {
            fail("env", e.what());
        }
    } else {
        const MountainCarConfig& mc = cfg.mountaincar;
        if (!(mc.min_position < mc.max_position)) fail("env.max_position", "must exceed min_position");
        if (!(mc.max_speed > 0.0)) fail("env.max_speed", "must be positive");
        if (mc.horizon < 1) fail("env.horizon", "must be >= 1");
        if (!(mc.start_lo <= mc.start_hi)) fail("env.start_hi", "must be >= start_lo");
        if (!(mc.action_cost >= 0.0)) fail("env.action_cost", "must be nonnegative");
    }
}

}  // namespace

ExperimentConfig load_experiment_config(const Config& raw) {
    ExperimentConfig cfg;
    cfg.environment = raw.get_string("experiment.environment", cfg.environment);
    check_known_keys(raw, cfg.environment);
    cfg.algorithm = raw.get_string("experiment.algorithm", cfg.algorithm);
    cfg.episodes = raw.get_int("experiment.episodes", cfg.episodes);
    if (raw.has("experiment.seeds")) cfg.seeds = raw.get_uint64_list("experiment.seeds");
    cfg.output_dir = raw.get_string("experiment.output_dir", cfg.output_dir);
    cfg.audit = raw.get_string("experiment.audit",
                               cfg.environment == "mountaincar" ? "mc" : "exact");
    cfg.audit_rollouts = raw.get_int("experiment.audit_rollouts", cfg.audit_rollouts);

    if (cfg.environment == "gridworld") {
        GridworldConfig& g = cfg.gridworld;
        g.width = raw.get_int("env.width", g.width);
        g.height = raw.get_int("env.height", g.height);
        g.horizon = raw.get_int("env.horizon", g.horizon);
        g.slip = raw.get_double("env.slip", g.slip);
        g.goal_reward = raw.get_double("env.goal_reward", g.goal_reward);
        g.trap_reward = raw.get_double("env.trap_reward", g.trap_reward);
        g.start_x = raw.get_int("env.start_x", g.start_x);
        g.start_y = raw.get_int("env.start_y", g.start_y);
        g.goal_x = raw.get_int("env.goal_x", g.goal_x);
        g.goal_y = raw.get_int("env.goal_y", g.goal_y);
        g.trap_x = raw.get_int("env.trap_x", g.trap_x);
        g.trap_y = raw.get_int("env.trap_y", g.trap_y);
    } else {
        MountainCarConfig& m = cfg.mountaincar;
        m.min_position = raw.get_double("env.min_position", m.min_position);
        m.max_position = raw.get_double("env.max_position", m.max_position);
        m.max_speed = raw.get_double("env.max_speed", m.max_speed);
        m.goal_position = raw.get_double("env.goal_position", m.goal_position);
        m.force = raw.get_double("env.force", m.force);
        m.gravity = raw.get_double("env.gravity", m.gravity);
        m.goal_reward = raw.get_double("env.goal_reward", m.goal_reward);
        m.action_cost = raw.get_double("env.action_cost", m.action_cost);
        m.horizon = raw.get_int("env.horizon", m.horizon);
        m.start_lo = raw.get_double("env.start_lo", m.start_lo);
        m.start_hi = raw.get_double("env.start_hi", m.start_hi);
    }

    cfg.alpha = raw.get_double("algo.alpha", cfg.alpha);
    cfg.delta = raw.get_double("algo.delta", cfg.delta);
    cfg.eps = raw.get_double("algo.eps", cfg.eps);
    cfg.kappa = raw.get_double("algo.kappa", cfg.kappa);
    cfg.clip = raw.get_double("algo.clip", cfg.clip);
    cfg.grid_points = raw.get_int("algo.grid_points", cfg.grid_points);

    const int dim = cfg.environment == "gridworld" ? 1 : 2;
    if (raw.has("policy.box_lo")) cfg.box.lo = raw.get_double_list("policy.box_lo");
    else cfg.box.lo = dim == 1 ? std::vector<double>{-5.0} : std::vector<double>{-1.0, 0.0};
    if (raw.has("policy.box_hi")) cfg.box.hi = raw.get_double_list("policy.box_hi");
    else cfg.box.hi = dim == 1 ? std::vector<double>{5.0} : std::vector<double>{1.0, 20.0};
    if (raw.has("policy.var")) cfg.hyper_var = raw.get_double_list("policy.var");
    else cfg.hyper_var = dim == 1 ? std::vector<double>{1.0} : std::vector<double>{0.15, 3.0};
    if (raw.has("baseline.params")) cfg.baseline_params = raw.get_double_list("baseline.params");
    else cfg.baseline_params.assign(static_cast<std::size_t>(dim), 0.0);
    cfg.baseline_known = raw.get_bool("baseline.known", true);

    validate_experiment(cfg);
    return cfg;
}

ExperimentConfig load_experiment_config_file(const std::string& path) {
    return load_experiment_config(Config::parse_file(path));
}

Config dump_experiment_config(const ExperimentConfig& cfg) {
    Config out;
    out.set("experiment.environment", cfg.environment);
    out.set("experiment.algorithm", cfg.algorithm);
    out.set("experiment.episodes", std::to_string(cfg.episodes));
    out.set("experiment.seeds", join_seeds(cfg.seeds));
    out.set("experiment.output_dir", cfg.output_dir);
    out.set("experiment.audit", cfg.audit);
    out.set("experiment.audit_rollouts", std::to_string(cfg.audit_rollouts));
    if (cfg.environment == "gridworld") {
        const GridworldConfig& g = cfg.gridworld;
        out.set("env.width", std::to_string(g.width));
        out.set("env.height", std::to_string(g.height));
        out.set("env.horizon", std::to_string(g.horizon));
        out.set("env.slip", format_double(g.slip));
        out.set("env.goal_reward", format_double(g.goal_reward));
        out.set("env.trap_reward", format_double(g.trap_reward));
        out.set("env.start_x", std::to_string(g.start_x));
        out.set("env.start_y", std::to_string(g.start_y));
        out.set("env.goal_x", std::to_string(g.goal_x));
        out.set("env.goal_y", std::to_string(g.goal_y));
        out.set("env.trap_x", std::to_string(g.trap_x));
        out.set("env.trap_y", std::to_string(g.trap_y));
    } else {
        const MountainCarConfig& m = cfg.mountaincar;
        out.set("env.min_position", format_double(m.min_position));
        out.set("env.max_position", format_double(m.max_position));
        out.set("env.max_speed", format_double(m.max_speed));
        out.set("env.goal_position", format_double(m.goal_position));
        out.set("env.force", format_double(m.force));
        out.set("env.gravity", format_double(m.gravity));
        out.set("env.goal_reward", format_double(m.goal_reward));
        out.set("env.action_cost", format_double(m.action_cost));
        out.set("env.horizon", std::to_string(m.horizon));
        out.set("env.start_lo", format_double(m.start_lo));
        out.set("env.start_hi", format_double(m.start_hi));
    }
    out.set("algo.alpha", format_double(cfg.alpha));
    out.set("algo.delta", format_double(cfg.delta));
    out.set("algo.eps", format_double(cfg.eps));
    out.set("algo.kappa", format_double(cfg.kappa));
    out.set("algo.clip", cfg.clip == kInf ? "inf" : format_double(cfg.clip));
    out.set("algo.grid_points", std::to_string(cfg.grid_points));
    out.set("policy.box_lo", join_doubles(cfg.box.lo));
    out.set("policy.box_hi", join_doubles(cfg.box.hi));
    out.set("policy.var", join_doubles(cfg.hyper_var));
    out.set("baseline.params", join_doubles(cfg.baseline_params));
    out.set("baseline.known", cfg.baseline_known ? "true" : "false");
    return out;
}

std::vector<std::string> experiment_preset_names() {
    return {"gridworld_coptimist",    "gridworld_optimist",  "gridworld_cucbvi",
            "gridworld_sigma_sweep",  "mountaincar_coptimist2", "mountaincar_optimist"};
}

Config experiment_preset(const std::string& name) {
    std::string text;
    if (name == "gridworld_coptimist" || name == "gridworld_optimist" ||
        name == "gridworld_cucbvi" || name == "gridworld_sigma_sweep") {
        std::string algorithm = name == "gridworld_optimist" ? "optimist"
                                : name == "gridworld_cucbvi" ? "cucbvi"
                                                             : "coptimist";
        std::string episodes = name == "gridworld_sigma_sweep" ? "550" : "2000";
        text = "[experiment]\n"
               "environment = gridworld\n"
               "algorithm = " + algorithm + "\n"
               "episodes = " + episodes + "\n"
               "seeds = 1,2,3,4,5\n"
               "output_dir = runs/" + name + "\n"
               "audit = exact\n"
               "audit_rollouts = 200\n"
               "\n[env]\n"
               "width = 4\n"
               "height = 3\n"
               "horizon = 10\n"
               "slip = 0.1\n"
               "goal_reward = 0.5\n"
               "trap_reward = -1\n"
               "start_x = 0\nstart_y = 0\n"
               "goal_x = 3\ngoal_y = 2\n"
               "trap_x = 3\ntrap_y = 1\n"
               "\n[algo]\n"
               "alpha = 0.1\n"
               "delta = 0.1\n"
               "eps = 1\n"
               "kappa = 3\n"
               "clip = 1.5\n"
               "grid_points = 11\n"
               "\n[policy]\n"
               "box_lo = -5\n"
               "box_hi = 5\n"
               "var = 1\n"
               "\n[baseline]\n"
               // The model-based run banks budget at rate alpha * J_b, so it
               // needs a competent (not optimal) baseline to fund any
               // exploration within the episode budget; the parametric runs
               // keep the weak baseline that makes their gate interesting.
               "params = " + std::string(name == "gridworld_cucbvi" ? "4" : "0") + "\n"
               "known = true\n";
    } else if (name == "mountaincar_coptimist2" || name == "mountaincar_optimist") {
        std::string algorithm = name == "mountaincar_optimist" ? "optimist" : "coptimist2";
        text = "[experiment]\n"
               "environment = mountaincar\n"
               "algorithm = " + algorithm + "\n"
               "episodes = 800\n"
               "seeds = 1,2,3\n"
               "output_dir = runs/" + name + "\n"
               "audit = mc\n"
               "audit_rollouts = 200\n"
               "\n[env]\n"
               "horizon = 300\n"
               "\n[algo]\n"
               "alpha = 0.5\n"
               "delta = 0.2\n"
               "eps = 1\n"
               "kappa = 3\n"
               "clip = 20\n"
               "grid_points = 11\n"
               "\n[policy]\n"
               "box_lo = -1,0\n"
               "box_hi = 1,20\n"
               "var = 0.15,3\n"
               "\n[baseline]\n"
               "params = 0,6\n"
               "known = true\n";
    } else {
        throw std::invalid_argument("experiment_preset: unknown preset '" + name + "'");
    }
    return Config::parse_string(text, "preset:" + name);
}

namespace {

double problem_f_max(const ExperimentConfig& cfg) {
    if (cfg.environment == "gridworld") {
        TabularMDP mdp = make_gridworld(cfg.gridworld);
        return mdp.horizon * std::max(std::abs(mdp.r_min), std::abs(mdp.r_max));
    }
    const MountainCarConfig& mc = cfg.mountaincar;
    // Actions are clipped to [-1,1], so the per-step cost is at most
    // action_cost and the only positive reward is the goal payout.
    return std::max(mc.goal_reward, mc.horizon * mc.action_cost);
}

ScheduleParams schedule_for(const ExperimentConfig& cfg, bool progressive) {
    ScheduleParams sched;
    sched.delta = cfg.delta;
    sched.dim = cfg.box.dim();
    if (progressive) {
        sched.mode = ScheduleMode::kCompact;
    } else {
        sched.mode = ScheduleMode::kDiscrete;
        long long n = 1;
        for (int i = 0; i < cfg.box.dim(); ++i) n *= cfg.grid_points;
        sched.n_policies = static_cast<int>(n);
    }
    return sched;
}

struct SeedOutcome {
    std::vector<EpisodeRecord> records;
    double j_star = 0.0;
    double baseline_true = 0.0;
    ParamDataset dataset;
    bool param_based = false;
};

SeedOutcome run_param_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    RngStream policy_rng(seed, Stream::kPolicy);
    RngStream env_rng(seed, Stream::kEnv);
    RngStream audit_rng(seed, Stream::kAudit);

    ParamProblem problem;
    problem.box = cfg.box;
    problem.hyper_var = cfg.hyper_var;
    problem.f_max = problem_f_max(cfg);

    std::map<std::vector<double>, double> audit_cache;

    TabularMDP mdp;
    std::vector<int> ref;
    if (cfg.environment == "gridworld") {
        mdp = make_gridworld(cfg.gridworld);
        ref = optimal_reference_actions(mdp);
        problem.play = [&](std::span<const double> xi, RngStream& prng, RngStream& erng) {
            GaussianHyperpolicy hyper({xi.begin(), xi.end()}, cfg.hyper_var);
            std::vector<double> theta = hyper.sample_theta(prng);
            TabularIndexedPolicy pol(ref, mdp.n_actions, mixing_from_theta(theta[0]));
            TabTrajectory traj = rollout(mdp, pol, prng, erng);
            return std::pair<std::vector<double>, double>(std::move(theta), traj.total_return);
        };
        problem.true_value = [&](std::span<const double> xi) {
            std::vector<double> key(xi.begin(), xi.end());
            auto it = audit_cache.find(key);
            if (it != audit_cache.end()) return it->second;
            GaussianHyperpolicy hyper(key, cfg.hyper_var);
            double v;
            if (cfg.audit == "exact") {
                v = exact_hyperpolicy_eval(mdp, hyper, [&](double theta) {
                    return TabularIndexedPolicy(ref, mdp.n_actions, mixing_from_theta(theta));
                });
            } else {
                double acc = 0.0;
                for (int i = 0; i < cfg.audit_rollouts; ++i) {
                    std::vector<double> theta = hyper.sample_theta(audit_rng);
                    TabularIndexedPolicy pol(ref, mdp.n_actions, mixing_from_theta(theta[0]));
                    acc += rollout(mdp, pol, audit_rng, audit_rng).total_return;
                }
                v = acc / static_cast<double>(cfg.audit_rollouts);
            }
            audit_cache.emplace(std::move(key), v);
            return v;
        };
    } else {
        const MountainCarConfig& mc = cfg.mountaincar;
        problem.play = [&](std::span<const double> xi, RngStream& prng, RngStream& erng) {
            GaussianHyperpolicy hyper({xi.begin(), xi.end()}, cfg.hyper_var);
            std::vector<double> theta = hyper.sample_theta(prng);
            LinearDeterministicPolicy pol{theta};
            McTrajectory traj = rollout(mc, pol, erng);
            return std::pair<std::vector<double>, double>(std::move(theta), traj.total_return);
        };
        problem.true_value = [&](std::span<const double> xi) {
            std::vector<double> key(xi.begin(), xi.end());
            auto it = audit_cache.find(key);
            if (it != audit_cache.end()) return it->second;
            GaussianHyperpolicy hyper(key, cfg.hyper_var);
            double acc = 0.0;
            for (int i = 0; i < cfg.audit_rollouts; ++i) {
                LinearDeterministicPolicy pol{hyper.sample_theta(audit_rng)};
                acc += rollout(mc, pol, audit_rng).total_return;
            }
            double v = acc / static_cast<double>(cfg.audit_rollouts);
            audit_cache.emplace(std::move(key), v);
            return v;
        };
    }

    LoopConfig lc;
    lc.algorithm = cfg.algorithm == "optimist"    ? LoopAlgorithm::kOptimist
                   : cfg.algorithm == "coptimist" ? LoopAlgorithm::kCoptimist
                                                  : LoopAlgorithm::kCoptimist2;
    lc.episodes = cfg.episodes;
    lc.alpha = cfg.alpha;
    lc.eps = cfg.eps;
    lc.clip = cfg.clip;
    lc.kappa = cfg.kappa;
    lc.fixed_grid_points = cfg.grid_points;
    // Continuous boxes refine their grid with k; the gridworld family is the
    // fixed discrete set from the start.
    lc.progressive_grid = cfg.algorithm == "coptimist2" ||
                          (cfg.algorithm == "optimist" && cfg.environment == "mountaincar");
    lc.schedule = schedule_for(cfg, lc.progressive_grid);
    lc.baseline = cfg.baseline_params;
    lc.baseline_known = cfg.baseline_known;
    lc.baseline_value = cfg.baseline_known ? problem.true_value(cfg.baseline_params) : 0.0;

    EpisodeLog log = run_conservative_loop(problem, lc, policy_rng, env_rng);

    SeedOutcome out;
    out.records = std::move(log.records);
    out.j_star = log.j_star;
    out.baseline_true = log.baseline_true;
    out.dataset = std::move(log.dataset);
    out.param_based = true;
    return out;
}

SeedOutcome run_cucbvi_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    RngStream policy_rng(seed, Stream::kPolicy);
    RngStream env_rng(seed, Stream::kEnv);

    TabularMDP mdp = make_gridworld(cfg.gridworld);
    std::vector<int> ref = optimal_reference_actions(mdp);
    // The tabular counterpart of the baseline hyperpolicy: expected mixing
    // probability under theta ~ N(xi_b, var).
    double p_bar = gh_expect_normal(64, cfg.baseline_params[0], cfg.hyper_var[0],
                                    [](double theta) { return mixing_from_theta(theta); });
    TabularIndexedPolicy baseline(ref, mdp.n_actions, clamp(p_bar, 1e-12, 1.0 - 1e-12));

    CucbviConfig cc;
    cc.episodes = cfg.episodes;
    cc.alpha = cfg.alpha;
    cc.delta = cfg.delta;
    cc.conservative = true;
    // Regret against the same reference the parametric runs use: the best
    // hyperpolicy on their fixed grid, so the comparison columns line up.
    {
        PolicyGrid grid = uniform_grid(cfg.box, cfg.grid_points);
        double best = kNegInf;
        for (const auto& v : grid.vertices) {
            GaussianHyperpolicy hyper(v, cfg.hyper_var);
            best = std::max(best, exact_hyperpolicy_eval(mdp, hyper, [&](double theta) {
                       return TabularIndexedPolicy(ref, mdp.n_actions, mixing_from_theta(theta));
                   }));
        }
        cc.regret_reference = best;
    }

    CucbviLog log = run_cucbvi(mdp, baseline, cc, policy_rng, env_rng);

    SeedOutcome out;
    out.records = std::move(log.records);
    out.j_star = log.j_star;
    out.baseline_true = log.baseline_true;
    out.param_based = false;
    return out;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    return cfg.algorithm == "cucbvi" ? run_cucbvi_seed(cfg, seed) : run_param_seed(cfg, seed);
}

void write_run_csv(const std::string& path, const std::vector<EpisodeRecord>& records) {
    CsvTable t;
    const std::size_t dim = records.front().params.size();
    t.header = {"episode", "played"};
    for (std::size_t i = 0; i < dim; ++i) t.header.push_back("param_" + std::to_string(i));
    for (const char* c : {"realized_return", "true_value", "pessimistic_estimate", "bonus",
                          "budget", "cum_regret"})
        t.header.push_back(c);
    for (const EpisodeRecord& rec : records) {
        std::vector<std::string> row;
        row.push_back(std::to_string(rec.episode));
        row.push_back(rec.optimistic ? "opt" : "base");
        for (double p : rec.params) row.push_back(format_double(p));
        row.push_back(format_double(rec.realized_return));
        row.push_back(format_double(rec.true_value));
        row.push_back(format_double(rec.estimate - rec.bonus));
        row.push_back(format_double(rec.bonus));
        row.push_back(format_double(rec.budget));
        row.push_back(format_double(rec.cum_regret));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

void write_dataset_csvs(const std::string& dir, std::uint64_t seed, const ParamDataset& ds) {
    const int dim = ds.behaviors().empty() ? 0 : ds.behaviors().front().dim();
    CsvTable behaviors;
    behaviors.header = {"behavior", "count"};
    for (int i = 0; i < dim; ++i) behaviors.header.push_back("mean_" + std::to_string(i));
    for (int i = 0; i < dim; ++i) behaviors.header.push_back("var_" + std::to_string(i));
    for (std::size_t b = 0; b < ds.behaviors().size(); ++b) {
        std::vector<std::string> row = {std::to_string(b), std::to_string(ds.counts()[b])};
        for (double m : ds.behaviors()[b].mean()) row.push_back(format_double(m));
        for (double v : ds.behaviors()[b].var()) row.push_back(format_double(v));
        behaviors.rows.push_back(std::move(row));
    }
    write_csv(dir + "/behaviors_" + std::to_string(seed) + ".csv", behaviors);

    CsvTable samples;
    samples.header = {"sample", "behavior"};
    for (int i = 0; i < dim; ++i) samples.header.push_back("theta_" + std::to_string(i));
    samples.header.push_back("value");
    for (std::size_t j = 0; j < ds.samples().size(); ++j) {
        const ParamSample& s = ds.samples()[j];
        std::vector<std::string> row = {std::to_string(j), std::to_string(s.behavior)};
        for (double th : s.theta) row.push_back(format_double(th));
        row.push_back(format_double(s.value));
        samples.rows.push_back(std::move(row));
    }
    write_csv(dir + "/dataset_" + std::to_string(seed) + ".csv", samples);
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg) {
    validate_experiment(cfg);
    std::filesystem::create_directories(cfg.output_dir);
    {
        std::string text = dump_experiment_config(cfg).dump();
        std::string path = cfg.output_dir + "/config.cfg";
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) throw std::runtime_error("run_experiment: cannot write " + path);
        std::fwrite(text.data(), 1, text.size(), f);
        std::fclose(f);
    }

    const std::size_t n_seeds = cfg.seeds.size();
    std::vector<SeedOutcome> outcomes(n_seeds);
    std::vector<std::exception_ptr> errors(n_seeds);
    {
        std::vector<std::thread> workers;
        workers.reserve(n_seeds);
        for (std::size_t i = 0; i < n_seeds; ++i) {
            workers.emplace_back([&, i] {
                try {
                    outcomes[i] = run_seed(cfg, cfg.seeds[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    RunSummary summary;
    const int K = cfg.episodes;
    for (std::size_t i = 0; i < n_seeds; ++i) {
        const SeedOutcome& oc = outcomes[i];
        write_run_csv(cfg.output_dir + "/run_" + std::to_string(cfg.seeds[i]) + ".csv",
                      oc.records);
        if (oc.param_based) write_dataset_csvs(cfg.output_dir, cfg.seeds[i], oc.dataset);

        SeedSummary s;
        s.seed = cfg.seeds[i];
        s.final_regret = oc.records.back().cum_regret;
        s.min_budget = kInf;
        for (const EpisodeRecord& rec : oc.records) {
            s.min_budget = std::min(s.min_budget, rec.budget);
            if (rec.budget < -1e-9) s.violations += 1;
            if (!rec.optimistic) s.baseline_plays += 1;
        }
        summary.per_seed.push_back(s);
    }

    CsvTable agg;
    agg.header = {"episode",     "return_mean", "return_stderr", "true_value_mean",
                  "true_value_stderr", "budget_mean", "budget_stderr", "regret_mean",
                  "regret_stderr"};
    summary.return_mean.reserve(static_cast<std::size_t>(K));
    summary.budget_mean.reserve(static_cast<std::size_t>(K));
    summary.regret_mean.reserve(static_cast<std::size_t>(K));
    std::vector<double> col(n_seeds);
    for (int e = 0; e < K; ++e) {
        auto episode_stat = [&](auto pick) {
            for (std::size_t i = 0; i < n_seeds; ++i)
                col[i] = pick(outcomes[i].records[static_cast<std::size_t>(e)]);
            return mean_stderr(col);
        };
        MeanStderr ret = episode_stat([](const EpisodeRecord& r) { return r.realized_return; });
        MeanStderr tv = episode_stat([](const EpisodeRecord& r) { return r.true_value; });
        MeanStderr bud = episode_stat([](const EpisodeRecord& r) { return r.budget; });
        MeanStderr reg = episode_stat([](const EpisodeRecord& r) { return r.cum_regret; });
        summary.return_mean.push_back(ret.mean);
        summary.budget_mean.push_back(bud.mean);
        summary.regret_mean.push_back(reg.mean);
        agg.rows.push_back({std::to_string(e + 1), format_double(ret.mean),
                            format_double(ret.stderr_), format_double(tv.mean),
                            format_double(tv.stderr_), format_double(bud.mean),
                            format_double(bud.stderr_), format_double(reg.mean),
                            format_double(reg.stderr_)});
    }
    write_csv(cfg.output_dir + "/aggregate.csv", agg);

    std::vector<double> final_regrets, min_budgets, violation_counts, baseline_counts;
    for (const SeedSummary& s : summary.per_seed) {
        final_regrets.push_back(s.final_regret);
        min_budgets.push_back(s.min_budget);
        violation_counts.push_back(static_cast<double>(s.violations));
        baseline_counts.push_back(static_cast<double>(s.baseline_plays));
        summary.violations_total += s.violations;
    }
    MeanStderr fr = mean_stderr(final_regrets);
    MeanStderr mb = mean_stderr(min_budgets);
    MeanStderr vc = mean_stderr(violation_counts);
    MeanStderr bc = mean_stderr(baseline_counts);
    summary.final_regret_mean = fr.mean;
    summary.final_regret_stderr = fr.stderr_;
    summary.min_budget_mean = mb.mean;
    summary.baseline_plays_mean = bc.mean;

    CsvTable sum;
    sum.header = {"seed", "final_regret", "min_budget", "violations", "baseline_plays"};
    for (const SeedSummary& s : summary.per_seed)
        sum.rows.push_back({std::to_string(s.seed), format_double(s.final_regret),
                            format_double(s.min_budget), std::to_string(s.violations),
                            std::to_string(s.baseline_plays)});
    sum.rows.push_back({"mean", format_double(fr.mean), format_double(mb.mean),
                        format_double(vc.mean), format_double(bc.mean)});
    sum.rows.push_back({"stderr", format_double(fr.stderr_), format_double(mb.stderr_),
                        format_double(vc.stderr_), format_double(bc.stderr_)});
    write_csv(cfg.output_dir + "/summary.csv", sum);

    return summary;
}

std::vector<RunSummary> sigma_sweep(const ExperimentConfig& cfg,
                                    const std::vector<double>& sigmas) {
    if (cfg.environment != "gridworld" || cfg.algorithm == "cucbvi")
        throw std::invalid_argument(
            "sigma_sweep: only gridworld parameter-based runs sweep the hyperpolicy sigma");
    if (sigmas.empty()) throw std::invalid_argument("sigma_sweep: need at least one sigma");
    for (double s : sigmas)
        if (!(s > 0.0)) throw std::invalid_argument("sigma_sweep: sigma must be positive");

    std::filesystem::create_directories(cfg.output_dir);
    std::vector<RunSummary> results;
    CsvTable sweep;
    sweep.header = {"sigma", "final_regret_mean", "final_regret_stderr", "min_budget_min",
                    "violations_total", "baseline_plays_mean"};
    for (double sigma : sigmas) {
        ExperimentConfig sub = cfg;
        sub.hyper_var.assign(cfg.hyper_var.size(), sigma * sigma);
        sub.output_dir = cfg.output_dir + "/sigma_" + format_compact(sigma);
        RunSummary rs = run_experiment(sub);
        double min_budget = kInf;
        for (const SeedSummary& s : rs.per_seed) min_budget = std::min(min_budget, s.min_budget);
        sweep.rows.push_back({format_compact(sigma), format_double(rs.final_regret_mean),
                              format_double(rs.final_regret_stderr), format_double(min_budget),
                              std::to_string(rs.violations_total),
                              format_double(rs.baseline_plays_mean)});
        results.push_back(std::move(rs));
    }
    write_csv(cfg.output_dir + "/sweep_summary.csv", sweep);
    return results;
}

PolicyReport top_policy_report(const EpisodeLog& log, const PolicyGrid& grid, int top_n,
                               const ExperimentConfig& cfg) {
    if (grid.vertices.empty()) throw std::invalid_argument("top_policy_report: empty grid");
    if (top_n < 1) throw std::invalid_argument("top_policy_report: top_n must be >= 1");
    top_n = std::min(top_n, static_cast<int>(grid.vertices.size()));
    const int K = static_cast<int>(log.records.size());
    if (log.dataset.size() != K)
        throw std::invalid_argument("top_policy_report: dataset and records disagree");

    const ScheduleParams sched = schedule_for(cfg, false);
    const double f_max = problem_f_max(cfg);

    PolicyReport report;

    // Final scores with the complete dataset rank the vertices.
    {
        std::vector<double> pooled = pooled_log_densities(log.dataset);
        double lid = log_inv_delta_k(K + 1, sched);
        for (std::size_t v = 0; v < grid.vertices.size(); ++v) {
            GaussianHyperpolicy target(grid.vertices[v], cfg.hyper_var);
            RbhEvaluation eval = evaluate_target(log.dataset, target, K + 1, cfg.eps, lid,
                                                 f_max, cfg.clip, pooled);
            PolicyReportEntry entry;
            entry.vertex = static_cast<int>(v);
            entry.params = grid.vertices[v];
            entry.estimate = eval.estimate;
            entry.bonus = eval.bonus;
            report.table.push_back(std::move(entry));
        }
    }
    for (const EpisodeRecord& rec : log.records) {
        if (!rec.optimistic) continue;
        auto it = std::find(grid.vertices.begin(), grid.vertices.end(), rec.params);
        if (it == grid.vertices.end())
            throw std::invalid_argument(
                "top_policy_report: played parameters are not a grid vertex; "
                "the report needs a fixed-grid run");
        report.table[static_cast<std::size_t>(it - grid.vertices.begin())].pulls += 1;
    }
    std::stable_sort(report.table.begin(), report.table.end(),
                     [](const PolicyReportEntry& a, const PolicyReportEntry& b) {
                         return a.estimate + a.bonus > b.estimate + b.bonus;
                     });

    std::vector<int> top;
    for (int i = 0; i < top_n; ++i) top.push_back(report.table[static_cast<std::size_t>(i)].vertex);

    // Replay the dataset in episode order; at episode k the learner saw the
    // first k-1 samples. k = K+1 is the post-run view used for the ranking.
    ParamDataset prefix;
    for (int k = 2; k <= K + 1; ++k) {
        const ParamSample& s = log.dataset.samples()[static_cast<std::size_t>(k - 2)];
        prefix.add_sample(log.dataset.behaviors()[static_cast<std::size_t>(s.behavior)], s.theta,
                          s.value);
        std::vector<double> pooled = pooled_log_densities(prefix);
        double lid = log_inv_delta_k(k, sched);
        for (int v : top) {
            GaussianHyperpolicy target(grid.vertices[static_cast<std::size_t>(v)], cfg.hyper_var);
            RbhEvaluation eval =
                evaluate_target(prefix, target, k, cfg.eps, lid, f_max, cfg.clip, pooled);
            report.series.push_back({k, v, eval.estimate, eval.bonus});
        }
    }
    return report;
}

void write_policy_reports(const std::string& logdir, int top_n) {
    ExperimentConfig cfg = load_experiment_config_file(logdir + "/config.cfg");
    if (cfg.algorithm != "optimist" && cfg.algorithm != "coptimist")
        throw ConfigError(
            "config error: experiment.algorithm: the policy report needs a fixed-grid run "
            "(optimist or coptimist)");
    PolicyGrid grid = uniform_grid(cfg.box, cfg.grid_points);
    const int dim = cfg.box.dim();

    for (std::uint64_t seed : cfg.seeds) {
        const std::string tag = std::to_string(seed);
        CsvTable behaviors = read_csv(logdir + "/behaviors_" + tag + ".csv");
        std::vector<GaussianHyperpolicy> behs;
        for (const auto& row : behaviors.rows) {
            std::vector<double> mean, var;
            for (int i = 0; i < dim; ++i) {
                mean.push_back(std::stod(row[static_cast<std::size_t>(2 + i)]));
                var.push_back(std::stod(row[static_cast<std::size_t>(2 + dim + i)]));
            }
            behs.emplace_back(std::move(mean), std::move(var));
        }

        EpisodeLog log;
        CsvTable samples = read_csv(logdir + "/dataset_" + tag + ".csv");
        for (const auto& row : samples.rows) {
            int behavior = std::stoi(row[1]);
            std::vector<double> theta;
            for (int i = 0; i < dim; ++i)
                theta.push_back(std::stod(row[static_cast<std::size_t>(2 + i)]));
            double value = std::stod(row[static_cast<std::size_t>(2 + dim)]);
            log.dataset.add_sample(behs[static_cast<std::size_t>(behavior)], std::move(theta),
                                   value);
        }

        CsvTable run = read_csv(logdir + "/run_" + tag + ".csv");
        for (const auto& row : run.rows) {
            EpisodeRecord rec;
            rec.episode = std::stoi(row[0]);
            rec.optimistic = row[1] == "opt";
            for (int i = 0; i < dim; ++i)
                rec.params.push_back(std::stod(row[static_cast<std::size_t>(2 + i)]));
            log.records.push_back(std::move(rec));
        }

        PolicyReport report = top_policy_report(log, grid, top_n, cfg);

        CsvTable series;
        series.header = {"episode", "vertex", "estimate", "bonus"};
        for (const PolicySeriesPoint& p : report.series)
            series.rows.push_back({std::to_string(p.episode), std::to_string(p.vertex),
                                   format_double(p.estimate), format_double(p.bonus)});
        write_csv(logdir + "/report_" + tag + ".csv", series);

        CsvTable pulls;
        pulls.header = {"vertex"};
        for (int i = 0; i < dim; ++i) pulls.header.push_back("param_" + std::to_string(i));
        pulls.header.push_back("pulls");
        pulls.header.push_back("final_estimate");
        pulls.header.push_back("final_bonus");
        for (const PolicyReportEntry& e : report.table) {
            std::vector<std::string> row = {std::to_string(e.vertex)};
            for (double p : e.params) row.push_back(format_double(p));
            row.push_back(std::to_string(e.pulls));
            row.push_back(format_double(e.estimate));
            row.push_back(format_double(e.bonus));
            pulls.rows.push_back(std::move(row));
        }
        write_csv(logdir + "/pulls_" + tag + ".csv", pulls);
    }
}

}  // namespace coex
