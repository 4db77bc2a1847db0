#include "coex/algo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "coex/math_util.hpp"

namespace coex {

double log_inv_delta_k(int k, const ScheduleParams& sched) {
    if (k < 1) throw std::invalid_argument("log_inv_delta_k: k must be >= 1");
    if (!(sched.delta > 0.0 && sched.delta < 1.0))
        throw std::invalid_argument("log_inv_delta_k: delta must be in (0,1)");
    const double log_pi2 = 2.0 * std::log(std::numbers::pi);
    const double log_k = std::log(static_cast<double>(k));
    if (sched.mode == ScheduleMode::kDiscrete) {
        if (sched.n_policies < 1)
            throw std::invalid_argument("log_inv_delta_k: policy count must be >= 1");
        // delta_k = 3 delta / (k^2 pi^2 |Pi|)
        return 2.0 * log_k + log_pi2 + std::log(static_cast<double>(sched.n_policies)) -
               std::log(3.0 * sched.delta);
    }
    if (sched.dim < 1) throw std::invalid_argument("log_inv_delta_k: dim must be >= 1");
    // delta_k = 6 delta / (k^2 pi^2 (2 + d^d k^{2d}))
    const double d = static_cast<double>(sched.dim);
    double log_mesh = logaddexp(std::log(2.0), d * std::log(d) + 2.0 * d * log_k);
    return 2.0 * log_k + log_pi2 + log_mesh - std::log(6.0 * sched.delta);
}

int grid_points_per_dim(int k, double kappa) {
    if (k < 1) throw std::invalid_argument("grid_points_per_dim: k must be >= 1");
    if (!(kappa > 2.0))
        throw std::invalid_argument("grid_points_per_dim: kappa must be greater than 2");
    return static_cast<int>(std::ceil(std::pow(static_cast<double>(k), 1.0 / kappa)));
}

PolicyGrid uniform_grid(const Box& box, int points_per_dim) {
    const int dim = box.dim();
    if (dim < 1 || box.hi.size() != box.lo.size())
        throw std::invalid_argument("uniform_grid: malformed box");
    for (int i = 0; i < dim; ++i)
        if (!(box.lo[static_cast<std::size_t>(i)] < box.hi[static_cast<std::size_t>(i)]))
            throw std::invalid_argument("uniform_grid: box must have positive extent");
    if (points_per_dim < 1)
        throw std::invalid_argument("uniform_grid: need at least one point per dimension");

    PolicyGrid grid;
    grid.points_per_dim = points_per_dim;
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        auto& axis = axes[static_cast<std::size_t>(i)];
        double lo = box.lo[static_cast<std::size_t>(i)];
        double hi = box.hi[static_cast<std::size_t>(i)];
        if (points_per_dim == 1) {
            axis.push_back(0.5 * (lo + hi));
        } else {
            double step = (hi - lo) / static_cast<double>(points_per_dim - 1);
            for (int j = 0; j < points_per_dim; ++j)
                axis.push_back(lo + step * static_cast<double>(j));
            axis.back() = hi;  // keep the endpoint exact
        }
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
    const std::size_t total = [&] {
        std::size_t t = 1;
        for (int i = 0; i < dim; ++i) t *= axes[static_cast<std::size_t>(i)].size();
        return t;
    }();
    grid.vertices.reserve(total);
    for (std::size_t v = 0; v < total; ++v) {
        std::vector<double> vertex(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i)
            vertex[static_cast<std::size_t>(i)] = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
        grid.vertices.push_back(std::move(vertex));
        // Odometer increment, last dimension fastest.
        for (int i = dim - 1; i >= 0; --i) {
            auto& j = idx[static_cast<std::size_t>(i)];
            if (++j < axes[static_cast<std::size_t>(i)].size()) break;
            j = 0;
        }
    }
    return grid;
}

SelectionResult select_optimistic(const ParamDataset& ds, const PolicyGrid& grid, int k,
                                  const SelectionParams& params,
                                  std::span<const double> pooled) {
    if (grid.vertices.empty()) throw std::invalid_argument("select_optimistic: empty grid");
    std::vector<double> local;
    if (pooled.empty()) {
        local = pooled_log_densities(ds);
        pooled = local;
    }
    SelectionResult best;
    double best_score = kNegInf;
    for (std::size_t v = 0; v < grid.vertices.size(); ++v) {
        GaussianHyperpolicy target(grid.vertices[v], params.hyper_var);
        RbhEvaluation eval = evaluate_target(ds, target, k, params.eps, params.log_inv_delta,
                                             params.f_max, params.clip, pooled);
        double score = eval.optimistic();
        if (score > best_score) {
            best_score = score;
            best.index = static_cast<int>(v);
            best.eval = eval;
        }
    }
    return best;
}

void ConservativeLedger::record_optimistic(const GaussianHyperpolicy& policy) {
    for (std::size_t i = 0; i < unique_.size(); ++i) {
        if (unique_[i] == policy) {
            multiplicities_[i] += 1;
            optimistic_count_ += 1;
            return;
        }
    }
    unique_.push_back(policy);
    multiplicities_.push_back(1);
    optimistic_count_ += 1;
}

void ConservativeLedger::record_baseline() { baseline_count_ += 1; }

bool conservative_check(const ParamDataset& ds, const ConservativeLedger& ledger,
                        double candidate_pessimistic, int k, const GateParams& gate,
                        std::span<const double> pooled) {
    if (!(gate.alpha > 0.0 && gate.alpha < 1.0))
        throw std::invalid_argument("conservative_check: alpha must be in (0,1)");
    if (ledger.episodes() != k - 1)
        throw std::invalid_argument("conservative_check: ledger must hold k-1 episodes");
    std::vector<double> local;
    if (pooled.empty() && ds.size() > 0) {
        local = pooled_log_densities(ds);
        pooled = local;
    }
    const SelectionParams& sp = gate.selection;
    double lhs = candidate_pessimistic;
    for (std::size_t i = 0; i < ledger.unique_policies().size(); ++i) {
        RbhEvaluation eval = evaluate_target(ds, ledger.unique_policies()[i], k, sp.eps,
                                             sp.log_inv_delta, sp.f_max, sp.clip, pooled);
        lhs += static_cast<double>(ledger.multiplicities()[i]) * eval.pessimistic();
    }
    double baseline_value = gate.baseline_value;
    if (gate.unknown_baseline != nullptr) {
        RbhEvaluation eval = evaluate_target(ds, *gate.unknown_baseline, k, sp.eps,
                                             sp.log_inv_delta, sp.f_max, sp.clip, pooled);
        lhs += static_cast<double>(ledger.baseline_count()) * eval.pessimistic();
        baseline_value = eval.optimistic();
    } else {
        lhs += static_cast<double>(ledger.baseline_count()) * baseline_value;
    }
    double rhs = (1.0 - gate.alpha) * static_cast<double>(k) * baseline_value;
    return lhs >= rhs;
}

double baseline_upper_bound(const ParamDataset& ds, const GaussianHyperpolicy& baseline,
                            int k, const SelectionParams& params,
                            std::span<const double> pooled) {
    if (ds.size() < 1)
        throw std::invalid_argument("baseline_upper_bound: empty dataset");
    RbhEvaluation eval = evaluate_target(ds, baseline, k, params.eps, params.log_inv_delta,
                                         params.f_max, params.clip, pooled);
    return eval.optimistic();
}

EpisodeLog run_conservative_loop(const ParamProblem& problem, const LoopConfig& config,
                                 RngStream& policy_rng, RngStream& env_rng) {
    if (config.episodes < 1)
        throw std::invalid_argument("run_conservative_loop: episodes must be >= 1");
    if (static_cast<int>(config.baseline.size()) != problem.box.dim())
        throw std::invalid_argument("run_conservative_loop: baseline dimension mismatch");

    const bool progressive =
        config.algorithm == LoopAlgorithm::kCoptimist2 ||
        (config.algorithm == LoopAlgorithm::kOptimist && config.progressive_grid);
    const bool gated = config.algorithm != LoopAlgorithm::kOptimist;

    PolicyGrid fixed_grid;
    if (!progressive) fixed_grid = uniform_grid(problem.box, config.fixed_grid_points);

    EpisodeLog log;
    log.baseline_true = problem.true_value(config.baseline);
    const double known_baseline_value =
        config.baseline_known ? config.baseline_value : 0.0;

    // Best true value over the final grid, the regret reference.
    {
        PolicyGrid final_grid =
            progressive ? uniform_grid(problem.box,
                                       grid_points_per_dim(config.episodes, config.kappa))
                        : fixed_grid;
        log.j_star = kNegInf;
        for (const auto& v : final_grid.vertices)
            log.j_star = std::max(log.j_star, problem.true_value(v));
    }

    GaussianHyperpolicy baseline_hyper(config.baseline, problem.hyper_var);

    double cum_true = 0.0;
    double cum_regret = 0.0;
    for (int k = 1; k <= config.episodes; ++k) {
        const double lid = log_inv_delta_k(k, config.schedule);
        SelectionParams sp{config.eps, problem.f_max, config.clip, lid, problem.hyper_var};

        bool play_optimistic = false;
        std::vector<double> chosen = config.baseline;
        RbhEvaluation chosen_eval;
        bool have_eval = false;

        if (k > 1) {
            const PolicyGrid grid =
                progressive ? uniform_grid(problem.box, grid_points_per_dim(k, config.kappa))
                            : fixed_grid;
            std::vector<double> pooled = pooled_log_densities(log.dataset);
            SelectionResult sel = select_optimistic(log.dataset, grid, k, sp, pooled);
            bool accepted = true;
            if (gated) {
                GateParams gate;
                gate.alpha = config.alpha;
                gate.selection = sp;
                gate.baseline_value = known_baseline_value;
                gate.unknown_baseline = config.baseline_known ? nullptr : &baseline_hyper;
                accepted = conservative_check(log.dataset, log.ledger,
                                              sel.eval.pessimistic(), k, gate, pooled);
            }
            if (accepted) {
                play_optimistic = true;
                chosen = grid.vertices[static_cast<std::size_t>(sel.index)];
                chosen_eval = sel.eval;
                have_eval = true;
            } else if (!config.baseline_known) {
                chosen_eval = evaluate_target(log.dataset, baseline_hyper, k, sp.eps,
                                              sp.log_inv_delta, sp.f_max, sp.clip, pooled);
                have_eval = true;
            }
        }

        auto [theta, realized] = problem.play(chosen, policy_rng, env_rng);
        double true_j = play_optimistic ? problem.true_value(chosen) : log.baseline_true;
        cum_true += true_j;
        cum_regret += log.j_star - true_j;

        EpisodeRecord rec;
        rec.episode = k;
        rec.optimistic = play_optimistic;
        rec.params = chosen;
        rec.realized_return = realized;
        rec.true_value = true_j;
        if (have_eval) {
            rec.estimate = chosen_eval.estimate;
            rec.bonus = chosen_eval.bonus;
        } else {
            // Baseline play with a known value (or the seeding episode).
            rec.estimate = config.baseline_known ? known_baseline_value
                                                 : std::numeric_limits<double>::quiet_NaN();
            rec.bonus = config.baseline_known ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        }
        rec.budget = cum_true - (1.0 - config.alpha) * static_cast<double>(k) * log.baseline_true;
        rec.cum_regret = cum_regret;
        log.records.push_back(std::move(rec));

        GaussianHyperpolicy played(chosen, problem.hyper_var);
        log.dataset.add_sample(played, std::move(theta), realized);
        if (play_optimistic)
            log.ledger.record_optimistic(played);
        else
            log.ledger.record_baseline();
    }
    return log;
}

EpisodeLog run_optimist(const ParamProblem& problem, const LoopConfig& config,
                        RngStream& policy_rng, RngStream& env_rng) {
    LoopConfig c = config;
    c.algorithm = LoopAlgorithm::kOptimist;
    return run_conservative_loop(problem, c, policy_rng, env_rng);
}

EpisodeLog run_coptimist(const ParamProblem& problem, const LoopConfig& config,
                         RngStream& policy_rng, RngStream& env_rng) {
    LoopConfig c = config;
    if (c.algorithm == LoopAlgorithm::kOptimist) c.algorithm = LoopAlgorithm::kCoptimist;
    return run_conservative_loop(problem, c, policy_rng, env_rng);
}

}  // namespace coex
