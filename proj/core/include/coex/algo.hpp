#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coex/math_util.hpp"
#include "coex/mis.hpp"
#include "coex/policies.hpp"
#include "coex/rng.hpp"

namespace coex {

// Per-episode failure probability, returned as log(1/delta_k) so the caller
// never leaves log space. The discrete schedule splits delta over a fixed
// policy set; the compact schedule also covers a mesh that refines with k.
enum class ScheduleMode { kDiscrete, kCompact };

struct ScheduleParams {
    ScheduleMode mode = ScheduleMode::kDiscrete;
    double delta = 0.1;
    int dim = 1;         // compact mode
    int n_policies = 1;  // discrete mode
};

double log_inv_delta_k(int k, const ScheduleParams& sched);

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
    int dim() const { return static_cast<int>(lo.size()); }
};

struct PolicyGrid {
    std::vector<std::vector<double>> vertices;  // row-major over dimensions
    int points_per_dim = 0;
};

// ceil(k^(1/kappa)) vertices per dimension; kappa must exceed 2.
int grid_points_per_dim(int k, double kappa);

// Evenly spaced grid including box endpoints; a single point sits at the
// box center.
PolicyGrid uniform_grid(const Box& box, int points_per_dim);

struct SelectionParams {
    double eps = 1.0;
    double f_max = 1.0;
    double clip = kInf;
    double log_inv_delta = 1.0;
    std::vector<double> hyper_var;  // shared diagonal covariance of the family
};

struct SelectionResult {
    int index = -1;
    RbhEvaluation eval;
};

// Scores every grid vertex by estimate + bonus and returns the argmax;
// exact ties go to the lowest vertex index.
SelectionResult select_optimistic(const ParamDataset& ds, const PolicyGrid& grid, int k,
                                  const SelectionParams& params,
                                  std::span<const double> pooled = {});

// Played-policy history: optimistic plays are deduplicated with
// multiplicities, baseline plays only need a count.
class ConservativeLedger {
  public:
    void record_optimistic(const GaussianHyperpolicy& policy);
    void record_baseline();

    int episodes() const { return optimistic_count_ + baseline_count_; }
    int optimistic_count() const { return optimistic_count_; }
    int baseline_count() const { return baseline_count_; }
    const std::vector<GaussianHyperpolicy>& unique_policies() const { return unique_; }
    const std::vector<int>& multiplicities() const { return multiplicities_; }

  private:
    std::vector<GaussianHyperpolicy> unique_;
    std::vector<int> multiplicities_;
    int optimistic_count_ = 0;
    int baseline_count_ = 0;
};

struct GateParams {
    double alpha = 0.1;
    SelectionParams selection;
    // Known baseline: exact value used for both past baseline plays and the
    // threshold. Unknown baseline: both sides fall back to current data-driven
    // estimates of the baseline policy.
    double baseline_value = 0.0;
    const GaussianHyperpolicy* unknown_baseline = nullptr;
};

// Budget condition at episode k: candidate pessimistic value plus the
// re-estimated pessimistic values of all previously played optimistic
// policies plus the credited baseline plays must reach (1-alpha) * k * J_b.
// Non-strict comparison; boundary equality passes.
bool conservative_check(const ParamDataset& ds, const ConservativeLedger& ledger,
                        double candidate_pessimistic, int k, const GateParams& gate,
                        std::span<const double> pooled = {});

// Optimistic proxy for an unknown baseline value: estimate + bonus.
double baseline_upper_bound(const ParamDataset& ds, const GaussianHyperpolicy& baseline,
                            int k, const SelectionParams& params,
                            std::span<const double> pooled = {});

enum class LoopAlgorithm { kOptimist, kCoptimist, kCoptimist2 };

// Environment- and family-specific callbacks for the generic episode loop.
struct ParamProblem {
    Box box;                            // hyperpolicy mean box
    std::vector<double> hyper_var;      // shared diagonal covariance
    double f_max = 1.0;
    // Sample theta from the hyperpolicy centered at xi, run the induced
    // policy, and return (theta, realized return).
    std::function<std::pair<std::vector<double>, double>(
        std::span<const double> xi, RngStream& policy_rng, RngStream& env_rng)>
        play;
    // Audited expected return of the hyperpolicy centered at xi.
    std::function<double(std::span<const double> xi)> true_value;
};

struct LoopConfig {
    LoopAlgorithm algorithm = LoopAlgorithm::kCoptimist;
    int episodes = 100;
    double alpha = 0.1;
    double eps = 1.0;
    double clip = kInf;
    double kappa = 3.0;        // progressive grids
    int fixed_grid_points = 11;  // fixed grid
    // kCoptimist2 always refines the grid with k; kCoptimist never does; for
    // kOptimist this flag picks the mode (the ungated loop exists in both).
    bool progressive_grid = false;
    ScheduleParams schedule;
    std::vector<double> baseline;  // hyperpolicy mean of the baseline
    bool baseline_known = true;
    double baseline_value = 0.0;  // exact J of the baseline when known
};

struct EpisodeRecord {
    int episode = 0;
    bool optimistic = false;
    std::vector<double> params;
    double realized_return = 0.0;
    double true_value = 0.0;
    double estimate = 0.0;
    double bonus = 0.0;
    double budget = 0.0;      // audited true budget
    double cum_regret = 0.0;  // against the best final-grid vertex
};

struct EpisodeLog {
    std::vector<EpisodeRecord> records;
    double j_star = 0.0;
    double baseline_true = 0.0;
    ParamDataset dataset;
    ConservativeLedger ledger;
};

// Shared episode loop. Episode 1 always plays the baseline to seed the
// dataset; afterwards the grid candidate is played directly (optimist) or
// gated by the budget condition.
EpisodeLog run_conservative_loop(const ParamProblem& problem, const LoopConfig& config,
                                 RngStream& policy_rng, RngStream& env_rng);

EpisodeLog run_optimist(const ParamProblem& problem, const LoopConfig& config,
                        RngStream& policy_rng, RngStream& env_rng);
EpisodeLog run_coptimist(const ParamProblem& problem, const LoopConfig& config,
                         RngStream& policy_rng, RngStream& env_rng);

}  // namespace coex
