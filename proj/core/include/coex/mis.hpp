#pragma once

#include <span>
#include <vector>

#include "coex/policies.hpp"
#include "coex/trajectory.hpp"

namespace coex {

// Logged data grouped by the (hyper)policy that generated each sample. The
// balance-heuristic weight of a sample never depends on which component drew
// it, only on the pooled behavior density, so behaviors are deduplicated and
// carry multiplicities.

struct ParamSample {
    int behavior = 0;
    std::vector<double> theta;
    double value = 0.0;  // realized return of the rollout driven by theta
};

class ParamDataset {
  public:
    // Find-or-add by exact parameter equality; returns the behavior index.
    int add_behavior(const GaussianHyperpolicy& hyper);
    void add_sample(const GaussianHyperpolicy& hyper, std::vector<double> theta, double value);

    int size() const { return static_cast<int>(samples_.size()); }
    const std::vector<GaussianHyperpolicy>& behaviors() const { return behaviors_; }
    const std::vector<int>& counts() const { return counts_; }
    const std::vector<ParamSample>& samples() const { return samples_; }

  private:
    std::vector<GaussianHyperpolicy> behaviors_;
    std::vector<int> counts_;
    std::vector<ParamSample> samples_;
};

struct ActionSample {
    int behavior = 0;
    TabTrajectory traj;
};

class ActionDataset {
  public:
    int add_behavior(const TabularIndexedPolicy& policy);
    void add_sample(const TabularIndexedPolicy& policy, TabTrajectory traj);

    int size() const { return static_cast<int>(samples_.size()); }
    const std::vector<TabularIndexedPolicy>& behaviors() const { return behaviors_; }
    const std::vector<int>& counts() const { return counts_; }
    const std::vector<ActionSample>& samples() const { return samples_; }

  private:
    std::vector<TabularIndexedPolicy> behaviors_;
    std::vector<int> counts_;
    std::vector<ActionSample> samples_;
};

// log sum_i N_i q_i(sample) for every sample, the shared denominator of all
// balance-heuristic weights on this dataset. Computing it once per episode
// makes scoring many targets linear instead of quadratic.
std::vector<double> pooled_log_densities(const ParamDataset& ds);
std::vector<double> pooled_log_densities(const ActionDataset& ds);

// Balance-heuristic weight n * q(sample|target) / sum_i N_i q_i(sample),
// with n the dataset size. Throws std::domain_error when the pooled behavior
// density degenerates to zero.
double bh_raw_weight(const ParamDataset& ds, const GaussianHyperpolicy& target,
                     const ParamSample& sample);
double bh_raw_weight(const ActionDataset& ds, const TabularIndexedPolicy& target,
                     const ActionSample& sample);

// Exponentiated Renyi divergence of order 1+eps between diagonal Gaussians:
// (integral of p^{1+eps} q^{-eps})^{1/eps}. Returns +inf when the blended
// covariance (1+eps)*var_q - eps*var_p is not positive definite.
double renyi_gaussian(const GaussianHyperpolicy& p, const GaussianHyperpolicy& q, double eps);

// Upper bound on the exponentiated Renyi divergence between the target and
// the multiplicity-weighted behavior mixture. Takes the tighter of
//   (a) min_m (n/N_m) * renyi(target, behavior_m), and
//   (b) direct Gauss-Hermite quadrature of the mixture integral (dim <= 2).
// The result is always >= 1.
double renyi_mixture_bound(const ParamDataset& ds, const GaussianHyperpolicy& target,
                           double eps, int quad_nodes = 128);

// Weight-truncation level ((n * renyi^eps) / log_inv_delta)^{eps/(1+eps)}
// for a dataset of n = k-1 samples.
double truncation_threshold(int k, double renyi, double log_inv_delta, double eps);

// High-probability half-width f_max * (sqrt(2)+4/3) *
// (renyi * log_inv_delta / (k-1))^{eps/(1+eps)}, capped at clip.
double exploration_bonus(int k, double renyi, double log_inv_delta, double eps,
                         double f_max, double clip);

// Truncated balance-heuristic estimate (1/n) sum_j min(threshold, w_j) f_j.
// An infinite threshold gives the plain unbiased estimator.
double rbh_estimate(const ParamDataset& ds, const GaussianHyperpolicy& target,
                    double threshold,
                    std::span<const double> pooled = {});
double rbh_estimate(const ActionDataset& ds, const TabularIndexedPolicy& target,
                    double threshold,
                    std::span<const double> pooled = {});

struct RbhEvaluation {
    double estimate = 0.0;
    double bonus = 0.0;
    double renyi = 1.0;
    double threshold = 0.0;

    double pessimistic() const { return estimate - bonus; }
    double optimistic() const { return estimate + bonus; }
};

// Full per-target evaluation at episode k: mixture Renyi bound, adaptive
// truncation, truncated estimate, and exploration bonus.
RbhEvaluation evaluate_target(const ParamDataset& ds, const GaussianHyperpolicy& target,
                              int k, double eps, double log_inv_delta, double f_max,
                              double clip, std::span<const double> pooled = {});

}  // namespace coex
