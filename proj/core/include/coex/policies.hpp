#pragma once

#include <span>
#include <vector>

#include "coex/rng.hpp"
#include "coex/trajectory.hpp"

namespace coex {

// Maps an unbounded score to a mixing probability in (0,1).
double sigmoid_link(double theta);

// Stochastic finite-action policy built around one reference action per
// state: the reference action gets probability p, every other action gets
// (1-p)/(A-1). p must lie strictly inside (0,1) so every action keeps
// positive probability and trajectory densities stay finite.
class TabularIndexedPolicy {
  public:
    TabularIndexedPolicy(std::vector<int> reference_actions, int n_actions, double p);

    int n_states() const { return static_cast<int>(reference_.size()); }
    int n_actions() const { return n_actions_; }
    double mixing() const { return p_; }
    int reference(int state) const { return reference_[static_cast<std::size_t>(state)]; }

    double prob(int state, int action) const;
    double log_prob(int state, int action) const;
    int sample_action(int state, RngStream& rng) const;

  private:
    std::vector<int> reference_;
    int n_actions_;
    double p_;
};

// Deterministic continuous controller a = clip(theta . features, lo, hi).
struct LinearDeterministicPolicy {
    std::vector<double> theta;
    double action_lo = -1.0;
    double action_hi = 1.0;

    double act(std::span<const double> features) const;
};

// Diagonal Gaussian distribution over policy parameters.
class GaussianHyperpolicy {
  public:
    GaussianHyperpolicy(std::vector<double> mean, std::vector<double> var);

    int dim() const { return static_cast<int>(mean_.size()); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& var() const { return var_; }

    double logpdf(std::span<const double> theta) const;
    std::vector<double> sample_theta(RngStream& rng) const;

    friend bool operator==(const GaussianHyperpolicy& a, const GaussianHyperpolicy& b) {
        return a.mean_ == b.mean_ && a.var_ == b.var_;
    }

  private:
    std::vector<double> mean_;
    std::vector<double> var_;
};

// Log density of the action sequence under the policy: sum_t log pi(a_t|s_t).
double trajectory_log_density(const TabularIndexedPolicy& policy, const TabTrajectory& traj);

}  // namespace coex
