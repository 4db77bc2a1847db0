#include "coex/policies.hpp"

#include <cmath>
#include <stdexcept>

#include "coex/math_util.hpp"

namespace coex {

double sigmoid_link(double theta) { return sigmoid(theta); }

TabularIndexedPolicy::TabularIndexedPolicy(std::vector<int> reference_actions,
                                           int n_actions, double p)
    : reference_(std::move(reference_actions)), n_actions_(n_actions), p_(p) {
    if (n_actions_ < 2)
        throw std::invalid_argument("TabularIndexedPolicy: need at least two actions");
    if (!(p > 0.0) || !(p < 1.0))
        throw std::domain_error("TabularIndexedPolicy: mixing parameter must be in (0,1)");
    for (int a : reference_)
        if (a < 0 || a >= n_actions_)
            throw std::invalid_argument("TabularIndexedPolicy: reference action out of range");
}

double TabularIndexedPolicy::prob(int state, int action) const {
    return action == reference_[static_cast<std::size_t>(state)]
               ? p_
               : (1.0 - p_) / static_cast<double>(n_actions_ - 1);
}

double TabularIndexedPolicy::log_prob(int state, int action) const {
    return std::log(prob(state, action));
}

int TabularIndexedPolicy::sample_action(int state, RngStream& rng) const {
    double u = rng.uniform();
    int ref = reference_[static_cast<std::size_t>(state)];
    if (u < p_) return ref;
    // Remaining mass is uniform over the non-reference actions.
    double rest = (u - p_) / (1.0 - p_);
    int idx = std::min(n_actions_ - 2, static_cast<int>(rest * (n_actions_ - 1)));
    return idx >= ref ? idx + 1 : idx;
}

double LinearDeterministicPolicy::act(std::span<const double> features) const {
    if (features.size() != theta.size())
        throw std::invalid_argument("LinearDeterministicPolicy: feature size mismatch");
    double a = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) a += theta[i] * features[i];
    return clamp(a, action_lo, action_hi);
}

GaussianHyperpolicy::GaussianHyperpolicy(std::vector<double> mean, std::vector<double> var)
    : mean_(std::move(mean)), var_(std::move(var)) {
    if (mean_.empty() || mean_.size() != var_.size())
        throw std::invalid_argument("GaussianHyperpolicy: mean/var size mismatch");
    for (double v : var_)
        if (!(v > 0.0))
            throw std::domain_error("GaussianHyperpolicy: covariance must be positive definite");
}

double GaussianHyperpolicy::logpdf(std::span<const double> theta) const {
    if (theta.size() != mean_.size())
        throw std::invalid_argument("GaussianHyperpolicy: theta size mismatch");
    return log_normal_pdf_diag(theta, mean_, var_);
}

std::vector<double> GaussianHyperpolicy::sample_theta(RngStream& rng) const {
    std::vector<double> theta(mean_.size());
    for (std::size_t i = 0; i < mean_.size(); ++i)
        theta[i] = rng.normal(mean_[i], std::sqrt(var_[i]));
    return theta;
}

double trajectory_log_density(const TabularIndexedPolicy& policy, const TabTrajectory& traj) {
    double acc = 0.0;
    for (const TabStep& st : traj.steps) acc += policy.log_prob(st.state, st.action);
    return acc;
}

}  // namespace coex
