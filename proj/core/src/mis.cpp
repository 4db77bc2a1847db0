#include "coex/mis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coex/gauss_hermite.hpp"
#include "coex/math_util.hpp"

namespace coex {
namespace {

constexpr double kBonusConstant = 2.7475468957064284;  // sqrt(2) + 4/3

bool same_policy(const TabularIndexedPolicy& a, const TabularIndexedPolicy& b) {
    if (a.n_states() != b.n_states() || a.n_actions() != b.n_actions()) return false;
    if (a.mixing() != b.mixing()) return false;
    for (int s = 0; s < a.n_states(); ++s)
        if (a.reference(s) != b.reference(s)) return false;
    return true;
}

void check_eval_args(int n, double eps, double log_inv_delta) {
    if (n < 1) throw std::invalid_argument("mis: empty dataset");
    if (!(eps > 0.0)) throw std::invalid_argument("mis: eps must be positive");
    if (!(log_inv_delta > 0.0))
        throw std::invalid_argument("mis: log(1/delta) must be positive");
}

}  // namespace

int ParamDataset::add_behavior(const GaussianHyperpolicy& hyper) {
    for (std::size_t i = 0; i < behaviors_.size(); ++i)
        if (behaviors_[i] == hyper) return static_cast<int>(i);
    behaviors_.push_back(hyper);
    counts_.push_back(0);
    return static_cast<int>(behaviors_.size()) - 1;
}

void ParamDataset::add_sample(const GaussianHyperpolicy& hyper, std::vector<double> theta,
                              double value) {
    int idx = add_behavior(hyper);
    counts_[static_cast<std::size_t>(idx)] += 1;
    samples_.push_back({idx, std::move(theta), value});
}

int ActionDataset::add_behavior(const TabularIndexedPolicy& policy) {
    for (std::size_t i = 0; i < behaviors_.size(); ++i)
        if (same_policy(behaviors_[i], policy)) return static_cast<int>(i);
    behaviors_.push_back(policy);
    counts_.push_back(0);
    return static_cast<int>(behaviors_.size()) - 1;
}

void ActionDataset::add_sample(const TabularIndexedPolicy& policy, TabTrajectory traj) {
    int idx = add_behavior(policy);
    counts_[static_cast<std::size_t>(idx)] += 1;
    samples_.push_back({idx, std::move(traj)});
}

std::vector<double> pooled_log_densities(const ParamDataset& ds) {
    const auto& behaviors = ds.behaviors();
    const auto& counts = ds.counts();
    std::vector<double> log_n(behaviors.size());
    for (std::size_t i = 0; i < behaviors.size(); ++i)
        log_n[i] = std::log(static_cast<double>(counts[i]));
    std::vector<double> out;
    out.reserve(ds.samples().size());
    std::vector<double> terms(behaviors.size());
    for (const ParamSample& smp : ds.samples()) {
        for (std::size_t i = 0; i < behaviors.size(); ++i)
            terms[i] = log_n[i] + behaviors[i].logpdf(smp.theta);
        out.push_back(logsumexp(terms));
    }
    return out;
}

std::vector<double> pooled_log_densities(const ActionDataset& ds) {
    const auto& behaviors = ds.behaviors();
    const auto& counts = ds.counts();
    std::vector<double> out;
    out.reserve(ds.samples().size());
    std::vector<double> terms(behaviors.size());
    for (const ActionSample& smp : ds.samples()) {
        for (std::size_t i = 0; i < behaviors.size(); ++i)
            terms[i] = std::log(static_cast<double>(counts[i])) +
                       trajectory_log_density(behaviors[i], smp.traj);
        out.push_back(logsumexp(terms));
    }
    return out;
}

double bh_raw_weight(const ParamDataset& ds, const GaussianHyperpolicy& target,
                     const ParamSample& sample) {
    std::vector<double> terms(ds.behaviors().size());
    for (std::size_t i = 0; i < terms.size(); ++i)
        terms[i] = std::log(static_cast<double>(ds.counts()[i])) +
                   ds.behaviors()[i].logpdf(sample.theta);
    double denom = logsumexp(terms);
    if (denom == kNegInf)
        throw std::domain_error("bh_raw_weight: pooled behavior density is zero");
    return std::exp(std::log(static_cast<double>(ds.size())) + target.logpdf(sample.theta) -
                    denom);
}

double bh_raw_weight(const ActionDataset& ds, const TabularIndexedPolicy& target,
                     const ActionSample& sample) {
    std::vector<double> terms(ds.behaviors().size());
    for (std::size_t i = 0; i < terms.size(); ++i)
        terms[i] = std::log(static_cast<double>(ds.counts()[i])) +
                   trajectory_log_density(ds.behaviors()[i], sample.traj);
    double denom = logsumexp(terms);
    if (denom == kNegInf)
        throw std::domain_error("bh_raw_weight: pooled behavior density is zero");
    return std::exp(std::log(static_cast<double>(ds.size())) +
                    trajectory_log_density(target, sample.traj) - denom);
}

double renyi_gaussian(const GaussianHyperpolicy& p, const GaussianHyperpolicy& q, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("renyi_gaussian: eps must be positive");
    if (p.dim() != q.dim()) throw std::invalid_argument("renyi_gaussian: dimension mismatch");
    const double alpha = 1.0 + eps;
    double log_d = 0.0;
    for (int i = 0; i < p.dim(); ++i) {
        double vp = p.var()[static_cast<std::size_t>(i)];
        double vq = q.var()[static_cast<std::size_t>(i)];
        double blended = alpha * vq - eps * vp;
        if (!(blended > 0.0)) return kInf;
        double d = p.mean()[static_cast<std::size_t>(i)] - q.mean()[static_cast<std::size_t>(i)];
        log_d += 0.5 * alpha * d * d / blended;
        log_d -= (std::log(blended) + eps * std::log(vp) - alpha * std::log(vq)) / (2.0 * eps);
    }
    return std::exp(log_d);
}

namespace {

// Quadrature of E_{theta ~ target}[(target / mixture)^eps] on a tensor
// Gauss-Hermite grid centered on the target. When every component shares the
// target's diagonal covariance the log ratios are linear in theta, so the
// per-node mixture sum factorizes into two per-axis tables and the inner
// loop is pure multiply-add; mismatched covariances take the generic
// log-space path.
double mixture_quadrature(const ParamDataset& ds, const GaussianHyperpolicy& target,
                          double eps, int quad_nodes) {
    const int dim = target.dim();
    const auto& behaviors = ds.behaviors();
    const auto& counts = ds.counts();
    const std::size_t m = behaviors.size();
    const double n = static_cast<double>(ds.size());
    const double log_n = std::log(n);
    const GaussHermiteRule& rule = gauss_hermite(quad_nodes);
    const std::size_t nn = rule.nodes.size();
    const double inv_sqrt_pi = 0.5641895835477563;

    bool shared_cov = true;
    for (const auto& b : behaviors)
        if (b.var() != target.var()) shared_cov = false;

    std::vector<double> log_counts(m);
    for (std::size_t i = 0; i < m; ++i)
        log_counts[i] = std::log(static_cast<double>(counts[i]));

    // Exponent of N_i q_i / p at the node indexed per axis; axis==0 carries
    // the count term so the full exponent is the sum over axes.
    auto axis_exponent = [&](std::size_t i, int axis, std::size_t node) {
        double sd = std::sqrt(target.var()[static_cast<std::size_t>(axis)]);
        double delta = behaviors[i].mean()[static_cast<std::size_t>(axis)] -
                       target.mean()[static_cast<std::size_t>(axis)];
        double t = rule.nodes[node];
        double e = std::numbers::sqrt2 * t * delta / sd - delta * delta / (2.0 * sd * sd);
        if (axis == 0) e += log_counts[i];
        return e;
    };

    std::vector<double> theta(static_cast<std::size_t>(dim));
    std::vector<double> terms(m);
    // Generic per-node evaluation in log space.
    auto node_log_ratio = [&]() {
        double lp = target.logpdf(theta);
        for (std::size_t i = 0; i < m; ++i)
            terms[i] = log_counts[i] + behaviors[i].logpdf(theta);
        double denom = logsumexp(terms);
        return log_n + lp - denom;  // log(n p / sum N_i q_i)
    };

    double acc = 0.0;
    if (dim == 1) {
        const double sd = std::sqrt(target.var()[0]);
        for (std::size_t a = 0; a < nn; ++a) {
            double w = rule.weights[a] * inv_sqrt_pi;
            double s = 0.0;
            if (shared_cov) {
                for (std::size_t i = 0; i < m; ++i) s += std::exp(axis_exponent(i, 0, a));
            }
            if (shared_cov && s > 0.0 && std::isfinite(s)) {
                acc += w * std::pow(n / s, eps);
            } else {
                theta[0] = target.mean()[0] + std::numbers::sqrt2 * sd * rule.nodes[a];
                acc += w * std::exp(eps * node_log_ratio());
            }
        }
        return std::pow(acc, 1.0 / eps);
    }
    if (dim == 2 && shared_cov) {
        std::vector<double> ea(m * nn), eb(m * nn);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t t = 0; t < nn; ++t) {
                ea[i * nn + t] = std::exp(axis_exponent(i, 0, t));
                eb[i * nn + t] = std::exp(axis_exponent(i, 1, t));
            }
        }
        const double sd0 = std::sqrt(target.var()[0]);
        const double sd1 = std::sqrt(target.var()[1]);
        for (std::size_t a = 0; a < nn; ++a) {
            for (std::size_t b = 0; b < nn; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i) s += ea[i * nn + a] * eb[i * nn + b];
                double w = rule.weights[a] * rule.weights[b] * inv_sqrt_pi * inv_sqrt_pi;
                if (s > 0.0 && std::isfinite(s)) {
                    acc += w * std::pow(n / s, eps);
                } else {
                    theta[0] = target.mean()[0] + std::numbers::sqrt2 * sd0 * rule.nodes[a];
                    theta[1] = target.mean()[1] + std::numbers::sqrt2 * sd1 * rule.nodes[b];
                    acc += w * std::exp(eps * node_log_ratio());
                }
            }
        }
        return std::pow(acc, 1.0 / eps);
    }
    // dim == 2, mismatched covariances: generic log-space tensor loop.
    const double sd0 = std::sqrt(target.var()[0]);
    const double sd1 = std::sqrt(target.var()[1]);
    for (std::size_t a = 0; a < nn; ++a) {
        for (std::size_t b = 0; b < nn; ++b) {
            theta[0] = target.mean()[0] + std::numbers::sqrt2 * sd0 * rule.nodes[a];
            theta[1] = target.mean()[1] + std::numbers::sqrt2 * sd1 * rule.nodes[b];
            double w = rule.weights[a] * rule.weights[b] * inv_sqrt_pi * inv_sqrt_pi;
            acc += w * std::exp(eps * node_log_ratio());
        }
    }
    return std::pow(acc, 1.0 / eps);
}

}  // namespace

double renyi_mixture_bound(const ParamDataset& ds, const GaussianHyperpolicy& target,
                           double eps, int quad_nodes) {
    if (ds.size() < 1) throw std::invalid_argument("renyi_mixture_bound: empty dataset");
    if (!(eps > 0.0)) throw std::invalid_argument("renyi_mixture_bound: eps must be positive");
    const double n = static_cast<double>(ds.size());
    double component = kInf;
    for (std::size_t i = 0; i < ds.behaviors().size(); ++i) {
        double d = renyi_gaussian(target, ds.behaviors()[i], eps);
        component = std::min(component, (n / ds.counts()[i]) * d);
    }
    double bound = component;
    if (target.dim() <= 2) {
        double quad = mixture_quadrature(ds, target, eps, quad_nodes);
        if (std::isfinite(quad)) bound = std::min(bound, quad);
    }
    return std::max(1.0, bound);
}

double truncation_threshold(int k, double renyi, double log_inv_delta, double eps) {
    check_eval_args(k - 1, eps, log_inv_delta);
    if (!(renyi > 0.0)) throw std::invalid_argument("truncation_threshold: renyi must be positive");
    double base = static_cast<double>(k - 1) * std::pow(renyi, eps) / log_inv_delta;
    return std::pow(base, eps / (1.0 + eps));
}

double exploration_bonus(int k, double renyi, double log_inv_delta, double eps,
                         double f_max, double clip) {
    check_eval_args(k - 1, eps, log_inv_delta);
    if (!(renyi > 0.0)) throw std::invalid_argument("exploration_bonus: renyi must be positive");
    if (!(f_max > 0.0)) throw std::invalid_argument("exploration_bonus: f_max must be positive");
    if (!(clip > 0.0)) throw std::invalid_argument("exploration_bonus: clip must be positive");
    double base = renyi * log_inv_delta / static_cast<double>(k - 1);
    double bonus = f_max * kBonusConstant * std::pow(base, eps / (1.0 + eps));
    return std::min(bonus, clip);
}

namespace {

template <typename Dataset, typename Target>
double rbh_estimate_impl(const Dataset& ds, const Target& target, double threshold,
                         std::span<const double> pooled) {
    if (ds.size() < 1) throw std::invalid_argument("rbh_estimate: empty dataset");
    if (!(threshold > 0.0)) throw std::invalid_argument("rbh_estimate: threshold must be positive");
    std::vector<double> local;
    if (pooled.empty()) {
        local = pooled_log_densities(ds);
        pooled = local;
    }
    if (pooled.size() != static_cast<std::size_t>(ds.size()))
        throw std::invalid_argument("rbh_estimate: pooled density size mismatch");
    const double log_n = std::log(static_cast<double>(ds.size()));
    double acc = 0.0;
    for (std::size_t j = 0; j < pooled.size(); ++j) {
        if (pooled[j] == kNegInf)
            throw std::domain_error("rbh_estimate: pooled behavior density is zero");
        double log_q_target, value;
        if constexpr (std::is_same_v<Dataset, ParamDataset>) {
            log_q_target = target.logpdf(ds.samples()[j].theta);
            value = ds.samples()[j].value;
        } else {
            log_q_target = trajectory_log_density(target, ds.samples()[j].traj);
            value = ds.samples()[j].traj.total_return;
        }
        double w = std::exp(log_n + log_q_target - pooled[j]);
        acc += std::min(threshold, w) * value;
    }
    return acc / static_cast<double>(ds.size());
}

}  // namespace

double rbh_estimate(const ParamDataset& ds, const GaussianHyperpolicy& target,
                    double threshold, std::span<const double> pooled) {
    return rbh_estimate_impl(ds, target, threshold, pooled);
}

double rbh_estimate(const ActionDataset& ds, const TabularIndexedPolicy& target,
                    double threshold, std::span<const double> pooled) {
    return rbh_estimate_impl(ds, target, threshold, pooled);
}

RbhEvaluation evaluate_target(const ParamDataset& ds, const GaussianHyperpolicy& target,
                              int k, double eps, double log_inv_delta, double f_max,
                              double clip, std::span<const double> pooled) {
    if (ds.size() != k - 1)
        throw std::invalid_argument("evaluate_target: dataset size must be k-1");
    RbhEvaluation out;
    out.renyi = renyi_mixture_bound(ds, target, eps);
    out.threshold = truncation_threshold(k, out.renyi, log_inv_delta, eps);
    out.estimate = rbh_estimate(ds, target, out.threshold, pooled);
    out.bonus = exploration_bonus(k, out.renyi, log_inv_delta, eps, f_max, clip);
    return out;
}

}  // namespace coex
