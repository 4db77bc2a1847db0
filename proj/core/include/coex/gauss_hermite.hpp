#pragma once

#include <cmath>
#include <vector>

namespace coex {

// Physicists' Gauss-Hermite rule: integral of exp(-t^2) f(t) dt
// is approximated by sum_i weights[i] * f(nodes[i]).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Cached rule of the requested order; thread-safe.
const GaussHermiteRule& gauss_hermite(int n);

// Expectation of f under N(mean, var) using an n-point rule.
template <typename F>
double gh_expect_normal(int n, double mean, double var, F&& f) {
    const GaussHermiteRule& rule = gauss_hermite(n);
    const double scale = std::sqrt(2.0 * var);
    const double inv_sqrt_pi = 0.5641895835477563;  // 1/sqrt(pi)
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * f(mean + scale * rule.nodes[i]);
    return acc * inv_sqrt_pi;
}

}  // namespace coex
