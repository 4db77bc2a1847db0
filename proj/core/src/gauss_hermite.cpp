#include "coex/gauss_hermite.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>

namespace coex {
namespace {

// Roots of the order-n Hermite polynomial by Newton iteration on the
// orthonormal recurrence. The recurrence keeps intermediate values O(1),
// which is what lets this stay in double up to n in the low hundreds.
GaussHermiteRule compute_rule(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    constexpr long double kEps = 1e-16L;
    constexpr int kMaxIter = 16;
    constexpr long double kPiQuarterInv = 0.7511255444649424828587L;  // pi^{-1/4}

    GaussHermiteRule rule;
    rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
    rule.weights.assign(static_cast<std::size_t>(n), 0.0);

    const int m = (n + 1) / 2;
    long double z = 0.0L;
    long double pp = 0.0L;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(static_cast<long double>(2 * n + 1)) -
                1.85575L * std::pow(static_cast<long double>(2 * n + 1), -0.16667L);
        } else if (i == 1) {
            z -= 1.14L * std::pow(static_cast<long double>(n), 0.426L) / z;
        } else if (i == 2) {
            z = 1.86L * z - 0.86L * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91L * z - 0.91L * rule.nodes[1];
        } else {
            z = 2.0L * z - rule.nodes[static_cast<std::size_t>(i - 2)];
        }
        for (int it = 0; it < kMaxIter; ++it) {
            long double p1 = kPiQuarterInv;
            long double p2 = 0.0L;
            for (int j = 1; j <= n; ++j) {
                long double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0L / j) * p2 -
                     std::sqrt((j - 1.0L) / j) * p3;
            }
            pp = std::sqrt(2.0L * n) * p2;
            long double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= kEps) break;
        }
        rule.nodes[static_cast<std::size_t>(i)] = static_cast<double>(z);
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = static_cast<double>(-z);
        double w = static_cast<double>(2.0L / (pp * pp));
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    // Construction fills roots in descending order; flip to ascending.
    std::reverse(rule.nodes.begin(), rule.nodes.end());
    std::reverse(rule.weights.begin(), rule.weights.end());
    return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
    static std::mutex mu;
    static std::map<int, GaussHermiteRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return it->second;
}

}  // namespace coex
