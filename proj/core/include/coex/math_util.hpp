#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace coex {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without leaving log space.
inline double logaddexp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double logsumexp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf || std::isinf(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Density of N(mean, var) at x, in log space. var must be positive.
inline double log_normal_pdf(double x, double mean, double var) {
    double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

// Diagonal-covariance multivariate normal, log density.
inline double log_normal_pdf_diag(std::span<const double> x,
                                  std::span<const double> mean,
                                  std::span<const double> var) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        acc += log_normal_pdf(x[i], mean[i], var[i]);
    return acc;
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double clamp(double x, double lo, double hi) {
    return std::min(hi, std::max(lo, x));
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// Sample mean and standard error; stderr is 0 for fewer than two values.
inline MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr out;
    if (xs.empty()) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) {
        double d = x - out.mean;
        ss += d * d;
    }
    double var = ss / static_cast<double>(xs.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

}  // namespace coex
