#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"

#include "coex/envs.hpp"
#include "coex/math_util.hpp"
#include "coex/mis.hpp"
#include "coex/policies.hpp"
#include "coex/rng.hpp"

using namespace coex;

namespace {

double normal_pdf(double x, double mean, double var) {
    double d = x - mean;
    return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Independent Renyi oracle: adaptive quadrature of p^(1+eps) q^(-eps).
// The integrand is assembled in log space; the direct product underflows to
// 0 * inf = NaN in the tails once either pdf drops below DBL_MIN.
double renyi_quadrature_1d(double mp, double vp, double mq, double vq, double eps) {
    auto f = [&](double x) {
        double lp = log_normal_pdf(x, mp, vp);
        double lq = log_normal_pdf(x, mq, vq);
        return std::exp((1.0 + eps) * lp - eps * lq);
    };
    double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
        12, 1e-12);
    return std::pow(integral, 1.0 / eps);
}

ParamDataset toy_dataset() {
    // Two samples from one standard-normal behavior; values 1 and 2.
    ParamDataset ds;
    GaussianHyperpolicy q({0.0}, {1.0});
    ds.add_sample(q, {0.0}, 1.0);
    ds.add_sample(q, {1.0}, 2.0);
    return ds;
}

}  // namespace

TEST_CASE("dataset deduplicates behaviors by exact parameter equality") {
    ParamDataset ds;
    GaussianHyperpolicy a({0.0}, {1.0});
    GaussianHyperpolicy b({1.0}, {1.0});
    ds.add_sample(a, {0.1}, 0.0);
    ds.add_sample(a, {0.2}, 0.0);
    ds.add_sample(b, {0.3}, 0.0);
    CHECK(ds.size() == 3);
    REQUIRE(ds.behaviors().size() == 2);
    CHECK(ds.counts() == std::vector<int>{2, 1});
    CHECK(ds.samples()[2].behavior == 1);
}

TEST_CASE("balance heuristic weight matches the hand-computed mixture") {
    ParamDataset ds;
    GaussianHyperpolicy q1({0.0}, {1.0});
    GaussianHyperpolicy q2({2.0}, {1.0});
    ds.add_sample(q1, {0.0}, 1.0);
    ds.add_sample(q1, {0.5}, 1.0);
    ds.add_sample(q1, {-0.5}, 1.0);
    ds.add_sample(q2, {2.0}, 1.0);
    // w(theta=0) = 4 phi(0;0,1) / (3 phi(0;0,1) + phi(0;2,1))
    double w = bh_raw_weight(ds, q1, ds.samples()[0]);
    CHECK(w == doctest::Approx(1.2757806226933383).epsilon(1e-13));

    std::vector<double> pooled = pooled_log_densities(ds);
    REQUIRE(pooled.size() == 4);
    double expect = std::log(3.0 * normal_pdf(0.0, 0.0, 1.0) + normal_pdf(0.0, 2.0, 1.0));
    CHECK(pooled[0] == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("balance heuristic weights average to one") {
    GaussianHyperpolicy behavior({0.0}, {1.0});
    GaussianHyperpolicy target({0.5}, {1.0});
    ParamDataset ds;
    RngStream rng(17, Stream::kScratch);
    const int n = 20000;
    for (int i = 0; i < n; ++i) ds.add_sample(behavior, behavior.sample_theta(rng), 0.0);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double w = bh_raw_weight(ds, target, ds.samples()[static_cast<std::size_t>(i)]);
        sum += w;
        sumsq += w * w;
    }
    double mean = sum / n;
    double sd = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) < 3.0 * sd);
}

TEST_CASE("renyi divergence frozen values") {
    GaussianHyperpolicy n01({0.0}, {1.0});
    GaussianHyperpolicy n11({1.0}, {1.0});
    GaussianHyperpolicy n21({2.0}, {1.0});
    GaussianHyperpolicy n02({0.0}, {2.0});
    CHECK(renyi_gaussian(n01, n01, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(renyi_gaussian(n11, n01, 1.0) ==
          doctest::Approx(2.7182818284590452).epsilon(1e-13));
    CHECK(renyi_gaussian(n01, n02, 1.0) ==
          doctest::Approx(1.1547005383792515).epsilon(1e-13));
    CHECK(renyi_gaussian(n21, n01, 1.0) ==
          doctest::Approx(54.598150033144239).epsilon(1e-13));
    GaussianHyperpolicy p({0.5}, {1.2});
    CHECK(renyi_gaussian(p, n01, 0.5) == doctest::Approx(1.2492371319817668).epsilon(1e-12));
}

TEST_CASE("renyi divergence diverges when the blended covariance degenerates") {
    GaussianHyperpolicy wide({0.0}, {3.0});
    GaussianHyperpolicy narrow({0.0}, {1.0});
    // (1+eps) var_q - eps var_p = 2 - 3 < 0
    CHECK(std::isinf(renyi_gaussian(wide, narrow, 1.0)));
    CHECK(std::isfinite(renyi_gaussian(narrow, wide, 1.0)));
}

TEST_CASE("renyi divergence matches adaptive quadrature on random pairs") {
    RngStream rng(23, Stream::kScratch);
    int done = 0;
    while (done < 8) {
        double mp = rng.uniform(-2.0, 2.0), mq = rng.uniform(-2.0, 2.0);
        double vp = rng.uniform(0.3, 3.0), vq = rng.uniform(0.3, 3.0);
        double eps = rng.uniform() < 0.5 ? 1.0 : 0.5;
        if ((1.0 + eps) * vq - eps * vp <= 1e-3) continue;
        double closed = renyi_gaussian(GaussianHyperpolicy({mp}, {vp}),
                                       GaussianHyperpolicy({mq}, {vq}), eps);
        double quad = renyi_quadrature_1d(mp, vp, mq, vq, eps);
        CHECK(closed == doctest::Approx(quad).epsilon(1e-8));
        ++done;
    }
}

TEST_CASE("renyi divergence factorizes over diagonal dimensions") {
    GaussianHyperpolicy p({0.5, -1.0}, {1.0, 2.0});
    GaussianHyperpolicy q({0.0, 0.0}, {1.5, 3.0});
    double joint = renyi_gaussian(p, q, 1.0);
    double d0 = renyi_gaussian(GaussianHyperpolicy({0.5}, {1.0}),
                               GaussianHyperpolicy({0.0}, {1.5}), 1.0);
    double d1 = renyi_gaussian(GaussianHyperpolicy({-1.0}, {2.0}),
                               GaussianHyperpolicy({0.0}, {3.0}), 1.0);
    CHECK(joint == doctest::Approx(d0 * d1).epsilon(1e-12));
}

TEST_CASE("mixture bound reduces to the closed form for one behavior") {
    GaussianHyperpolicy behavior({0.0}, {1.0});
    GaussianHyperpolicy target({0.8}, {1.0});
    ParamDataset ds;
    for (int i = 0; i < 6; ++i) ds.add_sample(behavior, {0.1 * i}, 0.0);
    double bound = renyi_mixture_bound(ds, target, 1.0);
    CHECK(bound == doctest::Approx(renyi_gaussian(target, behavior, 1.0)).epsilon(1e-6));
    // Target equal to the behavior sits at the lower envelope.
    CHECK(renyi_mixture_bound(ds, behavior, 1.0) == 1.0);
}

TEST_CASE("mixture bound is at most the best single-component cap") {
    GaussianHyperpolicy q1({0.0}, {1.0});
    GaussianHyperpolicy q2({1.0}, {1.0});
    GaussianHyperpolicy target({0.5}, {1.0});
    ParamDataset ds;
    for (int i = 0; i < 5; ++i) {
        ds.add_sample(q1, {0.0}, 0.0);
        ds.add_sample(q2, {1.0}, 0.0);
    }
    double n = 10.0;
    double cap = std::min((n / 5.0) * renyi_gaussian(target, q1, 1.0),
                          (n / 5.0) * renyi_gaussian(target, q2, 1.0));
    double bound = renyi_mixture_bound(ds, target, 1.0);
    CHECK(bound >= 1.0);
    CHECK(bound <= cap + 1e-9);
    // The balanced mixture straddles the target, so quadrature beats the cap.
    CHECK(bound < cap);
}

TEST_CASE("mixture bound factorizes for a single diagonal 2-D behavior") {
    GaussianHyperpolicy behavior({0.0, 0.0}, {1.0, 2.0});
    GaussianHyperpolicy target({0.5, 1.0}, {1.0, 2.0});
    ParamDataset ds;
    for (int i = 0; i < 4; ++i) ds.add_sample(behavior, {0.0, 0.0}, 0.0);
    double bound = renyi_mixture_bound(ds, target, 1.0);
    CHECK(bound == doctest::Approx(renyi_gaussian(target, behavior, 1.0)).epsilon(1e-6));
    CHECK_THROWS_AS(renyi_mixture_bound(ParamDataset{}, target, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(renyi_mixture_bound(ds, target, 0.0), std::invalid_argument);
}

TEST_CASE("truncation threshold frozen values and monotonicity") {
    CHECK(truncation_threshold(101, 1.0, 1.0, 1.0) == doctest::Approx(10.0).epsilon(1e-13));
    CHECK(truncation_threshold(9, 2.0, 1.0, 0.5) ==
          doctest::Approx(2.244924096618746).epsilon(1e-13));
    double prev = 0.0;
    for (int k = 2; k <= 40; ++k) {
        double c = truncation_threshold(k, 1.5, 2.0, 1.0);
        CHECK(c > prev);
        prev = c;
    }
    CHECK(truncation_threshold(10, 1.0, 1.0, 1.0) >
          truncation_threshold(10, 1.0, 4.0, 1.0));
    CHECK_THROWS_AS(truncation_threshold(1, 1.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(truncation_threshold(10, -1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("exploration bonus frozen values, clipping, and decay") {
    CHECK(exploration_bonus(2, 1.0, 1.0, 1.0, 1.0, kInf) ==
          doctest::Approx(2.7475468957064284).epsilon(1e-13));
    CHECK(exploration_bonus(5, 1.0, 1.0, 1.0, 1.0, kInf) ==
          doctest::Approx(1.3737734478532142).epsilon(1e-13));
    CHECK(exploration_bonus(9, 2.0, 3.0, 0.5, 2.0, kInf) ==
          doctest::Approx(4.9926240439601701).epsilon(1e-13));
    CHECK(exploration_bonus(2, 1.0, 1.0, 1.0, 1.0, 0.25) == 0.25);
    double prev = kInf;
    for (int k = 2; k <= 50; ++k) {
        double b = exploration_bonus(k, 1.5, 2.0, 1.0, 1.0, kInf);
        CHECK(b <= prev);
        prev = b;
    }
    CHECK_THROWS_AS(exploration_bonus(2, 1.0, 1.0, 1.0, -1.0, kInf), std::invalid_argument);
    CHECK_THROWS_AS(exploration_bonus(2, 1.0, 1.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("truncated estimate hand oracles") {
    ParamDataset ds = toy_dataset();
    GaussianHyperpolicy behavior({0.0}, {1.0});
    // Target equals the behavior: every weight is exactly 1.
    CHECK(rbh_estimate(ds, behavior, kInf) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(rbh_estimate(ds, behavior, 0.5) == doctest::Approx(0.75).epsilon(1e-14));

    // Shifted target: w(theta) = exp(theta - 1/2).
    GaussianHyperpolicy target({1.0}, {1.0});
    CHECK(rbh_estimate(ds, target, kInf) ==
          doctest::Approx(1.9519866005564449).epsilon(1e-13));
    CHECK(rbh_estimate(ds, target, 1.2) ==
          doctest::Approx(1.5032653298563167).epsilon(1e-13));

    std::vector<double> pooled = pooled_log_densities(ds);
    CHECK(rbh_estimate(ds, target, kInf, pooled) == rbh_estimate(ds, target, kInf));
}

TEST_CASE("truncated estimate rejects malformed inputs") {
    ParamDataset ds = toy_dataset();
    GaussianHyperpolicy target({0.0}, {1.0});
    CHECK_THROWS_AS(rbh_estimate(ParamDataset{}, target, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(rbh_estimate(ds, target, 0.0), std::invalid_argument);
    std::vector<double> short_pooled = {0.0};
    CHECK_THROWS_AS(rbh_estimate(ds, target, 1.0, short_pooled), std::invalid_argument);
}

TEST_CASE("trajectory dataset weights reduce to one on their own behavior") {
    TabularMDP mdp = make_gridworld(GridworldConfig{});
    TabularIndexedPolicy pol(optimal_reference_actions(mdp), 4, 0.8);
    RngStream prng(31, Stream::kPolicy), erng(31, Stream::kEnv);
    ActionDataset ds;
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        TabTrajectory t = rollout(mdp, pol, prng, erng);
        total += t.total_return;
        ds.add_sample(pol, std::move(t));
    }
    for (const ActionSample& s : ds.samples())
        CHECK(bh_raw_weight(ds, pol, s) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rbh_estimate(ds, pol, kInf) == doctest::Approx(total / 3.0).epsilon(1e-12));
}

TEST_CASE("target evaluation composes its parts") {
    ParamDataset ds;
    GaussianHyperpolicy behavior({0.0}, {1.0});
    RngStream rng(41, Stream::kScratch);
    for (int i = 0; i < 12; ++i) {
        auto th = behavior.sample_theta(rng);
        ds.add_sample(behavior, th, sigmoid(th[0]));
    }
    GaussianHyperpolicy target({0.5}, {1.0});
    const int k = 13;
    const double L = 2.0, f_max = 1.0, clip = 0.9;
    RbhEvaluation eval = evaluate_target(ds, target, k, 1.0, L, f_max, clip);
    double renyi = renyi_mixture_bound(ds, target, 1.0);
    CHECK(eval.renyi == doctest::Approx(renyi).epsilon(1e-12));
    CHECK(eval.threshold ==
          doctest::Approx(truncation_threshold(k, renyi, L, 1.0)).epsilon(1e-12));
    CHECK(eval.estimate ==
          doctest::Approx(rbh_estimate(ds, target, eval.threshold)).epsilon(1e-12));
    CHECK(eval.bonus ==
          doctest::Approx(exploration_bonus(k, renyi, L, 1.0, f_max, clip)).epsilon(1e-12));
    CHECK(eval.pessimistic() == doctest::Approx(eval.estimate - eval.bonus).epsilon(1e-14));
    CHECK(eval.optimistic() == doctest::Approx(eval.estimate + eval.bonus).epsilon(1e-14));
}
