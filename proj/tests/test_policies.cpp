#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "coex/policies.hpp"
#include "coex/rng.hpp"

using namespace coex;

TEST_CASE("sigmoid link frozen values and monotonicity") {
    CHECK(sigmoid_link(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sigmoid_link(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    CHECK(sigmoid_link(-3.0) == doctest::Approx(0.047425873177566781).epsilon(1e-14));
    double prev = 0.0;
    for (double x = -8.0; x <= 8.0; x += 0.5) {
        double y = sigmoid_link(x);
        CHECK(y > prev);
        CHECK(y < 1.0);
        prev = y;
    }
}

TEST_CASE("indexed policy probabilities") {
    TabularIndexedPolicy pol({1, 0, 3}, 4, 0.7);
    CHECK(pol.n_states() == 3);
    CHECK(pol.n_actions() == 4);
    CHECK(pol.mixing() == 0.7);
    CHECK(pol.reference(0) == 1);
    CHECK(pol.prob(0, 1) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(pol.prob(0, 0) == doctest::Approx(0.1).epsilon(1e-14));
    for (int s = 0; s < 3; ++s) {
        double total = 0.0;
        for (int a = 0; a < 4; ++a) {
            total += pol.prob(s, a);
            CHECK(pol.log_prob(s, a) == doctest::Approx(std::log(pol.prob(s, a))).epsilon(1e-14));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("indexed policy rejects degenerate mixing") {
    CHECK_THROWS_AS(TabularIndexedPolicy({0}, 2, 0.0), std::domain_error);
    CHECK_THROWS_AS(TabularIndexedPolicy({0}, 2, 1.0), std::domain_error);
    CHECK_THROWS_AS(TabularIndexedPolicy({0}, 2, -0.1), std::domain_error);
    CHECK_THROWS_AS(TabularIndexedPolicy({2}, 2, 0.5), std::invalid_argument);
}

TEST_CASE("indexed policy sampling frequency matches probabilities") {
    TabularIndexedPolicy pol({2}, 4, 0.7);
    RngStream rng(7, Stream::kScratch);
    const int n = 10000;
    int hits = 0;
    for (int i = 0; i < n; ++i)
        if (pol.sample_action(0, rng) == 2) ++hits;
    double freq = static_cast<double>(hits) / n;
    double sigma = std::sqrt(0.7 * 0.3 / n);
    CHECK(std::abs(freq - 0.7) < 3.0 * sigma);
}

TEST_CASE("linear deterministic policy clips its action") {
    LinearDeterministicPolicy pol{{2.0, -1.0}};
    std::vector<double> f1 = {0.1, 0.0};
    CHECK(pol.act(f1) == doctest::Approx(0.2).epsilon(1e-15));
    std::vector<double> f2 = {1.0, -1.0};
    CHECK(pol.act(f2) == 1.0);  // 3.0 clipped
    std::vector<double> f3 = {-1.0, 1.0};
    CHECK(pol.act(f3) == -1.0);
}

TEST_CASE("hyperpolicy log density frozen values") {
    GaussianHyperpolicy std1({0.0}, {1.0});
    std::vector<double> at_mean = {0.0};
    CHECK(std1.logpdf(at_mean) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));

    GaussianHyperpolicy wide({1.0}, {4.0});
    std::vector<double> x = {1.5};
    CHECK(wide.logpdf(x) == doctest::Approx(-1.6433357137646181).epsilon(1e-14));

    // Diagonal 2-D density is the sum of the per-axis terms.
    GaussianHyperpolicy two({0.0, 1.0}, {1.0, 4.0});
    std::vector<double> y = {0.0, 1.5};
    CHECK(two.logpdf(y) ==
          doctest::Approx(-0.9189385332046727 + -1.6433357137646181).epsilon(1e-13));
}

TEST_CASE("hyperpolicy validates its parameters") {
    CHECK_THROWS_AS(GaussianHyperpolicy({0.0}, {0.0}), std::domain_error);
    CHECK_THROWS_AS(GaussianHyperpolicy({0.0}, {-1.0}), std::domain_error);
    CHECK_THROWS_AS(GaussianHyperpolicy({0.0, 1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianHyperpolicy({}, {}), std::invalid_argument);
}

TEST_CASE("hyperpolicy sampling is seed-deterministic and centered") {
    GaussianHyperpolicy hyper({2.0, -1.0}, {1.0, 0.25});
    RngStream a(11, Stream::kScratch), b(11, Stream::kScratch);
    CHECK(hyper.sample_theta(a) == hyper.sample_theta(b));

    RngStream rng(12, Stream::kScratch);
    const int n = 4000;
    double s0 = 0.0, s1 = 0.0;
    for (int i = 0; i < n; ++i) {
        auto th = hyper.sample_theta(rng);
        s0 += th[0];
        s1 += th[1];
    }
    CHECK(std::abs(s0 / n - 2.0) < 3.0 * std::sqrt(1.0 / n));
    CHECK(std::abs(s1 / n - -1.0) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("hyperpolicy equality is exact parameter equality") {
    GaussianHyperpolicy a({1.0}, {2.0});
    GaussianHyperpolicy b({1.0}, {2.0});
    GaussianHyperpolicy c({1.0 + 1e-16}, {2.0});
    GaussianHyperpolicy d({1.0}, {2.5});
    CHECK(a == b);
    CHECK(a == c);  // 1.0 + 1e-16 rounds to 1.0 in double
    CHECK_FALSE(a == d);
}

TEST_CASE("trajectory log density sums per-step action terms") {
    TabularIndexedPolicy pol({1, 0}, 3, 0.6);
    TabTrajectory traj;
    traj.steps = {{0, 1, 0.0}, {1, 2, 0.0}};  // reference action, then an off action
    double expect = std::log(0.6) + std::log(0.4 / 2.0);
    CHECK(trajectory_log_density(pol, traj) == doctest::Approx(expect).epsilon(1e-14));
}
