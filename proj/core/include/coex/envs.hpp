#pragma once

#include <array>
#include <vector>

#include "coex/gauss_hermite.hpp"
#include "coex/math_util.hpp"
#include "coex/policies.hpp"
#include "coex/rng.hpp"
#include "coex/trajectory.hpp"

namespace coex {

// Finite-horizon tabular MDP with a dense transition table.
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    int horizon = 0;
    int initial_state = 0;
    std::vector<double> transitions;  // [s*A*S + a*S + s'], rows sum to 1
    std::vector<double> rewards;      // [s*A + a]
    double r_min = 0.0;
    double r_max = 0.0;

    double p(int s, int a, int s2) const {
        return transitions[static_cast<std::size_t>((s * n_actions + a) * n_states + s2)];
    }
    double r(int s, int a) const {
        return rewards[static_cast<std::size_t>(s * n_actions + a)];
    }
    void validate() const;  // throws if any row is not stochastic within 1e-9
};

struct GridworldConfig {
    int width = 4;
    int height = 3;
    int horizon = 10;
    double slip = 0.0;          // chance the intended move is replaced by a uniform one
    double goal_reward = 0.5;
    double trap_reward = -1.0;
    int start_x = 0, start_y = 0;  // bottom-left
    int goal_x = 3, goal_y = 2;    // top-right
    int trap_x = 3, trap_y = 1;    // adjacent to the goal
};

// Actions are up/down/left/right; moves off the grid stay in place; the goal
// and trap cells are absorbing and pay their reward on every step spent there.
TabularMDP make_gridworld(const GridworldConfig& cfg);

// Greedy deterministic action per state maximizing the full-horizon value,
// used as the reference row of the indexed policy family.
std::vector<int> optimal_reference_actions(const TabularMDP& mdp);

int tabular_step(const TabularMDP& mdp, int state, int action, RngStream& env_rng);

TabTrajectory rollout(const TabularMDP& mdp, const TabularIndexedPolicy& policy,
                      RngStream& policy_rng, RngStream& env_rng);

// Exact finite-horizon policy evaluation by backward induction.
double exact_policy_eval(const TabularMDP& mdp, const TabularIndexedPolicy& policy);

// Stage-dependent deterministic policy, actions[h][s].
double exact_policy_eval(const TabularMDP& mdp, const std::vector<std::vector<int>>& actions);

// Optimal value of the MDP (max over all policies).
double optimal_value(const TabularMDP& mdp);

// Expected value of a scalar-parameter hyperpolicy: integrates the exact
// policy value over theta with a Gauss-Hermite rule.
template <typename MakePolicy>
double exact_hyperpolicy_eval(const TabularMDP& mdp, const GaussianHyperpolicy& hyper,
                              MakePolicy&& make_policy, int nodes = 64) {
    if (hyper.dim() != 1)
        throw std::invalid_argument("exact_hyperpolicy_eval: scalar parameter required");
    return gh_expect_normal(nodes, hyper.mean()[0], hyper.var()[0], [&](double theta) {
        return exact_policy_eval(mdp, make_policy(theta));
    });
}

MeanStderr mc_policy_eval(const TabularMDP& mdp, const TabularIndexedPolicy& policy,
                          int n_rollouts, RngStream& policy_rng, RngStream& env_rng);

// Continuous mountain-car task. The car must build momentum to escape the
// valley; reaching goal_position ends the episode with goal_reward, every
// step costs action_cost * a^2.
struct MountainCarConfig {
    double min_position = -1.2;
    double max_position = 0.6;
    double max_speed = 0.07;
    double goal_position = 0.45;
    double force = 0.0015;
    double gravity = 0.0025;
    double goal_reward = 100.0;
    double action_cost = 0.1;
    int horizon = 300;
    double start_lo = -0.6;
    double start_hi = -0.4;
};

struct MountainCarState {
    double position = 0.0;
    double velocity = 0.0;
};

struct McStepResult {
    MountainCarState next;
    double reward = 0.0;
    bool done = false;
};

McStepResult mountaincar_step(const MountainCarConfig& cfg, MountainCarState s, double action);

// Position and velocity each centered and rescaled to [-1,1]; centering the
// velocity is what lets a linear gain realize a bang-bang rocking controller.
std::array<double, 2> mountaincar_features(const MountainCarConfig& cfg, MountainCarState s);

MountainCarState mountaincar_start(const MountainCarConfig& cfg, RngStream& env_rng);

McTrajectory rollout(const MountainCarConfig& cfg, const LinearDeterministicPolicy& policy,
                     RngStream& env_rng);

MeanStderr mc_policy_eval(const MountainCarConfig& cfg, const LinearDeterministicPolicy& policy,
                          int n_rollouts, RngStream& env_rng);

}  // namespace coex
