#pragma once

#include <limits>
#include <span>
#include <vector>

#include "coex/algo.hpp"
#include "coex/envs.hpp"
#include "coex/rng.hpp"

namespace coex {

// Transition/reward counts shared across stages (the dynamics are
// stage-invariant). Only sizes and reward bounds are copied from the MDP;
// the true tables stay hidden from the learner.
class EmpiricalModel {
  public:
    explicit EmpiricalModel(const TabularMDP& mdp);

    void update(const TabTrajectory& traj);

    long long n(int s, int a) const { return count_sa_[sa(s, a)]; }
    long long n(int s, int a, int s2) const {
        return count_sas_[static_cast<std::size_t>(sa(s, a)) * static_cast<std::size_t>(n_states_) +
                          static_cast<std::size_t>(s2)];
    }
    // 0 when (s,a) is unvisited; otherwise rows sum to 1.
    double p_hat(int s, int a, int s2) const;
    double r_hat(int s, int a) const;

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    int horizon() const { return horizon_; }
    int initial_state() const { return initial_state_; }
    double r_max() const { return r_max_; }
    double r_min() const { return r_min_; }
    double value_ceiling() const { return static_cast<double>(horizon_) * r_max_; }

  private:
    std::size_t sa(int s, int a) const {
        return static_cast<std::size_t>(s * n_actions_ + a);
    }
    int n_states_, n_actions_, horizon_, initial_state_;
    double r_max_, r_min_;
    std::vector<long long> count_sa_;
    std::vector<long long> count_sas_;
    std::vector<double> reward_sum_;
};

// Deterministic stage-dependent policy, actions[h][s].
using StagePolicy = std::vector<std::vector<int>>;

struct ViResult {
    StagePolicy policy;
    double value = 0.0;  // state value of the initial state
};

// b(s,a) = r_max * sqrt(log(S*A*H*k / delta) / (2 * max(1, n(s,a)))).
std::vector<double> exploration_bonus_table(const EmpiricalModel& model, int k, double delta);

// Backward induction on the empirical model with the bonus added; stage
// values clipped to [0, H*r_max], unvisited pairs pinned at the ceiling.
ViResult optimistic_vi(const EmpiricalModel& model, std::span<const double> bonus);
ViResult optimistic_vi(const EmpiricalModel& model, int k, double delta);

// Same recursion with the bonus subtracted for a fixed policy. Stage values
// are clipped to [(H-h) * min(0, r_min), H * r_max] and unvisited pairs are
// pinned at that stage floor, so the result stays a genuine lower bound:
// with all rewards nonnegative the floor is the usual 0, while an
// environment that can charge r_min per step admits returns as low as
// (H-h) * r_min from stage h, and a policy headed somewhere unexplored
// must account for that.
double pessimistic_eval(const EmpiricalModel& model, const StagePolicy& policy,
                        std::span<const double> bonus);
double pessimistic_eval(const EmpiricalModel& model, const StagePolicy& policy, int k,
                        double delta);

struct CucbviConfig {
    int episodes = 100;
    double alpha = 0.1;
    double delta = 0.1;
    bool conservative = true;   // false runs plain optimistic value iteration
    double bonus_scale = 1.0;   // multiplies the bonus table (test hook)
    // Regret reference. NaN means "use the exact optimum of the MDP"; a
    // finite value substitutes a caller-chosen comparator (e.g. the best
    // member of a restricted policy family) in the logged j_star.
    double regret_reference = std::numeric_limits<double>::quiet_NaN();
};

struct CucbviLog {
    std::vector<EpisodeRecord> records;  // params holds {unique policy id}, baseline = -1
    double j_star = 0.0;
    double baseline_true = 0.0;
    int baseline_plays = 0;
};

// Same episode loop and gate semantics as the parameter-based runner, with
// model-based optimistic selection and pessimistic re-evaluation. The
// baseline value is computed exactly by backward induction.
CucbviLog run_cucbvi(const TabularMDP& env, const TabularIndexedPolicy& baseline,
                     const CucbviConfig& config, RngStream& policy_rng, RngStream& env_rng);

}  // namespace coex
