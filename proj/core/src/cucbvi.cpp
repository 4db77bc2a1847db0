#include "coex/cucbvi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coex/math_util.hpp"

namespace coex {

EmpiricalModel::EmpiricalModel(const TabularMDP& mdp)
    : n_states_(mdp.n_states),
      n_actions_(mdp.n_actions),
      horizon_(mdp.horizon),
      initial_state_(mdp.initial_state),
      r_max_(mdp.r_max),
      r_min_(mdp.r_min),
      count_sa_(static_cast<std::size_t>(mdp.n_states * mdp.n_actions), 0),
      count_sas_(static_cast<std::size_t>(mdp.n_states * mdp.n_actions) *
                     static_cast<std::size_t>(mdp.n_states),
                 0),
      reward_sum_(static_cast<std::size_t>(mdp.n_states * mdp.n_actions), 0.0) {
    if (mdp.n_states < 1 || mdp.n_actions < 1 || mdp.horizon < 1)
        throw std::invalid_argument("EmpiricalModel: malformed MDP");
}

void EmpiricalModel::update(const TabTrajectory& traj) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const TabStep& step = traj.steps[t];
        if (step.state < 0 || step.state >= n_states_ || step.action < 0 ||
            step.action >= n_actions_)
            throw std::invalid_argument("EmpiricalModel::update: step out of range");
        int next = t + 1 < traj.steps.size() ? traj.steps[t + 1].state : traj.final_state;
        if (next < 0 || next >= n_states_)
            throw std::invalid_argument("EmpiricalModel::update: successor out of range");
        std::size_t idx = sa(step.state, step.action);
        count_sa_[idx] += 1;
        reward_sum_[idx] += step.reward;
        count_sas_[idx * static_cast<std::size_t>(n_states_) + static_cast<std::size_t>(next)] += 1;
    }
}

double EmpiricalModel::p_hat(int s, int a, int s2) const {
    long long total = count_sa_[sa(s, a)];
    if (total == 0) return 0.0;
    return static_cast<double>(n(s, a, s2)) / static_cast<double>(total);
}

double EmpiricalModel::r_hat(int s, int a) const {
    long long total = count_sa_[sa(s, a)];
    if (total == 0) return 0.0;
    return reward_sum_[sa(s, a)] / static_cast<double>(total);
}

std::vector<double> exploration_bonus_table(const EmpiricalModel& model, int k, double delta) {
    if (k < 1) throw std::invalid_argument("exploration_bonus_table: k must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("exploration_bonus_table: delta must be in (0,1)");
    const double S = model.n_states(), A = model.n_actions(), H = model.horizon();
    const double log_term = std::log(S * A * H * static_cast<double>(k) / delta);
    std::vector<double> bonus(static_cast<std::size_t>(model.n_states() * model.n_actions()));
    // Reward-range Hoeffding scale. An H-proportional per-stage bonus compounds
    // to many times the value ceiling over the horizon and keeps pessimistic
    // values pinned at the floor for any realistic episode count.
    for (int s = 0; s < model.n_states(); ++s)
        for (int a = 0; a < model.n_actions(); ++a) {
            double n = static_cast<double>(std::max<long long>(1, model.n(s, a)));
            bonus[static_cast<std::size_t>(s * model.n_actions() + a)] =
                model.r_max() * std::sqrt(log_term / (2.0 * n));
        }
    return bonus;
}

namespace {

// Shared backward induction. sign = +1 adds the bonus and maximizes (filling
// out a greedy policy); sign = -1 subtracts it and follows the given policy.
double backward_induction(const EmpiricalModel& model, std::span<const double> bonus,
                          int sign, const StagePolicy* follow, StagePolicy* greedy_out) {
    const int S = model.n_states(), A = model.n_actions(), H = model.horizon();
    if (bonus.size() != static_cast<std::size_t>(S * A))
        throw std::invalid_argument("backward_induction: bonus table size mismatch");
    const double ceiling = model.value_ceiling();
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    std::vector<double> v_next(static_cast<std::size_t>(S), 0.0);
    if (greedy_out) greedy_out->assign(static_cast<std::size_t>(H),
                                       std::vector<int>(static_cast<std::size_t>(S), 0));
    for (int h = H - 1; h >= 0; --h) {
        std::swap(v, v_next);
        // Pessimistic stage floor: the remaining H-h steps can each charge
        // at most |min(0, r_min)|, so a genuine lower bound may go that far
        // negative. A flat 0 floor would let a policy headed into a
        // loss-making region score 0 and slip through the spending gate
        // unfunded.
        const double floor_v =
            sign > 0 ? 0.0
                     : static_cast<double>(H - h) * std::min(0.0, model.r_min());
        const double unvisited_value = sign > 0 ? ceiling : floor_v;
        for (int s = 0; s < S; ++s) {
            double best = kNegInf;
            int best_a = 0;
            int a_lo = 0, a_hi = A;
            if (follow) {
                a_lo = (*follow)[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
                a_hi = a_lo + 1;
            }
            for (int a = a_lo; a < a_hi; ++a) {
                double q;
                if (model.n(s, a) == 0) {
                    q = unvisited_value;
                } else {
                    double expect = 0.0;
                    for (int s2 = 0; s2 < S; ++s2) {
                        double p = model.p_hat(s, a, s2);
                        if (p > 0.0) expect += p * v_next[static_cast<std::size_t>(s2)];
                    }
                    q = model.r_hat(s, a) +
                        sign * bonus[static_cast<std::size_t>(s * A + a)] + expect;
                    q = std::clamp(q, floor_v, ceiling);
                }
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            v[static_cast<std::size_t>(s)] = best;
            if (greedy_out)
                (*greedy_out)[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] = best_a;
        }
    }
    return v[static_cast<std::size_t>(model.initial_state())];
}

}  // namespace

ViResult optimistic_vi(const EmpiricalModel& model, std::span<const double> bonus) {
    ViResult result;
    result.value = backward_induction(model, bonus, +1, nullptr, &result.policy);
    return result;
}

ViResult optimistic_vi(const EmpiricalModel& model, int k, double delta) {
    return optimistic_vi(model, exploration_bonus_table(model, k, delta));
}

double pessimistic_eval(const EmpiricalModel& model, const StagePolicy& policy,
                        std::span<const double> bonus) {
    if (static_cast<int>(policy.size()) != model.horizon())
        throw std::invalid_argument("pessimistic_eval: policy horizon mismatch");
    return backward_induction(model, bonus, -1, &policy, nullptr);
}

double pessimistic_eval(const EmpiricalModel& model, const StagePolicy& policy, int k,
                        double delta) {
    return pessimistic_eval(model, policy, exploration_bonus_table(model, k, delta));
}

namespace {

TabTrajectory rollout_stage_policy(const TabularMDP& mdp, const StagePolicy& policy,
                                   RngStream& env_rng) {
    TabTrajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(mdp.horizon));
    int state = mdp.initial_state;
    for (int h = 0; h < mdp.horizon; ++h) {
        int action = policy[static_cast<std::size_t>(h)][static_cast<std::size_t>(state)];
        double reward = mdp.r(state, action);
        traj.steps.push_back({state, action, reward});
        traj.total_return += reward;
        state = tabular_step(mdp, state, action, env_rng);
    }
    traj.final_state = state;
    return traj;
}

}  // namespace

CucbviLog run_cucbvi(const TabularMDP& env, const TabularIndexedPolicy& baseline,
                     const CucbviConfig& config, RngStream& policy_rng, RngStream& env_rng) {
    if (config.episodes < 1)
        throw std::invalid_argument("run_cucbvi: episodes must be >= 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw std::invalid_argument("run_cucbvi: alpha must be in (0,1)");
    if (!(config.delta > 0.0 && config.delta < 1.0))
        throw std::invalid_argument("run_cucbvi: delta must be in (0,1)");
    if (!(config.bonus_scale >= 0.0))
        throw std::invalid_argument("run_cucbvi: bonus scale must be nonnegative");

    CucbviLog log;
    log.j_star = std::isnan(config.regret_reference) ? optimal_value(env)
                                                     : config.regret_reference;
    log.baseline_true = exact_policy_eval(env, baseline);
    const double j_b = log.baseline_true;

    EmpiricalModel model(env);
    std::vector<StagePolicy> unique_policies;
    std::vector<int> multiplicities;
    std::vector<double> unique_true;  // audited value per unique policy

    double cum_true = 0.0;
    double cum_regret = 0.0;
    for (int k = 1; k <= config.episodes; ++k) {
        bool play_optimistic = false;
        int policy_id = -1;
        double estimate = j_b;
        double bonus_width = 0.0;

        if (k > 1) {
            std::vector<double> bonus = exploration_bonus_table(model, k, config.delta);
            for (double& b : bonus) b *= config.bonus_scale;
            ViResult opt = optimistic_vi(model, bonus);
            double pess = pessimistic_eval(model, opt.policy, bonus);
            bool accepted = true;
            if (config.conservative) {
                double lhs = pess;
                for (std::size_t i = 0; i < unique_policies.size(); ++i)
                    lhs += static_cast<double>(multiplicities[i]) *
                           pessimistic_eval(model, unique_policies[i], bonus);
                int optimistic_total = 0;
                for (int m : multiplicities) optimistic_total += m;
                lhs += static_cast<double>((k - 1) - optimistic_total) * j_b;
                accepted = lhs >= (1.0 - config.alpha) * static_cast<double>(k) * j_b;
            }
            if (accepted) {
                play_optimistic = true;
                estimate = opt.value;
                bonus_width = opt.value - pess;
                auto it = std::find(unique_policies.begin(), unique_policies.end(), opt.policy);
                if (it == unique_policies.end()) {
                    unique_policies.push_back(opt.policy);
                    multiplicities.push_back(1);
                    unique_true.push_back(exact_policy_eval(env, opt.policy));
                    policy_id = static_cast<int>(unique_policies.size()) - 1;
                } else {
                    policy_id = static_cast<int>(it - unique_policies.begin());
                    multiplicities[static_cast<std::size_t>(policy_id)] += 1;
                }
            }
        }

        TabTrajectory traj;
        double true_j;
        if (play_optimistic) {
            traj = rollout_stage_policy(env, unique_policies[static_cast<std::size_t>(policy_id)],
                                        env_rng);
            true_j = unique_true[static_cast<std::size_t>(policy_id)];
        } else {
            traj = rollout(env, baseline, policy_rng, env_rng);
            true_j = j_b;
            log.baseline_plays += 1;
        }
        model.update(traj);
        cum_true += true_j;
        cum_regret += log.j_star - true_j;

        EpisodeRecord rec;
        rec.episode = k;
        rec.optimistic = play_optimistic;
        rec.params = {static_cast<double>(policy_id)};
        rec.realized_return = traj.total_return;
        rec.true_value = true_j;
        rec.estimate = estimate;
        rec.bonus = bonus_width;
        rec.budget = cum_true - (1.0 - config.alpha) * static_cast<double>(k) * j_b;
        rec.cum_regret = cum_regret;
        log.records.push_back(std::move(rec));
    }
    return log;
}

}  // namespace coex
