#include "coex/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace coex {
namespace {

constexpr double kRowTol = 1e-9;

int cell_index(const GridworldConfig& cfg, int x, int y) { return y * cfg.width + x; }

int moved_cell(const GridworldConfig& cfg, int x, int y, int action) {
    int nx = x, ny = y;
    switch (action) {
        case 0: ny = y + 1; break;  // up
        case 1: ny = y - 1; break;  // down
        case 2: nx = x - 1; break;  // left
        case 3: nx = x + 1; break;  // right
        default: throw std::invalid_argument("gridworld: action out of range");
    }
    if (nx < 0 || nx >= cfg.width || ny < 0 || ny >= cfg.height) return cell_index(cfg, x, y);
    return cell_index(cfg, nx, ny);
}

}  // namespace

void TabularMDP::validate() const {
    if (n_states <= 0 || n_actions <= 0 || horizon <= 0)
        throw std::invalid_argument("TabularMDP: empty state, action, or horizon");
    if (initial_state < 0 || initial_state >= n_states)
        throw std::invalid_argument("TabularMDP: initial state out of range");
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double row = 0.0;
            for (int s2 = 0; s2 < n_states; ++s2) {
                double v = p(s, a, s2);
                if (v < -kRowTol) throw std::invalid_argument("TabularMDP: negative probability");
                row += v;
            }
            if (std::abs(row - 1.0) > kRowTol)
                throw std::invalid_argument("TabularMDP: transition row does not sum to 1");
        }
    }
}

TabularMDP make_gridworld(const GridworldConfig& cfg) {
    if (cfg.width < 2 || cfg.height < 2)
        throw std::invalid_argument("gridworld: grid must be at least 2x2");
    if (cfg.horizon < 1) throw std::invalid_argument("gridworld: horizon must be positive");
    if (!(cfg.slip >= 0.0 && cfg.slip <= 1.0))
        throw std::invalid_argument("gridworld: slip must be in [0,1]");
    auto in_grid = [&](int x, int y) {
        return x >= 0 && x < cfg.width && y >= 0 && y < cfg.height;
    };
    if (!in_grid(cfg.start_x, cfg.start_y) || !in_grid(cfg.goal_x, cfg.goal_y) ||
        !in_grid(cfg.trap_x, cfg.trap_y))
        throw std::invalid_argument("gridworld: cell out of range");
    int start = cell_index(cfg, cfg.start_x, cfg.start_y);
    int goal = cell_index(cfg, cfg.goal_x, cfg.goal_y);
    int trap = cell_index(cfg, cfg.trap_x, cfg.trap_y);
    if (goal == trap || start == goal || start == trap)
        throw std::invalid_argument("gridworld: start, goal, and trap must be distinct");

    TabularMDP mdp;
    mdp.n_states = cfg.width * cfg.height;
    mdp.n_actions = 4;
    mdp.horizon = cfg.horizon;
    mdp.initial_state = start;
    mdp.transitions.assign(
        static_cast<std::size_t>(mdp.n_states) * mdp.n_actions * mdp.n_states, 0.0);
    mdp.rewards.assign(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0.0);

    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            int s = cell_index(cfg, x, y);
            bool absorbing = (s == goal || s == trap);
            double reward = s == goal ? cfg.goal_reward : (s == trap ? cfg.trap_reward : 0.0);
            for (int a = 0; a < 4; ++a) {
                mdp.rewards[static_cast<std::size_t>(s * 4 + a)] = reward;
                auto at = [&](int s2) -> double& {
                    return mdp.transitions[static_cast<std::size_t>((s * 4 + a) * mdp.n_states + s2)];
                };
                if (absorbing) {
                    at(s) = 1.0;
                    continue;
                }
                at(moved_cell(cfg, x, y, a)) += 1.0 - cfg.slip;
                for (int b = 0; b < 4; ++b) at(moved_cell(cfg, x, y, b)) += cfg.slip / 4.0;
            }
        }
    }
    mdp.r_min = std::min({0.0, cfg.goal_reward, cfg.trap_reward});
    mdp.r_max = std::max({0.0, cfg.goal_reward, cfg.trap_reward});
    mdp.validate();
    return mdp;
}

std::vector<int> optimal_reference_actions(const TabularMDP& mdp) {
    const int S = mdp.n_states, A = mdp.n_actions;
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    std::vector<double> q(static_cast<std::size_t>(S) * A, 0.0);
    for (int h = mdp.horizon; h >= 1; --h) {
        std::vector<double> nv(static_cast<std::size_t>(S), 0.0);
        for (int s = 0; s < S; ++s) {
            double best = kNegInf;
            for (int a = 0; a < A; ++a) {
                double acc = mdp.r(s, a);
                for (int s2 = 0; s2 < S; ++s2) acc += mdp.p(s, a, s2) * v[static_cast<std::size_t>(s2)];
                q[static_cast<std::size_t>(s * A + a)] = acc;
                best = std::max(best, acc);
            }
            nv[static_cast<std::size_t>(s)] = best;
        }
        v = std::move(nv);
    }
    // q now holds the stage-1 action values (full horizon to go).
    std::vector<int> ref(static_cast<std::size_t>(S), 0);
    for (int s = 0; s < S; ++s) {
        int best_a = 0;
        double best = q[static_cast<std::size_t>(s * A)];
        for (int a = 1; a < A; ++a) {
            double val = q[static_cast<std::size_t>(s * A + a)];
            if (val > best) {
                best = val;
                best_a = a;
            }
        }
        ref[static_cast<std::size_t>(s)] = best_a;
    }
    return ref;
}

int tabular_step(const TabularMDP& mdp, int state, int action, RngStream& env_rng) {
    double u = env_rng.uniform();
    double acc = 0.0;
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        acc += mdp.p(state, action, s2);
        if (u < acc) return s2;
    }
    return mdp.n_states - 1;
}

TabTrajectory rollout(const TabularMDP& mdp, const TabularIndexedPolicy& policy,
                      RngStream& policy_rng, RngStream& env_rng) {
    TabTrajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(mdp.horizon));
    int s = mdp.initial_state;
    for (int h = 0; h < mdp.horizon; ++h) {
        int a = policy.sample_action(s, policy_rng);
        double r = mdp.r(s, a);
        traj.steps.push_back({s, a, r});
        traj.total_return += r;
        s = tabular_step(mdp, s, a, env_rng);
    }
    traj.final_state = s;
    return traj;
}

double exact_policy_eval(const TabularMDP& mdp, const TabularIndexedPolicy& policy) {
    const int S = mdp.n_states, A = mdp.n_actions;
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    for (int h = mdp.horizon; h >= 1; --h) {
        std::vector<double> nv(static_cast<std::size_t>(S), 0.0);
        for (int s = 0; s < S; ++s) {
            double acc = 0.0;
            for (int a = 0; a < A; ++a) {
                double qa = mdp.r(s, a);
                for (int s2 = 0; s2 < S; ++s2) qa += mdp.p(s, a, s2) * v[static_cast<std::size_t>(s2)];
                acc += policy.prob(s, a) * qa;
            }
            nv[static_cast<std::size_t>(s)] = acc;
        }
        v = std::move(nv);
    }
    return v[static_cast<std::size_t>(mdp.initial_state)];
}

double exact_policy_eval(const TabularMDP& mdp, const std::vector<std::vector<int>>& actions) {
    const int S = mdp.n_states;
    if (static_cast<int>(actions.size()) != mdp.horizon)
        throw std::invalid_argument("exact_policy_eval: stage count must equal the horizon");
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    for (int h = mdp.horizon - 1; h >= 0; --h) {
        std::vector<double> nv(static_cast<std::size_t>(S), 0.0);
        for (int s = 0; s < S; ++s) {
            int a = actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
            double acc = mdp.r(s, a);
            for (int s2 = 0; s2 < S; ++s2) acc += mdp.p(s, a, s2) * v[static_cast<std::size_t>(s2)];
            nv[static_cast<std::size_t>(s)] = acc;
        }
        v = std::move(nv);
    }
    return v[static_cast<std::size_t>(mdp.initial_state)];
}

double optimal_value(const TabularMDP& mdp) {
    const int S = mdp.n_states, A = mdp.n_actions;
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    for (int h = mdp.horizon; h >= 1; --h) {
        std::vector<double> nv(static_cast<std::size_t>(S), 0.0);
        for (int s = 0; s < S; ++s) {
            double best = kNegInf;
            for (int a = 0; a < A; ++a) {
                double qa = mdp.r(s, a);
                for (int s2 = 0; s2 < S; ++s2) qa += mdp.p(s, a, s2) * v[static_cast<std::size_t>(s2)];
                best = std::max(best, qa);
            }
            nv[static_cast<std::size_t>(s)] = best;
        }
        v = std::move(nv);
    }
    return v[static_cast<std::size_t>(mdp.initial_state)];
}

MeanStderr mc_policy_eval(const TabularMDP& mdp, const TabularIndexedPolicy& policy,
                          int n_rollouts, RngStream& policy_rng, RngStream& env_rng) {
    std::vector<double> returns;
    returns.reserve(static_cast<std::size_t>(n_rollouts));
    for (int i = 0; i < n_rollouts; ++i)
        returns.push_back(rollout(mdp, policy, policy_rng, env_rng).total_return);
    return mean_stderr(returns);
}

McStepResult mountaincar_step(const MountainCarConfig& cfg, MountainCarState s, double action) {
    double a = clamp(action, -1.0, 1.0);
    McStepResult out;
    double v = s.velocity + cfg.force * a - cfg.gravity * std::cos(3.0 * s.position);
    v = clamp(v, -cfg.max_speed, cfg.max_speed);
    double p = clamp(s.position + v, cfg.min_position, cfg.max_position);
    out.next = {p, v};
    out.done = p >= cfg.goal_position;
    out.reward = -cfg.action_cost * a * a + (out.done ? cfg.goal_reward : 0.0);
    return out;
}

std::array<double, 2> mountaincar_features(const MountainCarConfig& cfg, MountainCarState s) {
    double center = 0.5 * (cfg.min_position + cfg.max_position);
    double half = 0.5 * (cfg.max_position - cfg.min_position);
    return {(s.position - center) / half, s.velocity / cfg.max_speed};
}

MountainCarState mountaincar_start(const MountainCarConfig& cfg, RngStream& env_rng) {
    return {env_rng.uniform(cfg.start_lo, cfg.start_hi), 0.0};
}

McTrajectory rollout(const MountainCarConfig& cfg, const LinearDeterministicPolicy& policy,
                     RngStream& env_rng) {
    McTrajectory traj;
    MountainCarState s = mountaincar_start(cfg, env_rng);
    for (int h = 0; h < cfg.horizon; ++h) {
        auto phi = mountaincar_features(cfg, s);
        double a = policy.act(phi);
        McStepResult res = mountaincar_step(cfg, s, a);
        traj.steps.push_back({s.position, s.velocity, a, res.reward});
        traj.total_return += res.reward;
        if (res.done) break;
        s = res.next;
    }
    return traj;
}

MeanStderr mc_policy_eval(const MountainCarConfig& cfg, const LinearDeterministicPolicy& policy,
                          int n_rollouts, RngStream& env_rng) {
    std::vector<double> returns;
    returns.reserve(static_cast<std::size_t>(n_rollouts));
    for (int i = 0; i < n_rollouts; ++i)
        returns.push_back(rollout(cfg, policy, env_rng).total_return);
    return mean_stderr(returns);
}

}  // namespace coex
