#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "coex/algo.hpp"
#include "coex/cucbvi.hpp"
#include "coex/envs.hpp"
#include "coex/mis.hpp"
#include "coex/rng.hpp"

using namespace coex;

namespace {

ParamDataset make_dataset(int n, int n_behaviors, int dim) {
    RngStream rng(7, Stream::kScratch);
    std::vector<GaussianHyperpolicy> behaviors;
    for (int b = 0; b < n_behaviors; ++b) {
        std::vector<double> mean(static_cast<std::size_t>(dim));
        for (double& m : mean) m = rng.uniform(-2.0, 2.0);
        behaviors.emplace_back(std::move(mean), std::vector<double>(static_cast<std::size_t>(dim), 1.0));
    }
    ParamDataset ds;
    for (int i = 0; i < n; ++i) {
        const GaussianHyperpolicy& b = behaviors[static_cast<std::size_t>(i % n_behaviors)];
        ds.add_sample(b, b.sample_theta(rng), rng.uniform());
    }
    return ds;
}

void bm_rbh_estimate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ParamDataset ds = make_dataset(n, 8, 1);
    GaussianHyperpolicy target({0.5}, {1.0});
    std::vector<double> pooled = pooled_log_densities(ds);
    for (auto _ : state)
        benchmark::DoNotOptimize(rbh_estimate(ds, target, 25.0, pooled));
    state.SetComplexityN(n);
}

void bm_pooled_densities(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ParamDataset ds = make_dataset(n, 8, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(pooled_log_densities(ds));
    state.SetComplexityN(n);
}

void bm_mixture_bound_2d(benchmark::State& state) {
    const int n_behaviors = static_cast<int>(state.range(0));
    ParamDataset ds = make_dataset(40 * n_behaviors, n_behaviors, 2);
    GaussianHyperpolicy target({0.3, 0.7}, {1.0, 1.0});
    for (auto _ : state)
        benchmark::DoNotOptimize(renyi_mixture_bound(ds, target, 1.0));
}

void bm_gridworld_rollout(benchmark::State& state) {
    GridworldConfig cfg;
    cfg.slip = 0.1;
    TabularMDP mdp = make_gridworld(cfg);
    TabularIndexedPolicy pol(optimal_reference_actions(mdp), mdp.n_actions, 0.8);
    RngStream prng(1, Stream::kPolicy), erng(1, Stream::kEnv);
    for (auto _ : state)
        benchmark::DoNotOptimize(rollout(mdp, pol, prng, erng));
}

void bm_mountaincar_rollout(benchmark::State& state) {
    MountainCarConfig cfg;
    LinearDeterministicPolicy pol{{0.0, 18.0}};
    RngStream erng(1, Stream::kEnv);
    for (auto _ : state)
        benchmark::DoNotOptimize(rollout(cfg, pol, erng));
}

void bm_optimistic_vi(benchmark::State& state) {
    GridworldConfig cfg;
    cfg.slip = 0.1;
    TabularMDP mdp = make_gridworld(cfg);
    EmpiricalModel model(mdp);
    TabularIndexedPolicy pol(optimal_reference_actions(mdp), mdp.n_actions, 0.8);
    RngStream prng(1, Stream::kPolicy), erng(1, Stream::kEnv);
    for (int i = 0; i < 50; ++i) model.update(rollout(mdp, pol, prng, erng));
    for (auto _ : state)
        benchmark::DoNotOptimize(optimistic_vi(model, 50, 0.1));
}

}  // namespace

BENCHMARK(bm_rbh_estimate)->Range(64, 4096)->Complexity(benchmark::oN);
BENCHMARK(bm_pooled_densities)->Range(64, 4096)->Complexity(benchmark::oN);
BENCHMARK(bm_mixture_bound_2d)->Arg(4)->Arg(16)->Arg(64);
BENCHMARK(bm_gridworld_rollout);
BENCHMARK(bm_mountaincar_rollout);
BENCHMARK(bm_optimistic_vi);

BENCHMARK_MAIN();
