#include <benchmark/benchmark.h>

#include <vector>

#include "pricesim/agents.hpp"
#include "pricesim/distributor.hpp"
#include "pricesim/policy.hpp"
#include "pricesim/random.hpp"
#include "pricesim/simulation.hpp"

namespace {

using namespace pricesim;

void BM_SampleAction(benchmark::State& state) {
    RandomStream rng(42);
    const GaussianPolicyParams params{0.7, -2.0};
    const PriceBounds bounds{0.0, 2.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_action(params, bounds, false, rng));
    }
}
BENCHMARK(BM_SampleAction);

void BM_LogProbGrad(benchmark::State& state) {
    const GaussianPolicyParams params{0.7, -2.0};
    double action = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(log_prob_grad(params, action));
        action += 1e-9;
    }
}
BENCHMARK(BM_LogProbGrad);

void BM_PpoSurrogateGrad(benchmark::State& state) {
    RandomStream rng(7);
    const GaussianPolicyParams params{0.7, -2.0};
    std::vector<Experience> batch;
    std::vector<double> advantages;
    for (int i = 0; i < 16; ++i) {
        const double action = rng.gaussian(0.7, 0.15);
        batch.push_back(Experience{action, action, 50.0, log_prob(params, action), i});
        advantages.push_back(rng.gaussian(0.0, 1.0));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(ppo_surrogate_grad(params, batch, advantages, 0.2));
    }
}
BENCHMARK(BM_PpoSurrogateGrad);

void BM_DistributeSoftmax(benchmark::State& state) {
    const DistributorConfig config{DistributorPolicy::kSoftmaxNegPrice, 0.05};
    std::vector<Price> bids;
    RandomStream rng(3);
    for (int i = 0; i < 8; ++i) {
        bids.push_back(Price{0.2 + 0.1 * i});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(distribute(config, bids, Budget{1.0}, QueryVolume{100.0}));
    }
}
BENCHMARK(BM_DistributeSoftmax);

void BM_BanditStep(benchmark::State& state) {
    BanditConfig config;
    config.initial_params = GaussianPolicyParams{0.5, -1.2};
    BanditAgent agent(config, PriceBounds{0.0, 2.0}, RandomStream(11));
    std::int64_t step = 0;
    for (auto _ : state) {
        const Price bid = agent.bid(step);
        agent.observe(Reward{bid.value <= 1.0 ? bid.value * 100.0 : 0.0});
        agent.learn();
        ++step;
    }
}
BENCHMARK(BM_BanditStep);

void BM_RunScenario1000Steps(benchmark::State& state) {
    ScenarioConfig config;
    config.steps = 1000;
    config.price_bounds = PriceBounds{0.0, 2.0};
    config.traffic.budget_schedule = {{0, 1.0}};
    config.distributor.policy = DistributorPolicy::kSingleAgentThreshold;
    BanditConfig bandit;
    bandit.initial_params = GaussianPolicyParams{0.5, -1.2};
    config.agents.push_back(BanditAgentSpec{"bandit-0", bandit});
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_scenario(config));
    }
}
BENCHMARK(BM_RunScenario1000Steps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
