#include <benchmark/benchmark.h>

#include <vector>

#include "uesr/actor_critic.hpp"
#include "uesr/uem.hpp"
#include "uesr/warehouse.hpp"

using namespace uesr;

namespace {

// 80 observation values plus two 10-wide messages.
constexpr std::size_t kInput = kObservationSize + 20;

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform01();
  return v;
}

void BM_EnvStep(benchmark::State& state) {
  WarehouseState env = create_env(LayoutVariant::Training, 1);
  reset_episode(env);
  Rng policy(2);
  std::vector<Action> actions(env.agents.size());
  for (auto _ : state) {
    if (env.episode_done()) reset_episode(env);
    for (auto& a : actions) a = static_cast<Action>(policy.uniform_index(kNumActions));
    benchmark::DoNotOptimize(step(env, actions));
  }
}
BENCHMARK(BM_EnvStep);

void BM_Observe(benchmark::State& state) {
  WarehouseState env = create_env(LayoutVariant::Training, 1);
  reset_episode(env);
  for (auto _ : state) benchmark::DoNotOptimize(observe(env, 0));
}
BENCHMARK(BM_Observe);

void BM_Act(benchmark::State& state) {
  ActorNetwork actor(kInput, 5, 3);
  Rng rng(4);
  const auto input = random_vector(rng, kInput);
  const std::vector<double> hidden(kHiddenSize, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(act(actor, input, hidden, rng));
}
BENCHMARK(BM_Act);

void BM_A2CUpdate(benchmark::State& state) {
  const auto config = A2CConfig::defaults(Scheme::UES_R);
  ActorNetwork actor(kInput, 5, 5);
  CriticNetwork critic(kInput, 6);
  Rng rng(7);
  TrajectoryBatch batch(config.batch_envs, config.n_steps);
  for (std::size_t k = 0; k < batch.inputs.size(); ++k) {
    batch.inputs[k] = random_vector(rng, kInput);
    batch.actions[k] = rng.uniform_index(kNumActions);
    batch.message_bits[k].assign(5, 0);
    batch.rewards[k] = rng.uniform01() < 0.05 ? 0.5 : 0.0;
  }
  for (int e = 0; e < config.batch_envs; ++e) {
    batch.initial_hidden[static_cast<std::size_t>(e)].assign(kHiddenSize, 0.0);
    batch.final_inputs[static_cast<std::size_t>(e)] = random_vector(rng, kInput);
  }
  for (auto _ : state) benchmark::DoNotOptimize(a2c_update(actor, critic, batch, config));
}
BENCHMARK(BM_A2CUpdate)->Unit(benchmark::kMillisecond);

void BM_UEMUpdate(benchmark::State& state) {
  UnexpectednessModule uem(kObservationSize, 10, 5, 8);
  Rng rng(9);
  std::vector<UEMSample> batch(50);
  for (auto& s : batch) {
    s.prev_observation = random_vector(rng, kObservationSize);
    s.observation = random_vector(rng, kObservationSize);
    s.prev_action = rng.uniform_index(kNumActions);
    s.inbox = random_vector(rng, 10);
  }
  OptimizerConfig cfg;
  cfg.learning_rate = 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(uem.update(batch, cfg));
}
BENCHMARK(BM_UEMUpdate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
