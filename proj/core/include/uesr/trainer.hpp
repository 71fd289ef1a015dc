#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "uesr/actor_critic.hpp"
#include "uesr/checkpoint.hpp"
#include "uesr/config.hpp"
#include "uesr/metrics.hpp"
#include "uesr/uem.hpp"

namespace uesr {

struct AgentModels {
  ActorNetwork actor;
  CriticNetwork critic;
  std::optional<UnexpectednessModule> uem;
};

// Independently parameterised agents of one experiment.
class Team {
 public:
  // Fresh initialisation, seeded from config.seed.
  explicit Team(const ExperimentConfig& config);

  // Throws std::runtime_error when the fingerprint differs from `config`.
  static Team from_checkpoint(const Checkpoint& ckpt, const ExperimentConfig& config);
  void write_to(Checkpoint& ckpt) const;

  std::vector<AgentModels> agents;
};

// Checkpoint with the team, the config text and the layout it was trained on.
Checkpoint make_checkpoint(const Team& team, const ExperimentConfig& config,
                           LayoutVariant trained_on, std::int64_t env_steps);
// Config stored in a checkpoint by make_checkpoint.
ExperimentConfig checkpoint_config(const Checkpoint& ckpt);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRecord> metrics;
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
  std::int64_t episodes = 0;
  double final_deliveries_per_episode = 0.0;
  // Highest recent_deliveries_per_episode over the logged rows.
  double best_recent_deliveries_per_episode = 0.0;
};

// Called after each metrics row; used by the CLI for progress output.
using ProgressCallback = std::function<void(const MetricsRecord&)>;

// Trains on config.layout for config.total_env_steps (counted over all
// parallel environments). Writes the metrics CSV and checkpoint when their
// paths are set. On DivergenceError a "<checkpoint>.diverged" snapshot is
// written (when a checkpoint path is set) before the error propagates.
TrainResult train(const ExperimentConfig& config, const ProgressCallback& progress = {});

struct TransferResult {
  int updates = 0;
  std::int64_t episodes = 0;
  std::int64_t env_steps = 0;
  double deliveries_per_episode = 0.0;
  std::vector<MetricsRecord> metrics;  // one row per fine-tuning batch
  Checkpoint checkpoint;               // after fine-tuning
};

// Few-shot transfer: each fine-tuning batch is one full episode in every
// parallel environment followed by one update, so the defaults give 10
// updates over 100 episodes. With zero batches this is a frozen evaluation
// of config.eval_episodes episodes. Throws std::runtime_error if the
// checkpoint was not trained on the training layout.
TransferResult transfer(const Checkpoint& ckpt, LayoutVariant target,
                        int finetune_batches, std::uint64_t seed);

struct EvalResult {
  std::vector<int> deliveries;  // per episode
  double mean = 0.0;
  double stddev = 0.0;          // population standard deviation
};

// Frozen-parameter rollouts; never modifies the checkpoint.
EvalResult evaluate(const Checkpoint& ckpt, LayoutVariant variant, int episodes,
                    std::uint64_t seed);

// What one agent saw and sent at one step of a rollout.
struct StepTrace {
  int env = 0;
  int t = 0;  // step within the episode
  std::size_t agent = 0;
  std::vector<double> policy_input;
  std::vector<double> uem_inbox;  // empty unless the scheme uses the UEM
  std::vector<double> published;  // empty for ia2c
};
using TraceCallback = std::function<void(const StepTrace&)>;

// Rolls a freshly initialised team forward for `ticks` synchronized steps
// without learning, reporting every agent step.
void trace_rollout(const ExperimentConfig& config, int ticks, const TraceCallback& trace);

}  // namespace uesr
