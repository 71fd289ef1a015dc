#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "uesr/actor_critic.hpp"
#include "uesr/comm_bus.hpp"
#include "uesr/warehouse.hpp"

namespace uesr {

struct ExperimentConfig {
  Scheme scheme = Scheme::None;
  LayoutVariant layout = LayoutVariant::Training;
  std::uint64_t seed = 0;
  std::int64_t total_env_steps = 500'000;
  int n_agents = 2;

  A2CConfig a2c = A2CConfig::defaults(Scheme::None);
  double uem_learning_rate = 1e-3;

  SchemeSplit split = default_split(Scheme::None);
  // Publish zeros instead of the encoded unexpectedness (the UEM still trains).
  bool zero_ues = false;

  std::int64_t metric_flush_interval = 10'000;
  std::int64_t checkpoint_interval = 0;  // 0: final checkpoint only
  std::string metrics_path;
  std::string checkpoint_path;
  bool record_wall_clock = false;

  int finetune_batches = 10;
  int eval_episodes = 100;

  // Defaults for a scheme: learning rates, entropy coefficient, split.
  static ExperimentConfig defaults(Scheme scheme);

  // Throws std::invalid_argument on inconsistent values.
  void validate() const;

  // Architecture fingerprint; checkpoints only load into a matching setup.
  std::string fingerprint() const;

  WarehouseConfig warehouse() const;
  OptimizerConfig uem_optimizer() const;
  std::size_t policy_input_size() const;
  std::size_t uem_inbox_size() const;
};

// INI text with sections [experiment], [a2c], [optimizer], [uem], [message],
// [output] and [transfer]. Keys missing from the text keep the per-scheme
// defaults; unknown sections or keys throw std::invalid_argument.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Round-trips through parse_config.
std::string to_ini(const ExperimentConfig& config);

}  // namespace uesr
