#include "uesr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace uesr {

namespace {

constexpr std::uint64_t kEnvStream = 1000;
constexpr std::uint64_t kSamplingStream = 2000;

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

struct EnvSlot {
  EnvSlot(WarehouseState e, MessageBuffer b) : env(std::move(e)), buffer(std::move(b)) {}

  WarehouseState env;
  MessageBuffer buffer;
  int t = 0;
  std::vector<ObservationVector> obs;
  std::vector<ObservationVector> prev_obs;
  std::vector<std::size_t> prev_action;
  std::vector<std::vector<double>> embedding;
  std::vector<std::vector<double>> prev_embedding;
  std::vector<std::vector<double>> hidden;
};

struct TickStats {
  std::vector<int> finished_episodes;  // deliveries of each episode that ended
};

// Drives batch_envs synchronized environments with one team of agents.
class Runner {
 public:
  Runner(const ExperimentConfig& config, Team& team, LayoutVariant variant,
         std::uint64_t seed)
      : config_(config), team_(team) {
    const auto n = static_cast<std::size_t>(config.n_agents);
    for (int e = 0; e < config.a2c.batch_envs; ++e) {
      EnvSlot slot(create_env(variant, mix_seed(seed, kEnvStream + static_cast<std::uint64_t>(e)),
                              config.warehouse()),
                   MessageBuffer(config.n_agents, config.split));
      slot.prev_obs.resize(n);
      slot.prev_action.assign(n, 0);
      slot.embedding.resize(n);
      slot.prev_embedding.resize(n);
      begin_episode(slot);
      slots_.push_back(std::move(slot));
    }
    for (std::size_t i = 0; i < n; ++i) {
      sampling_.emplace_back(mix_seed(seed, kSamplingStream + i));
    }
  }

  std::size_t envs() const { return slots_.size(); }
  void set_trace(TraceCallback trace) { trace_ = std::move(trace); }

  void start_segment(std::vector<TrajectoryBatch>& batches) const {
    for (std::size_t i = 0; i < batches.size(); ++i) {
      for (std::size_t e = 0; e < slots_.size(); ++e) {
        batches[i].initial_hidden[e] = slots_[e].hidden[i];
      }
    }
  }

  void end_segment(std::vector<TrajectoryBatch>& batches) const {
    for (std::size_t i = 0; i < batches.size(); ++i) {
      for (std::size_t e = 0; e < slots_.size(); ++e) {
        batches[i].final_inputs[e] = policy_input(slots_[e], i);
      }
    }
  }

  // Advances every environment one step. When `batches` is given the step is
  // stored at position `step` of each agent's batch; UEM examples are
  // appended to `uem_samples` when given.
  TickStats tick(std::vector<TrajectoryBatch>* batches, int step,
                 std::vector<std::vector<UEMSample>>* uem_samples) {
    TickStats stats;
    const std::size_t n = static_cast<std::size_t>(config_.n_agents);
    const Scheme scheme = config_.scheme;
    std::vector<Action> actions(n);
    std::vector<MessageVector> messages;
    for (std::size_t e = 0; e < slots_.size(); ++e) {
      EnvSlot& slot = slots_[e];
      messages.clear();
      std::vector<ActResult> results;
      for (std::size_t i = 0; i < n; ++i) {
        AgentModels& agent = team_.agents[i];
        auto input = policy_input(slot, i);
        std::vector<double> ues_part;
        std::vector<double> uem_inbox;
        if (uses_ues(scheme)) {
          uem_inbox = slot.buffer.uem_inbox(static_cast<int>(i), slot.t);
          std::vector<double> x;
          if (slot.t == 0) {
            x = zeros(kEmbeddingSize);
          } else {
            x = UnexpectednessModule::unexpectedness(
                agent.uem->predict(slot.prev_embedding[i], slot.prev_action[i], uem_inbox),
                slot.embedding[i]);
            if (uem_samples) {
              (*uem_samples)[i].push_back(
                  {std::vector<double>(slot.prev_obs[i].begin(), slot.prev_obs[i].end()),
                   slot.prev_action[i], uem_inbox,
                   std::vector<double>(slot.obs[i].begin(), slot.obs[i].end())});
            }
          }
          ues_part = config_.zero_ues
                         ? zeros(static_cast<std::size_t>(config_.split.ues_len))
                         : agent.uem->encode_message(x);
        }
        ActResult r = act(agent.actor, input, slot.hidden[i], sampling_[i]);
        actions[i] = static_cast<Action>(r.action);
        if (auto m = assemble_message(scheme, config_.split, r.message_bits, ues_part)) {
          messages.push_back(std::move(*m));
        }
        if (trace_) {
          StepTrace st{static_cast<int>(e), slot.t, i, input, uem_inbox, {}};
          if (scheme != Scheme::None) st.published = messages.back().values;
          trace_(st);
        }
        if (batches) {
          TrajectoryBatch& b = (*batches)[i];
          const std::size_t k = b.at(static_cast<int>(e), step);
          b.inputs[k] = std::move(input);
          b.actions[k] = r.action;
          b.message_bits[k] = r.message_bits;
        }
        results.push_back(std::move(r));
      }
      if (scheme != Scheme::None) slot.buffer.publish(slot.t, messages);

      const StepOutcome out = uesr::step(slot.env, actions);
      for (std::size_t i = 0; i < n; ++i) {
        if (batches) {
          TrajectoryBatch& b = (*batches)[i];
          const std::size_t k = b.at(static_cast<int>(e), step);
          b.rewards[k] = out.rewards[i];
          b.dones[k] = out.episode_done ? 1 : 0;
        }
        slot.prev_obs[i] = slot.obs[i];
        slot.prev_action[i] = results[i].action;
        slot.obs[i] = observe(slot.env, i);
        slot.hidden[i] = std::move(results[i].hidden);
        if (uses_ues(scheme)) {
          slot.prev_embedding[i] = std::move(slot.embedding[i]);
          slot.embedding[i] = team_.agents[i].uem->embed(slot.obs[i]);
        }
      }
      ++slot.t;
      if (out.episode_done) {
        stats.finished_episodes.push_back(slot.env.delivered_count);
        begin_episode(slot);
      }
    }
    return stats;
  }

 private:
  void begin_episode(EnvSlot& slot) {
    slot.obs = reset_episode(slot.env);
    slot.buffer.clear();
    slot.t = 0;
    const auto n = slot.obs.size();
    slot.hidden.assign(n, zeros(kHiddenSize));
    if (uses_ues(config_.scheme)) {
      for (std::size_t i = 0; i < n; ++i) {
        slot.embedding[i] = team_.agents[i].uem->embed(slot.obs[i]);
      }
    }
  }

  std::vector<double> policy_input(const EnvSlot& slot, std::size_t agent) const {
    std::vector<double> input(slot.obs[agent].begin(), slot.obs[agent].end());
    if (config_.scheme != Scheme::None) {
      const auto inbox = slot.buffer.policy_inbox(static_cast<int>(agent), slot.t);
      input.insert(input.end(), inbox.begin(), inbox.end());
    }
    return input;
  }

  const ExperimentConfig& config_;
  Team& team_;
  std::vector<EnvSlot> slots_;
  std::vector<Rng> sampling_;
  TraceCallback trace_;
};

struct LossAccumulator {
  double actor = 0.0, critic = 0.0, pred = 0.0, enc = 0.0;
  std::int64_t a2c_count = 0, uem_count = 0;

  void reset() { *this = {}; }
  static double mean(double sum, std::int64_t n) {
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
  }
};

// Updates every agent from its batch; returns nothing, accumulates losses.
void update_team(Team& team, const ExperimentConfig& config,
                 const std::vector<TrajectoryBatch>& batches,
                 std::vector<std::vector<UEMSample>>& uem_samples,
                 LossAccumulator& acc) {
  for (std::size_t i = 0; i < team.agents.size(); ++i) {
    AgentModels& agent = team.agents[i];
    const LossReport r = a2c_update(agent.actor, agent.critic, batches[i], config.a2c);
    acc.actor += r.actor_loss;
    acc.critic += r.critic_loss;
    ++acc.a2c_count;
    if (agent.uem && !uem_samples[i].empty()) {
      const UEMLosses u = agent.uem->update(uem_samples[i], config.uem_optimizer());
      acc.pred += u.prediction;
      acc.enc += u.encoding;
      ++acc.uem_count;
    }
    uem_samples[i].clear();
  }
}

std::vector<TrajectoryBatch> make_batches(const ExperimentConfig& config, int steps) {
  return std::vector<TrajectoryBatch>(static_cast<std::size_t>(config.n_agents),
                                      TrajectoryBatch(config.a2c.batch_envs, steps));
}

std::string prefix(std::size_t agent) { return "agent" + std::to_string(agent); }

}  // namespace

Team::Team(const ExperimentConfig& config) {
  config.validate();
  const int bits = uses_reward_bits(config.scheme) ? config.split.reward_len : 0;
  for (int i = 0; i < config.n_agents; ++i) {
    const auto base = 10 * static_cast<std::uint64_t>(i);
    AgentModels models{
        ActorNetwork(config.policy_input_size(), bits, mix_seed(config.seed, base + 1)),
        CriticNetwork(config.policy_input_size(), mix_seed(config.seed, base + 2)),
        std::nullopt};
    if (uses_ues(config.scheme)) {
      models.uem.emplace(kObservationSize, config.uem_inbox_size(), config.split.ues_len,
                         mix_seed(config.seed, base + 3));
    }
    agents.push_back(std::move(models));
  }
}

void Team::write_to(Checkpoint& ckpt) const {
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    ckpt.put_parameters(prefix(i) + "/actor", a.actor.params);
    ckpt.put_parameters(prefix(i) + "/critic", a.critic.online);
    ckpt.put_parameters(prefix(i) + "/critic_target", a.critic.target);
    if (a.uem) {
      ckpt.put_parameters(prefix(i) + "/uem_projection", a.uem->projection);
      ckpt.put_parameters(prefix(i) + "/uem_dynamics", a.uem->dynamics);
      ckpt.put_parameters(prefix(i) + "/uem_autoencoder", a.uem->autoencoder);
    }
  }
}

Team Team::from_checkpoint(const Checkpoint& ckpt, const ExperimentConfig& config) {
  const auto it = ckpt.metadata.find("fingerprint");
  if (it == ckpt.metadata.end() || it->second != config.fingerprint()) {
    throw std::runtime_error("checkpoint fingerprint does not match the configuration");
  }
  Team team(config);
  for (std::size_t i = 0; i < team.agents.size(); ++i) {
    auto& a = team.agents[i];
    ckpt.get_parameters(prefix(i) + "/actor", a.actor.params);
    ckpt.get_parameters(prefix(i) + "/critic", a.critic.online);
    ckpt.get_parameters(prefix(i) + "/critic_target", a.critic.target);
    if (a.uem) {
      ckpt.get_parameters(prefix(i) + "/uem_projection", a.uem->projection);
      ckpt.get_parameters(prefix(i) + "/uem_dynamics", a.uem->dynamics);
      ckpt.get_parameters(prefix(i) + "/uem_autoencoder", a.uem->autoencoder);
    }
  }
  return team;
}

Checkpoint make_checkpoint(const Team& team, const ExperimentConfig& config,
                           LayoutVariant trained_on, std::int64_t env_steps) {
  Checkpoint ckpt;
  ckpt.metadata["fingerprint"] = config.fingerprint();
  ckpt.metadata["config"] = to_ini(config);
  ckpt.metadata["layout"] = std::string(variant_name(trained_on));
  ckpt.metadata["env_steps"] = std::to_string(env_steps);
  team.write_to(ckpt);
  return ckpt;
}

ExperimentConfig checkpoint_config(const Checkpoint& ckpt) {
  const auto it = ckpt.metadata.find("config");
  if (it == ckpt.metadata.end()) throw std::runtime_error("checkpoint carries no config");
  return parse_config(it->second);
}

TrainResult train(const ExperimentConfig& config, const ProgressCallback& progress) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  Team team(config);
  Runner runner(config, team, config.layout, config.seed);
  MetricsWriter writer;
  if (!config.metrics_path.empty()) writer = MetricsWriter(config.metrics_path, config.record_wall_clock);

  const int n = config.a2c.n_steps;
  const std::int64_t per_tick = config.a2c.batch_envs;
  auto batches = make_batches(config, n);
  std::vector<std::vector<UEMSample>> uem_samples(static_cast<std::size_t>(config.n_agents));
  LossAccumulator acc;

  TrainResult result;
  std::int64_t deliveries = 0, episodes = 0;
  std::int64_t window_deliveries = 0, window_episodes = 0;
  std::int64_t next_flush = config.metric_flush_interval;
  std::int64_t next_checkpoint =
      config.checkpoint_interval > 0 ? config.checkpoint_interval : INT64_MAX;
  bool best_set = false;

  auto emit = [&]() {
    MetricsRecord r;
    r.scheme = std::string(scheme_name(config.scheme));
    r.seed = config.seed;
    r.env_step = result.env_steps;
    r.episodes_completed = episodes;
    r.deliveries_per_episode =
        episodes > 0 ? static_cast<double>(deliveries) / static_cast<double>(episodes) : 0.0;
    r.recent_deliveries_per_episode =
        window_episodes > 0
            ? static_cast<double>(window_deliveries) / static_cast<double>(window_episodes)
            : 0.0;
    r.actor_loss = LossAccumulator::mean(acc.actor, acc.a2c_count);
    r.critic_loss = LossAccumulator::mean(acc.critic, acc.a2c_count);
    r.pred_loss = LossAccumulator::mean(acc.pred, acc.uem_count);
    r.enc_loss = LossAccumulator::mean(acc.enc, acc.uem_count);
    r.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (window_episodes > 0 &&
        (!best_set || r.recent_deliveries_per_episode > result.best_recent_deliveries_per_episode)) {
      result.best_recent_deliveries_per_episode = r.recent_deliveries_per_episode;
      best_set = true;
    }
    if (writer.is_open()) writer.write(r);
    if (progress) progress(r);
    result.metrics.push_back(r);
    acc.reset();
    window_deliveries = window_episodes = 0;
  };

  try {
    int step = 0;
    while (result.env_steps + per_tick <= config.total_env_steps) {
      if (step == 0) runner.start_segment(batches);
      const TickStats stats = runner.tick(&batches, step, &uem_samples);
      for (int d : stats.finished_episodes) {
        deliveries += d;
        window_deliveries += d;
        ++episodes;
        ++window_episodes;
      }
      result.env_steps += per_tick;
      if (++step == n) {
        runner.end_segment(batches);
        update_team(team, config, batches, uem_samples, acc);
        ++result.updates;
        step = 0;
      }
      if (result.env_steps >= next_flush) {
        emit();
        while (next_flush <= result.env_steps) next_flush += config.metric_flush_interval;
      }
      if (result.env_steps >= next_checkpoint && !config.checkpoint_path.empty()) {
        save_checkpoint(make_checkpoint(team, config, config.layout, result.env_steps),
                        config.checkpoint_path);
        while (next_checkpoint <= result.env_steps) next_checkpoint += config.checkpoint_interval;
      }
    }
  } catch (const DivergenceError&) {
    if (!config.checkpoint_path.empty()) {
      save_checkpoint(make_checkpoint(team, config, config.layout, result.env_steps),
                      config.checkpoint_path + ".diverged");
    }
    throw;
  }
  if (result.metrics.empty() || result.metrics.back().env_step != result.env_steps) emit();

  result.episodes = episodes;
  result.final_deliveries_per_episode = result.metrics.back().deliveries_per_episode;
  result.checkpoint = make_checkpoint(team, config, config.layout, result.env_steps);
  if (!config.checkpoint_path.empty()) save_checkpoint(result.checkpoint, config.checkpoint_path);
  return result;
}

TransferResult transfer(const Checkpoint& ckpt, LayoutVariant target,
                        int finetune_batches, std::uint64_t seed) {
  if (finetune_batches < 0) throw std::invalid_argument("finetune_batches must be >= 0");
  const auto layout = ckpt.metadata.find("layout");
  if (layout == ckpt.metadata.end() ||
      layout->second != variant_name(LayoutVariant::Training)) {
    throw std::runtime_error("transfer expects a checkpoint trained on the training layout");
  }
  ExperimentConfig config = checkpoint_config(ckpt);
  config.layout = target;
  Team team = Team::from_checkpoint(ckpt, config);

  TransferResult result;
  if (finetune_batches == 0) {
    const EvalResult eval = evaluate(ckpt, target, config.eval_episodes, seed);
    result.episodes = static_cast<std::int64_t>(eval.deliveries.size());
    result.env_steps = result.episodes * config.warehouse().episode_length;
    result.deliveries_per_episode = eval.mean;
    result.checkpoint = ckpt;
    return result;
  }

  Runner runner(config, team, target, seed);
  const int episode_length = config.warehouse().episode_length;
  auto batches = make_batches(config, episode_length);
  std::vector<std::vector<UEMSample>> uem_samples(static_cast<std::size_t>(config.n_agents));
  std::int64_t deliveries = 0;
  for (int b = 0; b < finetune_batches; ++b) {
    LossAccumulator acc;
    std::int64_t batch_deliveries = 0, batch_episodes = 0;
    runner.start_segment(batches);
    for (int t = 0; t < episode_length; ++t) {
      const TickStats stats = runner.tick(&batches, t, &uem_samples);
      for (int d : stats.finished_episodes) {
        batch_deliveries += d;
        ++batch_episodes;
      }
      result.env_steps += static_cast<std::int64_t>(runner.envs());
    }
    runner.end_segment(batches);
    update_team(team, config, batches, uem_samples, acc);
    ++result.updates;
    deliveries += batch_deliveries;
    result.episodes += batch_episodes;

    MetricsRecord r;
    r.scheme = std::string(scheme_name(config.scheme));
    r.seed = seed;
    r.env_step = result.env_steps;
    r.episodes_completed = result.episodes;
    r.deliveries_per_episode =
        static_cast<double>(deliveries) / static_cast<double>(result.episodes);
    r.recent_deliveries_per_episode =
        static_cast<double>(batch_deliveries) / static_cast<double>(batch_episodes);
    r.actor_loss = LossAccumulator::mean(acc.actor, acc.a2c_count);
    r.critic_loss = LossAccumulator::mean(acc.critic, acc.a2c_count);
    r.pred_loss = LossAccumulator::mean(acc.pred, acc.uem_count);
    r.enc_loss = LossAccumulator::mean(acc.enc, acc.uem_count);
    result.metrics.push_back(r);
  }
  result.deliveries_per_episode =
      static_cast<double>(deliveries) / static_cast<double>(result.episodes);
  result.checkpoint = make_checkpoint(team, config, LayoutVariant::Training, 0);
  result.checkpoint.metadata["layout"] = "training";
  result.checkpoint.metadata["finetuned_on"] = std::string(variant_name(target));
  return result;
}

void trace_rollout(const ExperimentConfig& config, int ticks, const TraceCallback& trace) {
  config.validate();
  Team team(config);
  Runner runner(config, team, config.layout, config.seed);
  runner.set_trace(trace);
  for (int k = 0; k < ticks; ++k) runner.tick(nullptr, 0, nullptr);
}

EvalResult evaluate(const Checkpoint& ckpt, LayoutVariant variant, int episodes,
                    std::uint64_t seed) {
  if (episodes <= 0) throw std::invalid_argument("episodes must be positive");
  ExperimentConfig config = checkpoint_config(ckpt);
  config.layout = variant;
  Team team = Team::from_checkpoint(ckpt, config);
  Runner runner(config, team, variant, seed);
  EvalResult result;
  while (static_cast<int>(result.deliveries.size()) < episodes) {
    const TickStats stats = runner.tick(nullptr, 0, nullptr);
    for (int d : stats.finished_episodes) {
      if (static_cast<int>(result.deliveries.size()) < episodes) result.deliveries.push_back(d);
    }
  }
  double sum = 0.0;
  for (int d : result.deliveries) sum += d;
  result.mean = sum / episodes;
  double ss = 0.0;
  for (int d : result.deliveries) ss += (d - result.mean) * (d - result.mean);
  result.stddev = std::sqrt(ss / episodes);
  return result;
}

}  // namespace uesr
