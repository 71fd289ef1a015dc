#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "uesr/grad_check.hpp"
#include "uesr/layers.hpp"
#include "uesr/plots.hpp"
#include "uesr/trainer.hpp"
#include "uesr/warehouse.hpp"

namespace {

using namespace uesr;

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::int64_t> steps, const std::string& metrics,
              const std::string& checkpoint) {
  ExperimentConfig config = load_config(config_path);
  if (seed) config.seed = *seed;
  if (steps) config.total_env_steps = *steps;
  if (!metrics.empty()) config.metrics_path = metrics;
  if (!checkpoint.empty()) config.checkpoint_path = checkpoint;
  config.validate();
  const TrainResult r = train(config, [](const MetricsRecord& m) {
    std::printf("step %lld  episodes %lld  deliveries/ep %.4f  recent %.4f  actor %.4f  critic %.4f\n",
                static_cast<long long>(m.env_step), static_cast<long long>(m.episodes_completed),
                m.deliveries_per_episode, m.recent_deliveries_per_episode, m.actor_loss,
                m.critic_loss);
    std::fflush(stdout);
  });
  std::printf("final deliveries/ep %.4f  best recent %.4f  updates %lld\n",
              r.final_deliveries_per_episode, r.best_recent_deliveries_per_episode,
              static_cast<long long>(r.updates));
  return 0;
}

int run_transfer(const std::string& ckpt_path, const std::string& variant,
                 std::optional<int> batches, std::uint64_t seed, const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const int n = batches ? *batches : checkpoint_config(ckpt).finetune_batches;
  const TransferResult r = transfer(ckpt, parse_variant(variant), n, seed);
  for (const auto& m : r.metrics) std::cout << format_row(m, false) << '\n';
  std::printf("updates %d  episodes %lld  deliveries/ep %.4f\n", r.updates,
              static_cast<long long>(r.episodes), r.deliveries_per_episode);
  if (!out.empty()) save_checkpoint(r.checkpoint, out);
  return 0;
}

int run_eval(const std::string& ckpt_path, int episodes, const std::string& variant,
             std::uint64_t seed) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const LayoutVariant v =
      variant.empty() ? checkpoint_config(ckpt).layout : parse_variant(variant);
  const EvalResult r = evaluate(ckpt, v, episodes, seed);
  std::printf("episodes %d  deliveries/ep mean %.4f  std %.4f\n", episodes, r.mean, r.stddev);
  return 0;
}

int run_grad_check() {
  bool ok = true;
  auto report = [&](const char* what, const GradCheckReport& r, double tol) {
    const bool pass = r.passed(tol);
    ok = ok && pass;
    std::printf("%-10s max rel err %.3e over %zu elements (%s)\n", what, r.max_relative_error,
                r.elements_checked, pass ? "ok" : "FAIL");
  };

  Rng rng(7);
  std::vector<double> x(6);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);

  {
    ParameterSet p;
    Linear lin(p, "lin", 6, 4, rng);
    ParameterSet* sets[] = {&p};
    report("linear",
           grad_check([&](Tape& t) {
             return ad::sum_squares(t, lin(t, p, t.constant(x)));
           }, sets), 1e-5);
  }
  {
    ParameterSet p;
    GRUCell gru(p, "gru", 6, 5, rng);
    ParameterSet* sets[] = {&p};
    report("gru",
           grad_check([&](Tape& t) {
             Var h = t.constant(std::vector<double>(5, 0.1));
             h = gru(t, p, t.constant(x), h);
             h = gru(t, p, t.constant(x), h);
             return ad::sum_squares(t, h);
           }, sets), 1e-5);
  }
  {
    ActorNetwork actor(6 + 4, 2, 11);
    CriticNetwork critic(6 + 4, 12);
    TrajectoryBatch batch(2, 4);
    for (std::size_t k = 0; k < batch.inputs.size(); ++k) {
      batch.inputs[k].resize(10);
      for (auto& v : batch.inputs[k]) v = rng.uniform(-1.0, 1.0);
      batch.actions[k] = rng.uniform_index(kNumActions);
      batch.message_bits[k] = {static_cast<int>(rng.uniform_index(2)),
                               static_cast<int>(rng.uniform_index(2))};
      batch.rewards[k] = rng.uniform01();
    }
    for (int e = 0; e < 2; ++e) {
      batch.initial_hidden[e].assign(kHiddenSize, 0.0);
      batch.final_inputs[e] = batch.inputs[batch.at(e, 3)];
    }
    const auto returns = compute_returns(batch, critic, 0.99, 4);
    ParameterSet* actor_sets[] = {&actor.params};
    report("actor",
           grad_check([&](Tape& t) {
             return build_a2c_losses(t, actor, critic, batch, returns, 0.01, 4).actor;
           }, actor_sets), 1e-4);
    ParameterSet* critic_sets[] = {&critic.online};
    report("critic",
           grad_check([&](Tape& t) {
             return build_a2c_losses(t, actor, critic, batch, returns, 0.01, 4).critic;
           }, critic_sets), 1e-4);
  }
  {
    UnexpectednessModule uem(6, 4, 3, 13);
    UEMSample s;
    s.prev_observation = x;
    s.observation.resize(6);
    for (auto& v : s.observation) v = rng.uniform01();
    s.prev_action = 2;
    s.inbox = {0.0, 1.0, 0.5, 0.25};
    ParameterSet* f_sets[] = {&uem.dynamics};
    report("l_pred",
           grad_check([&](Tape& t) { return uem.prediction_loss(t, s); }, f_sets), 1e-4);
    std::vector<double> xs(kEmbeddingSize);
    for (auto& v : xs) v = rng.uniform(-1.0, 1.0);
    ParameterSet* ae_sets[] = {&uem.autoencoder};
    report("l_enc",
           grad_check([&](Tape& t) { return uem.encoding_loss(t, xs); }, ae_sets), 1e-4);
  }
  return ok ? 0 : 1;
}

int run_render(const std::string& variant, int steps, std::uint64_t seed) {
  WarehouseState env = create_env(parse_variant(variant), seed);
  reset_episode(env);
  Rng policy(mix_seed(seed, 1));
  std::cout << render_ascii(env) << '\n';
  std::vector<Action> actions(env.agents.size());
  for (int s = 0; s < steps; ++s) {
    if (env.episode_done()) reset_episode(env);
    for (auto& a : actions) a = static_cast<Action>(policy.uniform_index(kNumActions));
    step(env, actions);
    std::cout << render_ascii(env) << '\n';
  }
  return 0;
}

int run_plot(const std::vector<std::string>& files, const std::string& out) {
  std::vector<std::filesystem::path> paths(files.begin(), files.end());
  emit_plots(paths, out);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent warehouse training with unexpectedness-encoded messages"};
  app.require_subcommand(1);

  std::string config_path, metrics_out, ckpt_out;
  std::optional<std::uint64_t> seed_opt;
  std::optional<std::int64_t> steps_opt;
  auto* train_cmd = app.add_subcommand("train", "Train on the configured layout");
  train_cmd->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", seed_opt, "Override the config seed");
  train_cmd->add_option("--steps", steps_opt, "Override total_env_steps");
  train_cmd->add_option("--metrics", metrics_out, "Override the metrics CSV path");
  train_cmd->add_option("--checkpoint", ckpt_out, "Override the checkpoint path");

  std::string ckpt_path, variant, transfer_out;
  std::optional<int> batches;
  std::uint64_t seed = 0;
  auto* transfer_cmd = app.add_subcommand("transfer", "Few-shot fine-tuning on a shifted layout");
  transfer_cmd->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  transfer_cmd->add_option("--variant", variant)->required()
      ->check(CLI::IsMember({"training", "goal_shift", "shelf_shift"}));
  transfer_cmd->add_option("--batches", batches, "Fine-tuning batches (0: zero-shot)");
  transfer_cmd->add_option("--seed", seed);
  transfer_cmd->add_option("--out", transfer_out, "Write the fine-tuned checkpoint");

  int episodes = 100;
  std::string eval_variant;
  auto* eval_cmd = app.add_subcommand("eval", "Frozen-policy evaluation");
  eval_cmd->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--variant", eval_variant)
      ->check(CLI::IsMember({"training", "goal_shift", "shelf_shift"}));
  eval_cmd->add_option("--seed", seed);

  auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference gradient checks");

  int render_steps = 5;
  std::string render_variant = "training";
  auto* render_cmd = app.add_subcommand("render", "Print random-action frames");
  render_cmd->add_option("--variant", render_variant)
      ->check(CLI::IsMember({"training", "goal_shift", "shelf_shift"}));
  render_cmd->add_option("--steps", render_steps)->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--seed", seed);

  std::vector<std::string> csvs;
  std::string svg_out = "curves.svg";
  auto* plot_cmd = app.add_subcommand("plot", "Learning-curve SVG from metrics CSVs");
  plot_cmd->add_option("files", csvs)->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", svg_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return run_train(config_path, seed_opt, steps_opt, metrics_out, ckpt_out);
    if (*transfer_cmd) return run_transfer(ckpt_path, variant, batches, seed, transfer_out);
    if (*eval_cmd) return run_eval(ckpt_path, episodes, eval_variant, seed);
    if (*grad_cmd) return run_grad_check();
    if (*render_cmd) return run_render(render_variant, render_steps, seed);
    if (*plot_cmd) return run_plot(csvs, svg_out);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
