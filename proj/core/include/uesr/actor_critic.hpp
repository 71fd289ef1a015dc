#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "uesr/autodiff.hpp"
#include "uesr/comm_bus.hpp"
#include "uesr/layers.hpp"
#include "uesr/optim.hpp"
#include "uesr/tensor.hpp"

namespace uesr {

// Communication baselines: IA2C (no messages), +M(R), +M(UES), +M(UES+R).
enum class Scheme { None, R, UES, UES_R };

std::string_view scheme_name(Scheme scheme);  // ia2c, m_r, m_ues, m_ues_r
Scheme parse_scheme(std::string_view name);   // throws std::invalid_argument
SchemeSplit default_split(Scheme scheme);
inline bool uses_reward_bits(Scheme s) { return s == Scheme::R || s == Scheme::UES_R; }
inline bool uses_ues(Scheme s) { return s == Scheme::UES || s == Scheme::UES_R; }

// Raised when a loss turns non-finite; training must stop.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct A2CConfig {
  Scheme scheme = Scheme::None;
  double entropy_coefficient = 0.01;
  double gamma = 0.99;
  int n_steps = 5;
  int batch_envs = 10;
  OptimizerConfig optimizer;

  // Per-scheme defaults: learning rates 5e-4 / 1e-3, entropy 0.01 / 0.05.
  static A2CConfig defaults(Scheme scheme);
  void validate() const;
};

inline constexpr std::size_t kHiddenSize = 64;

// linear(in -> 64) -> ReLU -> GRU(64) -> ReLU -> linear(64 -> 5 + 2 * bits).
// The first five logits drive the action softmax; each following pair is the
// two-way softmax of one reward-message bit.
class ActorNetwork {
 public:
  ActorNetwork(std::size_t input_size, int message_bits, std::uint64_t seed);

  struct Output {
    Var logits;
    Var hidden;
  };
  Output forward(Tape& tape, Var input, Var hidden);

  std::size_t input_size() const { return input_.in(); }
  int message_bits() const { return message_bits_; }

  ParameterSet params;

 private:
  Linear input_;
  GRUCell gru_;
  Linear head_;
  int message_bits_;
};

// linear(in -> 64) -> ReLU -> linear(64 -> 1), with a soft-updated target copy.
class CriticNetwork {
 public:
  CriticNetwork(std::size_t input_size, std::uint64_t seed);

  Var forward(Tape& tape, Var input, bool use_target);
  std::size_t input_size() const { return hidden_.in(); }

  ParameterSet online;
  ParameterSet target;

 private:
  Linear hidden_;
  Linear out_;
};

struct ActResult {
  std::size_t action = 0;
  std::vector<int> message_bits;
  // Channel 0 is the action; channel 1 + k is message bit k.
  std::vector<double> log_probs;
  std::vector<double> entropies;
  std::vector<double> action_probs;
  std::vector<double> hidden;
};

// Throws std::invalid_argument on input or hidden length mismatch.
ActResult act(ActorNetwork& actor, std::span<const double> policy_input,
              std::span<const double> hidden, Rng& rng);

double evaluate_value(CriticNetwork& critic, std::span<const double> policy_input,
                      bool use_target);

// One synchronized rollout segment for one agent over several environments.
// Per-step vectors are indexed [env * n_steps + step].
struct TrajectoryBatch {
  int n_envs = 0;
  int n_steps = 0;
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> actions;
  std::vector<std::vector<int>> message_bits;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  // Actor hidden state at the start of the segment, per env.
  std::vector<std::vector<double>> initial_hidden;
  // Policy input following the last step, per env (unused when it is done).
  std::vector<std::vector<double>> final_inputs;

  TrajectoryBatch() = default;
  TrajectoryBatch(int envs, int steps);
  std::size_t at(int env, int step) const {
    return static_cast<std::size_t>(env * n_steps + step);
  }
};

// n-step returns over one trajectory of length T. bootstrap[t] is the value
// of the state reached after step t; it is used when a window ends at t
// without termination. A window starting at t spans min(n, T - t) steps and
// stops early at the first done.
std::vector<double> compute_returns(std::span<const double> rewards,
                                    std::span<const std::uint8_t> dones,
                                    std::span<const double> bootstrap,
                                    double gamma, int n);
// Returns for the whole batch, bootstrapping from the target critic.
std::vector<double> compute_returns(const TrajectoryBatch& batch,
                                    CriticNetwork& critic, double gamma, int n);

struct A2CLosses {
  Var actor;    // mean over samples of -(sum_c log pi_c) * A - c * sum_c H_c
  Var critic;   // mean over samples of (R - V)^2
  Var entropy;  // mean over samples of sum_c H_c
};

// Records both losses on `tape`. Hidden state is reset at episode ends and
// its gradient is cut every `bptt_steps` steps.
A2CLosses build_a2c_losses(Tape& tape, ActorNetwork& actor,
                           CriticNetwork& critic, const TrajectoryBatch& batch,
                           std::span<const double> returns,
                           double entropy_coefficient, int bptt_steps);

struct LossReport {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
};

// Computes returns, one Adam step on actor and critic, then the soft target
// update. Throws DivergenceError when a loss is not finite.
LossReport a2c_update(ActorNetwork& actor, CriticNetwork& critic,
                      const TrajectoryBatch& batch, const A2CConfig& config);

// Reward bits followed by the UES part; nullopt for Scheme::None. An empty
// UES part is zero-filled. Throws std::invalid_argument when part lengths
// disagree with `split`.
std::optional<MessageVector> assemble_message(Scheme scheme, SchemeSplit split,
                                              std::span<const int> reward_bits,
                                              std::span<const double> ues_part);

}  // namespace uesr
