#include "uesr/actor_critic.hpp"

#include <cmath>
#include <numeric>

#include "uesr/warehouse.hpp"

namespace uesr {

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::None:
      return "ia2c";
    case Scheme::R:
      return "m_r";
    case Scheme::UES:
      return "m_ues";
    case Scheme::UES_R:
      return "m_ues_r";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "ia2c") return Scheme::None;
  if (name == "m_r") return Scheme::R;
  if (name == "m_ues") return Scheme::UES;
  if (name == "m_ues_r") return Scheme::UES_R;
  throw std::invalid_argument("unknown scheme: " + std::string(name));
}

SchemeSplit default_split(Scheme scheme) {
  switch (scheme) {
    case Scheme::None:
      return {0, 0};
    case Scheme::R:
      return {kDefaultMessageLength, 0};
    case Scheme::UES:
      return {0, kDefaultMessageLength};
    case Scheme::UES_R:
      return {kDefaultMessageLength / 2, kDefaultMessageLength / 2};
  }
  return {};
}

A2CConfig A2CConfig::defaults(Scheme scheme) {
  A2CConfig c;
  c.scheme = scheme;
  c.optimizer.learning_rate = scheme == Scheme::UES ? 1e-3 : 5e-4;
  c.entropy_coefficient = scheme == Scheme::UES_R ? 0.05 : 0.01;
  return c;
}

void A2CConfig::validate() const {
  optimizer.validate();
  if (!(entropy_coefficient >= 0.0)) {
    throw std::invalid_argument("entropy_coefficient must be >= 0");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (n_steps <= 0) throw std::invalid_argument("n_steps must be positive");
  if (batch_envs <= 0) throw std::invalid_argument("batch_envs must be positive");
}

ActorNetwork::ActorNetwork(std::size_t input_size, int message_bits,
                           std::uint64_t seed)
    : message_bits_(message_bits) {
  if (message_bits < 0) throw std::invalid_argument("negative message bit count");
  Rng rng(seed);
  input_ = Linear(params, "actor.input", input_size, kHiddenSize, rng);
  gru_ = GRUCell(params, "actor.gru", kHiddenSize, kHiddenSize, rng);
  head_ = Linear(params, "actor.head", kHiddenSize,
                 static_cast<std::size_t>(kNumActions + 2 * message_bits), rng);
}

ActorNetwork::Output ActorNetwork::forward(Tape& tape, Var input, Var hidden) {
  const Var x = ad::relu(tape, input_(tape, params, input));
  const Var h = gru_(tape, params, x, hidden);
  return {head_(tape, params, ad::relu(tape, h)), h};
}

CriticNetwork::CriticNetwork(std::size_t input_size, std::uint64_t seed) {
  Rng rng(seed);
  hidden_ = Linear(online, "critic.hidden", input_size, kHiddenSize, rng);
  out_ = Linear(online, "critic.out", kHiddenSize, 1, rng);
  target = online;
}

Var CriticNetwork::forward(Tape& tape, Var input, bool use_target) {
  ParameterSet& p = use_target ? target : online;
  return out_(tape, p, ad::relu(tape, hidden_(tape, p, input)));
}

ActResult act(ActorNetwork& actor, std::span<const double> policy_input,
              std::span<const double> hidden, Rng& rng) {
  if (policy_input.size() != actor.input_size()) {
    throw std::invalid_argument("policy input length mismatch");
  }
  if (hidden.size() != kHiddenSize) throw std::invalid_argument("hidden size mismatch");
  Tape tape(false);
  const auto out = actor.forward(tape, tape.constant(policy_input), tape.constant(hidden));
  const Var probs = ad::softmax(tape, ad::slice(tape, out.logits, 0, kNumActions));

  ActResult r;
  const auto p = tape.value(probs);
  r.action_probs.assign(p.begin(), p.end());
  const auto a = sample_categorical(r.action_probs, rng);
  r.action = a.index;
  r.log_probs.push_back(a.log_prob);
  r.entropies.push_back(a.entropy);

  if (actor.message_bits() > 0) {
    std::vector<double> p_one;
    for (int k = 0; k < actor.message_bits(); ++k) {
      const Var pk = ad::softmax(
          tape, ad::slice(tape, out.logits,
                          static_cast<std::size_t>(kNumActions + 2 * k), 2));
      p_one.push_back(tape.value(pk)[1]);
    }
    auto bits = sample_bernoulli(p_one, rng);
    r.message_bits = std::move(bits.bits);
    r.log_probs.insert(r.log_probs.end(), bits.log_probs.begin(), bits.log_probs.end());
    r.entropies.insert(r.entropies.end(), bits.entropies.begin(), bits.entropies.end());
  }
  const auto h = tape.value(out.hidden);
  r.hidden.assign(h.begin(), h.end());
  return r;
}

double evaluate_value(CriticNetwork& critic, std::span<const double> policy_input,
                      bool use_target) {
  if (policy_input.size() != critic.input_size()) {
    throw std::invalid_argument("critic input length mismatch");
  }
  Tape tape(false);
  return tape.scalar(critic.forward(tape, tape.constant(policy_input), use_target));
}

TrajectoryBatch::TrajectoryBatch(int envs, int steps) : n_envs(envs), n_steps(steps) {
  const auto n = static_cast<std::size_t>(envs * steps);
  inputs.resize(n);
  actions.resize(n);
  message_bits.resize(n);
  rewards.resize(n);
  dones.resize(n);
  initial_hidden.assign(static_cast<std::size_t>(envs),
                        std::vector<double>(kHiddenSize, 0.0));
  final_inputs.resize(static_cast<std::size_t>(envs));
}

std::vector<double> compute_returns(std::span<const double> rewards,
                                    std::span<const std::uint8_t> dones,
                                    std::span<const double> bootstrap,
                                    double gamma, int n) {
  const std::size_t T = rewards.size();
  if (dones.size() != T || bootstrap.size() != T || n <= 0) {
    throw std::invalid_argument("compute_returns: inconsistent lengths");
  }
  std::vector<double> out(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t end = std::min(T, t + static_cast<std::size_t>(n));
    double ret = 0.0;
    double discount = 1.0;
    bool terminated = false;
    std::size_t k = t;
    for (; k < end; ++k) {
      ret += discount * rewards[k];
      discount *= gamma;
      if (dones[k]) {
        terminated = true;
        break;
      }
    }
    if (!terminated) ret += discount * bootstrap[end - 1];
    out[t] = ret;
  }
  return out;
}

std::vector<double> compute_returns(const TrajectoryBatch& batch,
                                    CriticNetwork& critic, double gamma, int n) {
  std::vector<double> returns;
  returns.reserve(batch.rewards.size());
  const auto T = static_cast<std::size_t>(batch.n_steps);
  for (int e = 0; e < batch.n_envs; ++e) {
    const std::size_t base = batch.at(e, 0);
    std::vector<double> bootstrap(T, 0.0);
    // Only window ends are read; each is the state after that step.
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t end = std::min(T, t + static_cast<std::size_t>(n)) - 1;
      if (batch.dones[base + end] || bootstrap[end] != 0.0) continue;
      const auto& next = end + 1 < T ? batch.inputs[base + end + 1]
                                     : batch.final_inputs[static_cast<std::size_t>(e)];
      bootstrap[end] = evaluate_value(critic, next, true);
    }
    const auto r = compute_returns(
        std::span(batch.rewards).subspan(base, T),
        std::span(batch.dones).subspan(base, T), bootstrap, gamma, n);
    returns.insert(returns.end(), r.begin(), r.end());
  }
  return returns;
}

A2CLosses build_a2c_losses(Tape& tape, ActorNetwork& actor,
                           CriticNetwork& critic, const TrajectoryBatch& batch,
                           std::span<const double> returns,
                           double entropy_coefficient, int bptt_steps) {
  const std::size_t samples = batch.inputs.size();
  if (returns.size() != samples || samples == 0) {
    throw std::invalid_argument("build_a2c_losses: one return per sample");
  }
  const double inv = 1.0 / static_cast<double>(samples);
  std::vector<Var> actor_terms, critic_terms, entropy_terms;
  std::vector<double> actor_w, critic_w, entropy_w;
  const std::vector<double> zeros(kHiddenSize, 0.0);

  for (int e = 0; e < batch.n_envs; ++e) {
    Var h = tape.constant(batch.initial_hidden[static_cast<std::size_t>(e)]);
    for (int t = 0; t < batch.n_steps; ++t) {
      const std::size_t i = batch.at(e, t);
      if (t > 0 && t % bptt_steps == 0) h = ad::detach(tape, h);
      const Var x = tape.constant(batch.inputs[i]);
      const auto out = actor.forward(tape, x, h);
      const Var value = critic.forward(tape, x, false);
      const double advantage = returns[i] - tape.scalar(value);

      auto channel = [&](std::size_t offset, std::size_t width, std::size_t chosen) {
        const Var lp = ad::log_softmax(tape, ad::slice(tape, out.logits, offset, width));
        const Var h_c = ad::scale(tape, ad::dot(tape, ad::exp(tape, lp), lp), -1.0);
        actor_terms.push_back(ad::pick(tape, lp, chosen));
        actor_w.push_back(-advantage * inv);
        actor_terms.push_back(h_c);
        actor_w.push_back(-entropy_coefficient * inv);
        entropy_terms.push_back(h_c);
        entropy_w.push_back(inv);
      };
      channel(0, kNumActions, batch.actions[i]);
      for (int k = 0; k < actor.message_bits(); ++k) {
        channel(static_cast<std::size_t>(kNumActions + 2 * k), 2,
                static_cast<std::size_t>(batch.message_bits[i][static_cast<std::size_t>(k)]));
      }
      critic_terms.push_back(
          ad::sum_squares(tape, ad::sub(tape, tape.scalar_constant(returns[i]), value)));
      critic_w.push_back(inv);

      h = batch.dones[i] ? tape.constant(zeros) : out.hidden;
    }
  }
  return {ad::weighted_sum(tape, actor_terms, actor_w),
          ad::weighted_sum(tape, critic_terms, critic_w),
          ad::weighted_sum(tape, entropy_terms, entropy_w)};
}

LossReport a2c_update(ActorNetwork& actor, CriticNetwork& critic,
                      const TrajectoryBatch& batch, const A2CConfig& config) {
  const auto returns = compute_returns(batch, critic, config.gamma, config.n_steps);
  Tape tape(true);
  const auto losses = build_a2c_losses(tape, actor, critic, batch, returns,
                                       config.entropy_coefficient, config.n_steps);
  LossReport report{tape.scalar(losses.actor), tape.scalar(losses.critic),
                    tape.scalar(losses.entropy)};
  if (!std::isfinite(report.actor_loss) || !std::isfinite(report.critic_loss)) {
    throw DivergenceError("a2c loss is not finite");
  }
  const Var total = ad::weighted_sum(tape, std::vector<Var>{losses.actor, losses.critic},
                                     std::vector<double>{1.0, 1.0});
  actor.params.zero_grad();
  critic.online.zero_grad();
  tape.backward(total);
  adam_step(actor.params, config.optimizer);
  adam_step(critic.online, config.optimizer);
  soft_update(critic.target, critic.online, config.optimizer.soft_update_tau);
  return report;
}

std::optional<MessageVector> assemble_message(Scheme scheme, SchemeSplit split,
                                              std::span<const int> reward_bits,
                                              std::span<const double> ues_part) {
  if (scheme == Scheme::None) return std::nullopt;
  if (static_cast<int>(reward_bits.size()) != split.reward_len) {
    throw std::invalid_argument("reward bit count does not match the scheme split");
  }
  if (!ues_part.empty() && static_cast<int>(ues_part.size()) != split.ues_len) {
    throw std::invalid_argument("UES part length does not match the scheme split");
  }
  MessageVector m;
  m.split = split;
  m.values.reserve(static_cast<std::size_t>(split.total()));
  for (int b : reward_bits) m.values.push_back(static_cast<double>(b));
  if (ues_part.empty()) {
    m.values.resize(static_cast<std::size_t>(split.total()), 0.0);
  } else {
    m.values.insert(m.values.end(), ues_part.begin(), ues_part.end());
  }
  if (!m.valid()) throw std::invalid_argument("message values out of range");
  return m;
}

}  // namespace uesr
