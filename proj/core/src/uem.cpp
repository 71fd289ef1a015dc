#include "uesr/uem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uesr/actor_critic.hpp"
#include "uesr/warehouse.hpp"

namespace uesr {

UnexpectednessModule::UnexpectednessModule(std::size_t observation_size,
                                           std::size_t inbox_size, int ues_len,
                                           std::uint64_t seed)
    : inbox_size_(inbox_size), ues_len_(ues_len) {
  if (ues_len <= 0) throw std::invalid_argument("ues_len must be positive");
  Rng rng(seed);
  g_ = Linear(projection, "uem.g", observation_size, kEmbeddingSize, rng);
  // The projection has no offset: a zero observation embeds to zero.
  auto& g_bias = projection[g_.bias_index()].value.values;
  std::fill(g_bias.begin(), g_bias.end(), 0.0);
  const std::size_t f_in = kEmbeddingSize + kNumActions + inbox_size;
  f1_ = Linear(dynamics, "uem.f1", f_in, kEmbeddingSize, rng);
  f2_ = Linear(dynamics, "uem.f2", kEmbeddingSize, kEmbeddingSize, rng);
  enc_ = Linear(autoencoder, "uem.enc", kEmbeddingSize,
                static_cast<std::size_t>(ues_len), rng);
  dec_ = Linear(autoencoder, "uem.dec", static_cast<std::size_t>(ues_len),
                kEmbeddingSize, rng);
}

Var UnexpectednessModule::embed(Tape& tape, Var observation) {
  if (tape.size(observation) != g_.in()) {
    throw std::invalid_argument("observation length mismatch");
  }
  return ad::relu(tape, g_(tape, projection, observation));
}

Var UnexpectednessModule::predict(Tape& tape, Var prev_embedding,
                                  std::size_t prev_action, Var inbox) {
  if (tape.size(prev_embedding) != kEmbeddingSize || tape.size(inbox) != inbox_size_ ||
      prev_action >= static_cast<std::size_t>(kNumActions)) {
    throw std::invalid_argument("dynamics input mismatch");
  }
  std::vector<double> one_hot(kNumActions, 0.0);
  one_hot[prev_action] = 1.0;
  const Var parts[3] = {prev_embedding, tape.constant(std::move(one_hot)), inbox};
  const Var in = ad::concat(tape, parts);
  return ad::relu(tape, f2_(tape, dynamics, ad::relu(tape, f1_(tape, dynamics, in))));
}

std::vector<double> UnexpectednessModule::embed(std::span<const double> observation) {
  Tape tape(false);
  const auto v = tape.value(embed(tape, tape.constant(observation)));
  return {v.begin(), v.end()};
}

std::vector<double> UnexpectednessModule::predict(std::span<const double> prev_embedding,
                                                  std::size_t prev_action,
                                                  std::span<const double> inbox) {
  Tape tape(false);
  const auto v = tape.value(
      predict(tape, tape.constant(prev_embedding), prev_action, tape.constant(inbox)));
  return {v.begin(), v.end()};
}

std::vector<double> UnexpectednessModule::unexpectedness(
    std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw std::invalid_argument("unexpectedness operand size mismatch");
  }
  std::vector<double> x(predicted.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = predicted[i] - actual[i];
  return x;
}

std::vector<double> UnexpectednessModule::encode_message(std::span<const double> x) {
  Tape tape(false);
  const auto v = tape.value(ad::sigmoid(tape, enc_(tape, autoencoder, tape.constant(x))));
  return {v.begin(), v.end()};
}

std::vector<double> UnexpectednessModule::decode(std::span<const double> message) {
  Tape tape(false);
  const auto v = tape.value(dec_(tape, autoencoder, tape.constant(message)));
  return {v.begin(), v.end()};
}

std::vector<double> UnexpectednessModule::message_for(const UEMSample& s) {
  const auto predicted = predict(embed(s.prev_observation), s.prev_action, s.inbox);
  return encode_message(unexpectedness(predicted, embed(s.observation)));
}

Var UnexpectednessModule::unexpectedness(Tape& tape, const UEMSample& s) {
  // g is evaluated off-tape so no gradient can reach it.
  const Var prev = tape.constant(embed(s.prev_observation));
  const Var actual = tape.constant(embed(s.observation));
  const Var predicted = predict(tape, prev, s.prev_action, tape.constant(s.inbox));
  return ad::sub(tape, predicted, actual);
}

Var UnexpectednessModule::prediction_loss(Tape& tape, const UEMSample& s) {
  return ad::l2_norm(tape, unexpectedness(tape, s));
}

Var UnexpectednessModule::encoding_loss(Tape& tape, std::span<const double> x) {
  const Var xv = tape.constant(x);
  const Var m = ad::sigmoid(tape, enc_(tape, autoencoder, xv));
  return ad::l2_norm(tape, ad::sub(tape, dec_(tape, autoencoder, m), xv));
}

UEMLosses UnexpectednessModule::update(std::span<const UEMSample> batch,
                                       const OptimizerConfig& config) {
  if (batch.empty()) return {};
  const double inv = 1.0 / static_cast<double>(batch.size());
  UEMLosses out;

  std::vector<std::vector<double>> xs;
  xs.reserve(batch.size());
  {
    Tape tape(true);
    std::vector<Var> terms;
    for (const UEMSample& s : batch) {
      const Var x = unexpectedness(tape, s);
      terms.push_back(ad::l2_norm(tape, x));
      const auto xv = tape.value(x);
      xs.emplace_back(xv.begin(), xv.end());
    }
    const Var mean = ad::weighted_sum(tape, terms, std::vector<double>(terms.size(), inv));
    out.prediction = tape.scalar(mean);
    if (!std::isfinite(out.prediction)) throw DivergenceError("prediction loss is not finite");
    dynamics.zero_grad();
    tape.backward(mean);
    adam_step(dynamics, config);
  }
  {
    Tape tape(true);
    std::vector<Var> terms;
    for (const auto& x : xs) terms.push_back(encoding_loss(tape, x));
    const Var mean = ad::weighted_sum(tape, terms, std::vector<double>(terms.size(), inv));
    out.encoding = tape.scalar(mean);
    if (!std::isfinite(out.encoding)) throw DivergenceError("encoding loss is not finite");
    autoencoder.zero_grad();
    tape.backward(mean);
    adam_step(autoencoder, config);
  }
  return out;
}

}  // namespace uesr
