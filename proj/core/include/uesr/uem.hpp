#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uesr/autodiff.hpp"
#include "uesr/layers.hpp"
#include "uesr/optim.hpp"
#include "uesr/tensor.hpp"

namespace uesr {

inline constexpr std::size_t kEmbeddingSize = 64;

// One hindsight-prediction example: the previous observation and action,
// the other agents' messages that preceded them, and the observation that
// actually followed.
struct UEMSample {
  std::vector<double> prev_observation;
  std::size_t prev_action = 0;
  std::vector<double> inbox;
  std::vector<double> observation;
};

struct UEMLosses {
  double prediction = 0.0;  // mean ||f(g(o'), a', m'') - g(o)||
  double encoding = 0.0;    // mean ||Dec(Enc(x)) - x||
};

// Unexpectedness encoding module:
//   g   frozen random projection, ReLU(W_g o), never trained
//   f   forward dynamics, [g(o_prev), onehot(a_prev), inbox] -> 64 -> 64, ReLU
//   Enc sigmoid(linear(64 -> ues_len)),  Dec linear(ues_len -> 64)
// The unexpectedness is x = f(...) - g(o). The prediction loss trains f only
// and the reconstruction loss trains Enc/Dec only; x is a constant for the
// latter.
class UnexpectednessModule {
 public:
  UnexpectednessModule(std::size_t observation_size, std::size_t inbox_size,
                       int ues_len, std::uint64_t seed);

  std::vector<double> embed(std::span<const double> observation);
  std::vector<double> predict(std::span<const double> prev_embedding,
                              std::size_t prev_action,
                              std::span<const double> inbox);
  static std::vector<double> unexpectedness(std::span<const double> predicted,
                                            std::span<const double> actual);
  std::vector<double> encode_message(std::span<const double> x);
  std::vector<double> decode(std::span<const double> message);

  // UES message for the step whose observation is `observation`.
  std::vector<double> message_for(const UEMSample& sample);

  // Tape builders, exposed for gradient checks.
  Var embed(Tape& tape, Var observation);
  Var predict(Tape& tape, Var prev_embedding, std::size_t prev_action, Var inbox);
  Var unexpectedness(Tape& tape, const UEMSample& sample);
  Var prediction_loss(Tape& tape, const UEMSample& sample);
  Var encoding_loss(Tape& tape, std::span<const double> x);

  // One Adam step on f from the mean prediction loss, then one on Enc/Dec
  // from the mean reconstruction loss of the (pre-update) unexpectedness.
  // Throws DivergenceError on a non-finite loss.
  UEMLosses update(std::span<const UEMSample> batch, const OptimizerConfig& config);

  std::size_t observation_size() const { return g_.in(); }
  std::size_t inbox_size() const { return inbox_size_; }
  int ues_len() const { return ues_len_; }

  ParameterSet projection;   // g, frozen
  ParameterSet dynamics;     // f
  ParameterSet autoencoder;  // Enc, Dec

 private:
  Linear g_;
  Linear f1_;
  Linear f2_;
  Linear enc_;
  Linear dec_;
  std::size_t inbox_size_;
  int ues_len_;
};

}  // namespace uesr
