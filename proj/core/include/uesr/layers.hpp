#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uesr/autodiff.hpp"
#include "uesr/rng.hpp"
#include "uesr/tensor.hpp"

namespace uesr {

// Dense layer whose weight and bias live in a ParameterSet under
// "<prefix>.weight" / "<prefix>.bias".
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& prefix, std::size_t in,
         std::size_t out, Rng& init_rng);

  Var operator()(Tape& tape, ParameterSet& params, Var x) const;

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  std::size_t weight_index() const { return weight_; }
  std::size_t bias_index() const { return bias_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::size_t weight_ = 0;
  std::size_t bias_ = 0;
};

// Gated recurrent unit with the gate convention
//   z  = sigmoid(W_z x + U_z h + b_z)
//   r  = sigmoid(W_r x + U_r h + b_r)
//   n  = tanh(W_n x + U_n (r * h) + b_n)
//   h' = (1 - z) * n + z * h
class GRUCell {
 public:
  GRUCell() = default;
  GRUCell(ParameterSet& params, const std::string& prefix, std::size_t in,
          std::size_t hidden, Rng& init_rng);

  Var operator()(Tape& tape, ParameterSet& params, Var x, Var h) const;

  std::size_t in() const { return in_; }
  std::size_t hidden() const { return hidden_; }

 private:
  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
  // W_z, W_r, W_n, U_z, U_r, U_n, b_z, b_r, b_n
  std::size_t idx_[9] = {};
};

struct CategoricalSample {
  std::size_t index = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
};

struct BernoulliSample {
  std::vector<int> bits;
  std::vector<double> log_probs;
  std::vector<double> entropies;
};

// Throws std::invalid_argument when probabilities are negative or do not sum
// to one within 1e-9.
CategoricalSample sample_categorical(std::span<const double> probabilities,
                                     Rng& rng);
// Independent bits with P(bit_k = 1) = p[k]; throws for p outside [0,1].
BernoulliSample sample_bernoulli(std::span<const double> p, Rng& rng);

double categorical_entropy(std::span<const double> probabilities);

}  // namespace uesr
