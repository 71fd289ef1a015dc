#include "uesr/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace uesr {

Linear::Linear(ParameterSet& params, const std::string& prefix, std::size_t in,
               std::size_t out, Rng& init_rng)
    : in_(in), out_(out) {
  weight_ = params.add(prefix + ".weight", {out, in});
  bias_ = params.add(prefix + ".bias", {out});
  init_uniform(params[weight_], in, init_rng);
  init_uniform(params[bias_], in, init_rng);
}

Var Linear::operator()(Tape& tape, ParameterSet& params, Var x) const {
  return ad::linear(tape, params[weight_], &params[bias_], x);
}

GRUCell::GRUCell(ParameterSet& params, const std::string& prefix,
                 std::size_t in, std::size_t hidden, Rng& init_rng)
    : in_(in), hidden_(hidden) {
  static constexpr const char* kNames[9] = {"W_z", "W_r", "W_n", "U_z", "U_r",
                                            "U_n", "b_z", "b_r", "b_n"};
  for (int k = 0; k < 9; ++k) {
    std::vector<std::size_t> shape;
    if (k < 3) {
      shape = {hidden, in};
    } else if (k < 6) {
      shape = {hidden, hidden};
    } else {
      shape = {hidden};
    }
    idx_[k] = params.add(prefix + "." + kNames[k], shape);
    init_uniform(params[idx_[k]], hidden, init_rng);
  }
}

Var GRUCell::operator()(Tape& tape, ParameterSet& params, Var x, Var h) const {
  if (tape.size(x) != in_ || tape.size(h) != hidden_) {
    throw std::invalid_argument("gru: input or hidden size mismatch");
  }
  auto gate = [&](int w, int u, int b) {
    return ad::add(tape, ad::linear(tape, params[idx_[w]], &params[idx_[b]], x),
                   ad::linear(tape, params[idx_[u]], nullptr, h));
  };
  const Var z = ad::sigmoid(tape, gate(0, 3, 6));
  const Var r = ad::sigmoid(tape, gate(1, 4, 7));
  const Var rh = ad::mul(tape, r, h);
  const Var n = ad::tanh(
      tape, ad::add(tape, ad::linear(tape, params[idx_[2]], &params[idx_[8]], x),
                    ad::linear(tape, params[idx_[5]], nullptr, rh)));
  // (1 - z) * n + z * h  ==  n + z * (h - n)
  return ad::add(tape, n, ad::mul(tape, z, ad::sub(tape, h, n)));
}

double categorical_entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

CategoricalSample sample_categorical(std::span<const double> probabilities,
                                     Rng& rng) {
  if (probabilities.empty()) throw std::invalid_argument("empty distribution");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw std::invalid_argument("negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("probabilities are not normalized");
  }
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  std::size_t index = probabilities.size() - 1;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc && probabilities[i] > 0.0) {
      index = i;
      break;
    }
  }
  // Guard the rounding tail: never return a zero-probability index.
  while (probabilities[index] == 0.0 && index > 0) --index;
  return {index, std::log(probabilities[index]), categorical_entropy(probabilities)};
}

BernoulliSample sample_bernoulli(std::span<const double> p, Rng& rng) {
  BernoulliSample out;
  out.bits.reserve(p.size());
  for (double pk : p) {
    if (!(pk >= 0.0 && pk <= 1.0)) {
      throw std::invalid_argument("bernoulli probability outside [0,1]");
    }
    const int bit = rng.uniform01() < pk ? 1 : 0;
    const double q = bit ? pk : 1.0 - pk;
    out.bits.push_back(bit);
    out.log_probs.push_back(std::log(q));
    const double probs[2] = {1.0 - pk, pk};
    out.entropies.push_back(categorical_entropy(probs));
  }
  return out;
}

}  // namespace uesr
