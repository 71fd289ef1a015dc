#include "uesr/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace uesr {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  }
  if (!(soft_update_tau > 0.0 && soft_update_tau <= 1.0)) {
    throw std::invalid_argument("soft_update_tau must lie in (0, 1]");
  }
}

void adam_step(ParameterSet& params, const OptimizerConfig& config) {
  ++params.adam_steps;
  const double t = static_cast<double>(params.adam_steps);
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (Parameter& p : params) {
    auto& w = p.value.values;
    auto& g = p.grad.values;
    auto& m = p.m.values;
    auto& v = p.v.values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      w[i] -= config.learning_rate * (m[i] / c1) /
              (std::sqrt(v[i] / c2) + config.adam_epsilon);
      g[i] = 0.0;
    }
  }
}

void soft_update(ParameterSet& target, const ParameterSet& online, double tau) {
  if (target.size() != online.size()) {
    throw std::invalid_argument("soft_update: parameter sets differ");
  }
  for (std::size_t k = 0; k < target.size(); ++k) {
    auto& dst = target[k].value;
    const auto& src = online[k].value;
    if (dst.shape != src.shape) {
      throw std::invalid_argument("soft_update: shape mismatch for " + target[k].name);
    }
    for (std::size_t i = 0; i < dst.values.size(); ++i) {
      dst.values[i] = (1.0 - tau) * dst.values[i] + tau * src.values[i];
    }
  }
}

}  // namespace uesr
