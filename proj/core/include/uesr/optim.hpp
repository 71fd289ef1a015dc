#pragma once

#include "uesr/tensor.hpp"

namespace uesr {

struct OptimizerConfig {
  double learning_rate = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  double adam_epsilon = 1e-5;
  double soft_update_tau = 0.01;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

// One bias-corrected Adam step over every parameter, then zeroes gradients.
void adam_step(ParameterSet& params, const OptimizerConfig& config);

// target <- (1 - tau) * target + tau * online, parameter by parameter.
void soft_update(ParameterSet& target, const ParameterSet& online, double tau);

}  // namespace uesr
