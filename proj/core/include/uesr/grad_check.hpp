#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "uesr/autodiff.hpp"
#include "uesr/tensor.hpp"

namespace uesr {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t elements_checked = 0;

  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

// Builds a scalar loss on the given tape. Must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

// Compares the tape's gradient for every element of every listed parameter
// set with a central finite difference of step `step`. The error of one
// element is |analytic - numeric| / max(|analytic|, |numeric|, floor); the
// floor keeps near-zero gradients from being judged on round-off alone.
GradCheckReport grad_check(const LossBuilder& loss,
                           std::span<ParameterSet* const> params,
                           double step = 1e-5, double floor = 1e-3);

}  // namespace uesr
