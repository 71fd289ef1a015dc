#include "uesr/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace uesr {

namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape(false);
  return tape.scalar(loss(tape));
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss,
                           std::span<ParameterSet* const> params, double step,
                           double floor) {
  for (ParameterSet* set : params) set->zero_grad();
  {
    Tape tape(true);
    tape.backward(loss(tape));
  }
  std::vector<std::vector<Tensor>> analytic;
  for (ParameterSet* set : params) {
    std::vector<Tensor> grads;
    for (const Parameter& p : *set) grads.push_back(p.grad);
    analytic.push_back(std::move(grads));
    set->zero_grad();
  }

  GradCheckReport report;
  for (std::size_t s = 0; s < params.size(); ++s) {
    ParameterSet& set = *params[s];
    for (std::size_t k = 0; k < set.size(); ++k) {
      auto& w = set[k].value.values;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double saved = w[i];
        w[i] = saved + step;
        const double up = evaluate(loss);
        w[i] = saved - step;
        const double down = evaluate(loss);
        w[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic[s][k].values[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), floor});
        const double err = std::abs(a - numeric) / denom;
        ++report.elements_checked;
        if (err > report.max_relative_error || std::isnan(err)) {
          report.max_relative_error = std::isnan(err) ? INFINITY : err;
          report.worst_parameter = set[k].name;
          report.worst_index = i;
        }
      }
    }
  }
  return report;
}

}  // namespace uesr
