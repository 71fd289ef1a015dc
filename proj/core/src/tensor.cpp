#include "uesr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace uesr {

std::size_t shape_size(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : shape(std::move(dims)), values(shape_size(shape), fill) {}

Parameter::Parameter(std::string n, std::vector<std::size_t> shape)
    : name(std::move(n)), value(shape), grad(shape), m(shape), v(shape) {}

std::size_t ParameterSet::add(std::string name, std::vector<std::size_t> shape) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  params_.emplace_back(std::move(name), std::move(shape));
  return params_.size() - 1;
}

Parameter& ParameterSet::at(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named " + std::string(name));
}

const Parameter& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParameterSet::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.values.begin(), p.grad.values.end(), 0.0);
}

void init_uniform(Parameter& p, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double& w : p.value.values) w = rng.uniform(-bound, bound);
}

}  // namespace uesr
