#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uesr/rng.hpp"

namespace uesr {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  bool operator==(const Tensor&) const = default;
};

std::size_t shape_size(std::span<const std::size_t> shape);

// A trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;

  Parameter(std::string n, std::vector<std::size_t> shape);
  bool operator==(const Parameter&) const = default;
};

// Named parameters in insertion order. Indices returned by add() stay valid
// for the lifetime of the set, including across copies.
class ParameterSet {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  // Throws std::out_of_range for unknown names.
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Total scalar count over all parameters.
  std::size_t numel() const;
  void zero_grad();

  std::int64_t adam_steps = 0;

  bool operator==(const ParameterSet&) const = default;

 private:
  std::vector<Parameter> params_;
};

// Uniform in +-1/sqrt(fan_in). Biases use the fan-in of their layer.
void init_uniform(Parameter& p, std::size_t fan_in, Rng& rng);

}  // namespace uesr
