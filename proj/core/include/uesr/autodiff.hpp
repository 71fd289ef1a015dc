#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "uesr/tensor.hpp"

namespace uesr {

struct Var {
  std::uint32_t id = 0;
};

// Reverse-mode tape over vectors. Every op evaluates eagerly; when the tape
// is recording it also stores a backward closure. Gradients w.r.t.
// parameters are accumulated into Parameter::grad by backward(), so a
// Parameter referenced by a tape must outlive the tape's backward pass.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(bool recording = true) : recording_(recording) {}

  Var constant(std::span<const double> values);
  Var constant(std::vector<double> values);
  Var scalar_constant(double value);

  std::span<const double> value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value.at(0); }
  std::size_t size(Var v) const { return nodes_[v.id].value.size(); }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Gradient buffer of a node; valid after backward().
  std::span<double> grad(Var v) { return nodes_[v.id].grad; }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  void backward(Var loss);

  bool recording() const { return recording_; }
  std::size_t node_count() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Appends a node; `backward` is dropped when not recording or when no
  // input needs a gradient.
  Var push(std::vector<double> value, bool needs_grad, Backward backward);

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    bool needs_grad = false;
    Backward backward;
  };
  bool recording_;
  std::vector<Node> nodes_;
};

namespace ad {

// W * x + b with W of shape [out, in]; `bias` may be null.
Var linear(Tape& tape, Parameter& weight, Parameter* bias, Var x);

Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, double factor);

Var relu(Tape& tape, Var a);
Var sigmoid(Tape& tape, Var a);
Var tanh(Tape& tape, Var a);
Var exp(Tape& tape, Var a);

// Numerically stabilised by max subtraction.
Var softmax(Tape& tape, Var logits);
Var log_softmax(Tape& tape, Var logits);

Var concat(Tape& tape, std::span<const Var> parts);
Var slice(Tape& tape, Var a, std::size_t offset, std::size_t length);
// Scalar element a[i].
Var pick(Tape& tape, Var a, std::size_t i);

// Value copy with no gradient path.
Var detach(Tape& tape, Var a);

// Scalar sum of all elements.
Var sum(Tape& tape, Var a);
// Scalar sum of scalar nodes, each multiplied by its weight.
Var weighted_sum(Tape& tape, std::span<const Var> scalars,
                 std::span<const double> weights);
// Scalar sum(a .* b).
Var dot(Tape& tape, Var a, Var b);
// sqrt(sum(a^2) + eps): the L2 norm, smoothed at zero.
Var l2_norm(Tape& tape, Var a, double eps = 1e-8);
// Scalar sum(a^2).
Var sum_squares(Tape& tape, Var a);

}  // namespace ad
}  // namespace uesr
