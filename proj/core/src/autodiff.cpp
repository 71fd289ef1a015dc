#include "uesr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uesr {

Var Tape::constant(std::span<const double> values) {
  return push(std::vector<double>(values.begin(), values.end()), false, nullptr);
}

Var Tape::constant(std::vector<double> values) {
  return push(std::move(values), false, nullptr);
}

Var Tape::scalar_constant(double value) {
  return push(std::vector<double>{value}, false, nullptr);
}

Var Tape::push(std::vector<double> value, bool needs_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = recording_ && needs_grad;
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
  if (!recording_) throw std::logic_error("backward on a non-recording tape");
  if (nodes_.at(loss.id).value.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss");
  }
  for (std::uint32_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.needs_grad) n.grad.assign(n.value.size(), 0.0);
  }
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

namespace ad {

namespace {

void check_same_size(const Tape& t, Var a, Var b) {
  if (t.size(a) != t.size(b)) throw std::invalid_argument("operand size mismatch");
}

// Elementwise unary op with derivative expressed through input and output.
template <typename F, typename D>
Var unary(Tape& t, Var a, F f, D dfdx) {
  auto in = t.value(a);
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), f);
  return t.push(std::move(out), t.needs_grad(a), [a, dfdx](Tape& tp, std::uint32_t self) {
    auto g = tp.grad(Var{self});
    auto x = tp.value(a);
    auto y = tp.value(Var{self});
    auto ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(x[i], y[i]);
  });
}

}  // namespace

Var linear(Tape& t, Parameter& weight, Parameter* bias, Var x) {
  const std::size_t rows = weight.value.rows();
  const std::size_t cols = weight.value.cols();
  if (weight.value.shape.size() != 2 || t.size(x) != cols) {
    throw std::invalid_argument("linear: input length does not match weight columns");
  }
  if (bias && bias->value.size() != rows) {
    throw std::invalid_argument("linear: bias length does not match weight rows");
  }
  auto in = t.value(x);
  std::vector<double> out(rows);
  const double* w = weight.value.values.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias ? bias->value.values[r] : 0.0;
    const double* wr = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * in[c];
    out[r] = acc;
  }
  Parameter* wp = &weight;
  return t.push(std::move(out), true, [wp, bias, x](Tape& tp, std::uint32_t self) {
    auto g = tp.grad(Var{self});
    auto in = tp.value(x);
    const std::size_t rows = wp->value.rows();
    const std::size_t cols = wp->value.cols();
    double* gw = wp->grad.values.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      double* gwr = gw + r * cols;
      for (std::size_t c = 0; c < cols; ++c) gwr[c] += gr * in[c];
    }
    if (bias) {
      for (std::size_t r = 0; r < rows; ++r) bias->grad.values[r] += g[r];
    }
    if (tp.needs_grad(x)) {
      auto gx = tp.grad(x);
      const double* w = wp->value.values.data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        const double* wr = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) gx[c] += gr * wr[c];
      }
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  check_same_size(t, a, b);
  auto va = t.value(a);
  auto vb = t.value(b);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  return t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b),
                [a, b](Tape& tp, std::uint32_t self) {
                  auto g = tp.grad(Var{self});
                  if (tp.needs_grad(a)) {
                    auto ga = tp.grad(a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  }
                  if (tp.needs_grad(b)) {
                    auto gb = tp.grad(b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                  }
                });
}

Var sub(Tape& t, Var a, Var b) {
  check_same_size(t, a, b);
  auto va = t.value(a);
  auto vb = t.value(b);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  return t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b),
                [a, b](Tape& tp, std::uint32_t self) {
                  auto g = tp.grad(Var{self});
                  if (tp.needs_grad(a)) {
                    auto ga = tp.grad(a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  }
                  if (tp.needs_grad(b)) {
                    auto gb = tp.grad(b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                  }
                });
}

Var mul(Tape& t, Var a, Var b) {
  check_same_size(t, a, b);
  auto va = t.value(a);
  auto vb = t.value(b);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b),
                [a, b](Tape& tp, std::uint32_t self) {
                  auto g = tp.grad(Var{self});
                  auto va = tp.value(a);
                  auto vb = tp.value(b);
                  if (tp.needs_grad(a)) {
                    auto ga = tp.grad(a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
                  }
                  if (tp.needs_grad(b)) {
                    auto gb = tp.grad(b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
                  }
                });
}

Var scale(Tape& t, Var a, double factor) {
  return unary(
      t, a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var relu(Tape& t, Var a) {
  return unary(
      t, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Tape& t, Var a) {
  return unary(
      t, a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Tape& t, Var a) {
  return unary(
      t, a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var exp(Tape& t, Var a) {
  return unary(
      t, a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var softmax(Tape& t, Var logits) {
  auto in = t.value(logits);
  if (in.empty()) throw std::invalid_argument("softmax of empty vector");
  const double mx = *std::max_element(in.begin(), in.end());
  std::vector<double> out(in.size());
  double z = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) z += out[i] = std::exp(in[i] - mx);
  for (double& p : out) p /= z;
  return t.push(std::move(out), t.needs_grad(logits),
                [logits](Tape& tp, std::uint32_t self) {
                  auto g = tp.grad(Var{self});
                  auto p = tp.value(Var{self});
                  double gp = 0.0;
                  for (std::size_t i = 0; i < g.size(); ++i) gp += g[i] * p[i];
                  auto gl = tp.grad(logits);
                  for (std::size_t i = 0; i < g.size(); ++i) gl[i] += p[i] * (g[i] - gp);
                });
}

Var log_softmax(Tape& t, Var logits) {
  auto in = t.value(logits);
  if (in.empty()) throw std::invalid_argument("log_softmax of empty vector");
  const double mx = *std::max_element(in.begin(), in.end());
  double z = 0.0;
  for (double x : in) z += std::exp(x - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] - lse;
  return t.push(std::move(out), t.needs_grad(logits),
                [logits](Tape& tp, std::uint32_t self) {
                  auto g = tp.grad(Var{self});
                  auto lp = tp.value(Var{self});
                  double gs = 0.0;
                  for (double gi : g) gs += gi;
                  auto gl = tp.grad(logits);
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    gl[i] += g[i] - std::exp(lp[i]) * gs;
                  }
                });
}

Var concat(Tape& t, std::span<const Var> parts) {
  std::vector<double> out;
  bool needs = false;
  for (Var p : parts) {
    auto v = t.value(p);
    out.insert(out.end(), v.begin(), v.end());
    needs = needs || t.needs_grad(p);
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return t.push(std::move(out), needs, [ids](Tape& tp, std::uint32_t self) {
    auto g = tp.grad(Var{self});
    std::size_t offset = 0;
    for (Var p : ids) {
      const std::size_t n = tp.size(p);
      if (tp.needs_grad(p)) {
        auto gp = tp.grad(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

Var slice(Tape& t, Var a, std::size_t offset, std::size_t length) {
  auto in = t.value(a);
  if (offset + length > in.size()) throw std::out_of_range("slice out of range");
  std::vector<double> out(in.begin() + static_cast<std::ptrdiff_t>(offset),
                          in.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return t.push(std::move(out), t.needs_grad(a),
                [a, offset](Tape& tp, std::uint32_t self) {
                  auto g = tp.grad(Var{self});
                  auto ga = tp.grad(a);
                  for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
                });
}

Var pick(Tape& t, Var a, std::size_t i) { return slice(t, a, i, 1); }

Var detach(Tape& t, Var a) { return t.constant(t.value(a)); }

Var sum(Tape& t, Var a) {
  auto in = t.value(a);
  double s = 0.0;
  for (double x : in) s += x;
  return t.push({s}, t.needs_grad(a), [a](Tape& tp, std::uint32_t self) {
    const double g = tp.grad(Var{self})[0];
    for (double& ga : tp.grad(a)) ga += g;
  });
}

Var weighted_sum(Tape& t, std::span<const Var> scalars,
                 std::span<const double> weights) {
  if (scalars.size() != weights.size()) {
    throw std::invalid_argument("weighted_sum: one weight per term");
  }
  double s = 0.0;
  bool needs = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (t.size(scalars[i]) != 1) throw std::invalid_argument("weighted_sum of non-scalar");
    s += weights[i] * t.scalar(scalars[i]);
    needs = needs || t.needs_grad(scalars[i]);
  }
  std::vector<Var> ids(scalars.begin(), scalars.end());
  std::vector<double> w(weights.begin(), weights.end());
  return t.push({s}, needs, [ids, w](Tape& tp, std::uint32_t self) {
    const double g = tp.grad(Var{self})[0];
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (tp.needs_grad(ids[i])) tp.grad(ids[i])[0] += g * w[i];
    }
  });
}

Var dot(Tape& t, Var a, Var b) { return sum(t, mul(t, a, b)); }

Var sum_squares(Tape& t, Var a) {
  auto in = t.value(a);
  double s = 0.0;
  for (double x : in) s += x * x;
  return t.push({s}, t.needs_grad(a), [a](Tape& tp, std::uint32_t self) {
    const double g = tp.grad(Var{self})[0];
    auto x = tp.value(a);
    auto ga = tp.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * g * x[i];
  });
}

Var l2_norm(Tape& t, Var a, double eps) {
  auto in = t.value(a);
  double s = 0.0;
  for (double x : in) s += x * x;
  const double n = std::sqrt(s + eps);
  return t.push({n}, t.needs_grad(a), [a](Tape& tp, std::uint32_t self) {
    const double g = tp.grad(Var{self})[0];
    const double n = tp.value(Var{self})[0];
    auto x = tp.value(a);
    auto ga = tp.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * x[i] / n;
  });
}

}  // namespace ad
}  // namespace uesr
