#pragma once

// Reverse-mode differentiation over dense double tensors. The tape is built
// dynamically: every op allocates a Node that remembers its parents and a
// backward rule; backprop() walks the graph in reverse topological order.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ugcn/error.hpp"
#include "ugcn/tensor.hpp"

namespace ugcn {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};

namespace detail {
inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

/// Disables tape recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_enabled_flag()) { detail::grad_enabled_flag() = false; }
  ~NoGradGuard() { detail::grad_enabled_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline bool grad_enabled() { return detail::grad_enabled_flag(); }

/// Handle to a node of the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->grad = Tensor(node_->value.shape());
  }
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value) { return Var(std::move(value), false); }
  static Var parameter(Tensor value) { return Var(std::move(value), true); }

  bool valid() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() {
    if (node_->requires_grad) node_->grad.fill(0.0);
  }
  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Creates the output node of an op. The backward rule is kept only when
/// recording is enabled and some parent needs a gradient.
inline Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled())
    for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->grad = Tensor(node->value.shape());
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

/// Runs reverse-mode accumulation from a scalar output. Leaf gradients
/// accumulate across calls; interior gradients are reset first.
inline void backprop(const Var& output) {
  if (output.size() != 1) throw NonScalarOutput("output shape " + shape_str(output.shape()));
  if (!output.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{output.node().get(), 0}};
  visited.insert(output.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order)
    if (n->backward) n->grad.fill(0.0);
  output.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

// ---------------------------------------------------------------- elementwise

namespace detail {

// Broadcast is limited to leading-1 dimensions: the smaller operand, with its
// leading ones stripped, must equal the trailing dims of the larger one.
inline bool is_trailing_broadcast(const Shape& big, const Shape& small) {
  std::size_t lead = 0;
  while (lead < small.size() && small[lead] == 1) ++lead;
  const std::size_t rest = small.size() - lead;
  if (rest > big.size()) return false;
  for (std::size_t i = 0; i < rest; ++i)
    if (small[lead + i] != big[big.size() - rest + i]) return false;
  return true;
}

enum class BinaryKind { add, sub, mul };

inline Var binary(BinaryKind kind, const Var& a, const Var& b) {
  const bool a_big = a.size() >= b.size();
  const Shape& big = a_big ? a.shape() : b.shape();
  const Shape& small = a_big ? b.shape() : a.shape();
  if (a.shape() != b.shape() && !is_trailing_broadcast(big, small))
    throw ShapeMismatch(shape_str(a.shape()) + " vs " + shape_str(b.shape()));

  const std::size_t n = std::max(a.size(), b.size());
  const std::size_t na = a.size(), nb = b.size();
  Tensor out(big);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[i % na], y = bv[i % nb];
    out[i] = kind == BinaryKind::add ? x + y : kind == BinaryKind::sub ? x - y : x * y;
  }
  return make_op(std::move(out), {a, b}, [kind, n, na, nb](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < n; ++i) {
      const double g = self.grad[i];
      if (pa.requires_grad)
        pa.grad[i % na] += kind == BinaryKind::mul ? g * pb.value[i % nb] : g;
      if (pb.requires_grad)
        pb.grad[i % nb] += kind == BinaryKind::add   ? g
                           : kind == BinaryKind::sub ? -g
                                                     : g * pa.value[i % na];
    }
  });
}

}  // namespace detail

inline Var add(const Var& a, const Var& b) { return detail::binary(detail::BinaryKind::add, a, b); }
inline Var sub(const Var& a, const Var& b) { return detail::binary(detail::BinaryKind::sub, a, b); }
inline Var mul(const Var& a, const Var& b) { return detail::binary(detail::BinaryKind::mul, a, b); }

inline Var scale(const Var& x, double alpha) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * x.value()[i];
  return make_op(std::move(out), {x}, [alpha](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += alpha * self.grad[i];
  });
}

inline Var relu(const Var& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] > 0.0 ? x.value()[i] : 0.0;
  return make_op(std::move(out), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
  });
}

/// |x| with subgradient 0 at the kink.
inline Var abs(const Var& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(x.value()[i]);
  return make_op(std::move(out), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double v = p.value[i];
      p.grad[i] += v > 0.0 ? self.grad[i] : v < 0.0 ? -self.grad[i] : 0.0;
    }
  });
}

inline Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_op(std::move(out), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

// --------------------------------------------------------------------- matmul

inline Var matmul(const Var& a, const Var& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
    throw ShapeMismatch("matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out(Shape{m, n});
  const auto& A = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  return make_op(std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const auto& G = self.grad;
    if (pa.requires_grad)  // dA = G B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * pb.value[p * n + j];
          pa.grad[i * k + p] += s;
        }
    if (pb.requires_grad)  // dB = A^T G
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = pa.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) pb.grad[p * n + j] += aip * G[i * n + j];
        }
  });
}

// ------------------------------------------------------------------ reduction

enum class ReduceKind { sum, mean };

/// Reduces over the given axes (all axes when empty); reduced axes are removed.
inline Var reduce(ReduceKind kind, const Var& x, std::vector<std::size_t> axes = {}) {
  const Shape& in = x.shape();
  const std::size_t rank = in.size();
  std::vector<bool> reduced(rank, axes.empty());
  for (auto a : axes) {
    if (a >= rank) throw InvalidAxis("axis " + std::to_string(a) + " for rank " + std::to_string(rank));
    if (reduced[a]) throw InvalidAxis("axis " + std::to_string(a) + " repeated");
    reduced[a] = true;
  }
  Shape out_shape;
  for (std::size_t d = 0; d < rank; ++d)
    if (!reduced[d]) out_shape.push_back(in[d]);

  // Map every input flat index to its output flat index.
  std::vector<std::size_t> target(x.size());
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t o = 0;
    for (std::size_t d = 0; d < rank; ++d)
      if (!reduced[d]) o = o * in[d] + idx[d];
    target[i] = o;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < in[d]) break;
      idx[d] = 0;
    }
  }
  Tensor out(out_shape);
  const double count = out.size() ? static_cast<double>(x.size()) / static_cast<double>(out.size()) : 1.0;
  const double factor = kind == ReduceKind::mean ? 1.0 / count : 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) out[target[i]] += x.value()[i];
  if (factor != 1.0)
    for (auto& v : out.vec()) v *= factor;
  return make_op(std::move(out), {x}, [target = std::move(target), factor](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < target.size(); ++i) p.grad[i] += factor * self.grad[target[i]];
  });
}

inline Var sum(const Var& x) { return reduce(ReduceKind::sum, x); }
inline Var mean(const Var& x) { return reduce(ReduceKind::mean, x); }

// ------------------------------------------------------------ temporal conv

/// 1-D convolution along time for every joint and channel.
/// x: (N, C_in, T, M) or (C_in, T, M); w: (C_out, C_in, K); bias: (C_out) or
/// invalid. Symmetric zero padding of (K-1)/2, output length ceil(T/stride).
inline Var conv_time(const Var& x, const Var& w, std::size_t stride, const Var& bias = Var()) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.size() != 3 && xs.size() != 4) throw ShapeMismatch("conv_time input " + shape_str(xs));
  if (ws.size() != 3) throw ShapeMismatch("conv_time kernel " + shape_str(ws));
  const bool batched = xs.size() == 4;
  const std::size_t N = batched ? xs[0] : 1;
  const std::size_t C = xs[batched ? 1 : 0], T = xs[batched ? 2 : 1], M = xs[batched ? 3 : 2];
  const std::size_t O = ws[0], K = ws[2];
  if (ws[1] != C) throw ShapeMismatch("conv_time kernel " + shape_str(ws) + " for input " + shape_str(xs));
  if (K % 2 == 0) throw EvenKernel("kernel size " + std::to_string(K));
  if (stride != 1 && stride != 2) throw ShapeMismatch("stride must be 1 or 2");
  if (bias.valid() && bias.shape() != Shape{O}) throw ShapeMismatch("conv_time bias " + shape_str(bias.shape()));

  const std::size_t pad = (K - 1) / 2;
  const std::size_t To = (T + stride - 1) / stride;
  Shape out_shape = batched ? Shape{N, O, To, M} : Shape{O, To, M};
  Tensor out(out_shape);
  const auto& X = x.value();
  const auto& W = w.value();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      double* orow = &out[((n * O + o) * To) * M];
      if (bias.valid())
        for (std::size_t i = 0; i < To * M; ++i) orow[i] = bias.value()[o];
      for (std::size_t c = 0; c < C; ++c) {
        const double* xrow = &X[((n * C + c) * T) * M];
        for (std::size_t k = 0; k < K; ++k) {
          const double wk = W[(o * C + c) * K + k];
          for (std::size_t t = 0; t < To; ++t) {
            const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(pad);
            if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) continue;
            const double* xs_ = xrow + static_cast<std::size_t>(ti) * M;
            double* os = orow + t * M;
            for (std::size_t m = 0; m < M; ++m) os[m] += wk * xs_[m];
          }
        }
      }
    }

  std::vector<Var> parents{x, w};
  if (bias.valid()) parents.push_back(bias);
  const bool has_bias = bias.valid();
  return make_op(std::move(out), std::move(parents),
                 [=](Node& self) {
                   Node& px = *self.parents[0];
                   Node& pw = *self.parents[1];
                   const auto& G = self.grad;
                   for (std::size_t n = 0; n < N; ++n)
                     for (std::size_t o = 0; o < O; ++o) {
                       const double* grow = &G[((n * O + o) * To) * M];
                       if (has_bias && self.parents[2]->requires_grad) {
                         double s = 0.0;
                         for (std::size_t i = 0; i < To * M; ++i) s += grow[i];
                         self.parents[2]->grad[o] += s;
                       }
                       for (std::size_t c = 0; c < C; ++c) {
                         const std::size_t xoff = ((n * C + c) * T) * M;
                         for (std::size_t k = 0; k < K; ++k) {
                           const std::size_t widx = (o * C + c) * K + k;
                           const double wk = pw.value[widx];
                           double dw = 0.0;
                           for (std::size_t t = 0; t < To; ++t) {
                             const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t * stride + k) -
                                                       static_cast<std::ptrdiff_t>(pad);
                             if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) continue;
                             const std::size_t xi = xoff + static_cast<std::size_t>(ti) * M;
                             const double* gs = grow + t * M;
                             for (std::size_t m = 0; m < M; ++m) {
                               dw += gs[m] * px.value[xi + m];
                               if (px.requires_grad) px.grad[xi + m] += wk * gs[m];
                             }
                           }
                           if (pw.requires_grad) pw.grad[widx] += dw;
                         }
                       }
                     }
                 });
}

}  // namespace ugcn
