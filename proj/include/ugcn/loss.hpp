#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ugcn/autodiff.hpp"
#include "ugcn/pose.hpp"

namespace ugcn {

enum class MotionOperator { subtraction, inner_product, cross_product };
enum class MotionNorm { l1, l2 };

inline const char* to_string(MotionOperator op) {
  switch (op) {
    case MotionOperator::subtraction: return "subtraction";
    case MotionOperator::inner_product: return "inner_product";
    case MotionOperator::cross_product: return "cross_product";
  }
  return "?";
}

inline MotionOperator parse_motion_operator(const std::string& s) {
  if (s == "subtraction" || s == "sub") return MotionOperator::subtraction;
  if (s == "inner_product" || s == "inner") return MotionOperator::inner_product;
  if (s == "cross_product" || s == "cross") return MotionOperator::cross_product;
  throw InvalidConfig("unknown motion operator '" + s + "'");
}

struct LossConfig {
  MotionOperator op = MotionOperator::cross_product;
  std::vector<std::size_t> intervals{8, 12, 16, 24};
  double lambda = 1.0;
  MotionNorm norm = MotionNorm::l1;

  void validate(std::size_t frames) const {
    if (!(lambda >= 0.0)) throw InvalidConfig("lambda must be non-negative");
    for (auto tau : intervals) {
      if (tau == 0) throw InvalidConfig("motion interval must be positive");
      if (tau >= frames)
        throw IntervalTooLarge("interval " + std::to_string(tau) + " needs more than " + std::to_string(frames) + " frames");
    }
  }
};

namespace detail {

struct PoseDims {
  std::size_t lead, T, M, D;
};

inline PoseDims pose_dims(const Shape& s) {
  if (s.size() < 3) throw ShapeMismatch("pose tensor needs (..., T, M, D), got " + shape_str(s));
  const std::size_t r = s.size();
  return {shape_size(s) / (s[r - 3] * s[r - 2] * s[r - 1]), s[r - 3], s[r - 2], s[r - 1]};
}

}  // namespace detail

/// m[t, j] = s[t, j] (op) s[t + tau, j] for t in [0, T - tau).
/// Input (..., T, M, D); output (..., T - tau, M, D) or (..., T - tau, M, 1)
/// for the inner product.
inline Var encode_motion(const Var& s, std::size_t tau, MotionOperator op) {
  const auto pd = detail::pose_dims(s.shape());
  if (tau == 0) throw InvalidConfig("motion interval must be positive");
  if (tau >= pd.T) throw IntervalTooLarge("interval " + std::to_string(tau) + " with " + std::to_string(pd.T) + " frames");
  if (op == MotionOperator::cross_product && pd.D != 3)
    throw DimensionError("cross product needs 3-D coordinates, got " + std::to_string(pd.D));
  const std::size_t K = op == MotionOperator::inner_product ? 1 : pd.D;
  const std::size_t To = pd.T - tau, M = pd.M, D = pd.D, T = pd.T;

  Shape out_shape = s.shape();
  out_shape[out_shape.size() - 3] = To;
  out_shape.back() = K;
  Tensor out(out_shape);
  const auto& S = s.value();
  auto in_at = [=](std::size_t b, std::size_t t, std::size_t j) { return ((b * T + t) * M + j) * D; };
  auto out_at = [=](std::size_t b, std::size_t t, std::size_t j) { return ((b * To + t) * M + j) * K; };

  for (std::size_t b = 0; b < pd.lead; ++b)
    for (std::size_t t = 0; t < To; ++t)
      for (std::size_t j = 0; j < M; ++j) {
        const double* a = &S[in_at(b, t, j)];
        const double* c = &S[in_at(b, t + tau, j)];
        double* m = &out[out_at(b, t, j)];
        switch (op) {
          case MotionOperator::subtraction:
            for (std::size_t d = 0; d < D; ++d) m[d] = a[d] - c[d];
            break;
          case MotionOperator::inner_product:
            for (std::size_t d = 0; d < D; ++d) m[0] += a[d] * c[d];
            break;
          case MotionOperator::cross_product:
            m[0] = a[1] * c[2] - a[2] * c[1];
            m[1] = a[2] * c[0] - a[0] * c[2];
            m[2] = a[0] * c[1] - a[1] * c[0];
            break;
        }
      }

  return make_op(std::move(out), {s}, [=](Node& self) {
    Node& p = *self.parents[0];
    const auto& S = p.value;
    for (std::size_t b = 0; b < pd.lead; ++b)
      for (std::size_t t = 0; t < To; ++t)
        for (std::size_t j = 0; j < M; ++j) {
          const std::size_t ia = in_at(b, t, j), ic = in_at(b, t + tau, j);
          const double* g = &self.grad[out_at(b, t, j)];
          switch (op) {
            case MotionOperator::subtraction:
              for (std::size_t d = 0; d < D; ++d) {
                p.grad[ia + d] += g[d];
                p.grad[ic + d] -= g[d];
              }
              break;
            case MotionOperator::inner_product:
              for (std::size_t d = 0; d < D; ++d) {
                p.grad[ia + d] += g[0] * S[ic + d];
                p.grad[ic + d] += g[0] * S[ia + d];
              }
              break;
            case MotionOperator::cross_product: {
              // d/da (a x c).g = c x g ; d/dc (a x c).g = g x a
              const double* a = &S[ia];
              const double* c = &S[ic];
              p.grad[ia + 0] += c[1] * g[2] - c[2] * g[1];
              p.grad[ia + 1] += c[2] * g[0] - c[0] * g[2];
              p.grad[ia + 2] += c[0] * g[1] - c[1] * g[0];
              p.grad[ic + 0] += g[1] * a[2] - g[2] * a[1];
              p.grad[ic + 1] += g[2] * a[0] - g[0] * a[2];
              p.grad[ic + 2] += g[0] * a[1] - g[1] * a[0];
              break;
            }
          }
        }
  });
}

/// Sum over rows of the Euclidean norm of the last axis.
inline Var row_norm_sum(const Var& x) {
  const std::size_t K = x.shape().empty() ? 1 : x.shape().back();
  const std::size_t rows = x.size() / K;
  std::vector<double> norms(rows);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += x.value()[r * K + k] * x.value()[r * K + k];
    norms[r] = std::sqrt(s);
    total += norms[r];
  }
  return make_op(Tensor::scalar(total), {x}, [K, rows, norms = std::move(norms)](Node& self) {
    Node& p = *self.parents[0];
    const double g = self.grad[0];
    for (std::size_t r = 0; r < rows; ++r)
      if (norms[r] > 0.0)
        for (std::size_t k = 0; k < K; ++k) p.grad[r * K + k] += g * p.value[r * K + k] / norms[r];
  });
}

/// Sum over intervals, frames and joints of the distance between predicted and
/// ground-truth motion encodings.
inline Var motion_loss(const Var& pred, const Var& gt, const LossConfig& cfg) {
  if (pred.shape() != gt.shape())
    throw ShapeMismatch("motion_loss " + shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
  const auto pd = detail::pose_dims(pred.shape());
  cfg.validate(pd.T);
  Var total = Var::constant(Tensor::scalar(0.0));
  for (std::size_t tau : cfg.intervals) {
    Var diff = sub(encode_motion(pred, tau, cfg.op), encode_motion(gt, tau, cfg.op));
    total = add(total, cfg.norm == MotionNorm::l1 ? sum(abs(diff)) : row_norm_sum(diff));
  }
  return total;
}

/// Sum of squared Euclidean distances over frames and joints.
inline Var position_loss(const Var& pred, const Var& gt) {
  if (pred.shape() != gt.shape())
    throw ShapeMismatch("position_loss " + shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
  Var d = sub(pred, gt);
  return sum(mul(d, d));
}

struct LossTerms {
  Var position;
  Var motion;
  Var total;
};

inline LossTerms loss_terms(const Var& pred, const Var& gt, const LossConfig& cfg) {
  LossTerms terms;
  terms.position = position_loss(pred, gt);
  terms.motion = motion_loss(pred, gt, cfg);
  terms.total = cfg.lambda == 0.0 ? terms.position : add(terms.position, scale(terms.motion, cfg.lambda));
  return terms;
}

/// L = L_p + lambda * L_m.
inline Var combined_loss(const Var& pred, const Var& gt, const LossConfig& cfg) {
  return loss_terms(pred, gt, cfg).total;
}

/// Adjacent-frame offset loss: subtraction encoding with interval set {1}.
inline Var derivative_loss(const Var& pred, const Var& gt) {
  LossConfig cfg;
  cfg.op = MotionOperator::subtraction;
  cfg.intervals = {1};
  return motion_loss(pred, gt, cfg);
}

// PoseSequence conveniences (values only, no tape).

inline Tensor encode_motion(const PoseSequence& s, std::size_t tau, MotionOperator op) {
  return encode_motion(Var::constant(s.tensor()), tau, op).value();
}

inline double motion_loss(const PoseSequence& pred, const PoseSequence& gt, const LossConfig& cfg) {
  require_same_shape(pred, gt, "motion_loss");
  return motion_loss(Var::constant(pred.tensor()), Var::constant(gt.tensor()), cfg).value().item();
}

inline double position_loss(const PoseSequence& pred, const PoseSequence& gt) {
  require_same_shape(pred, gt, "position_loss");
  return position_loss(Var::constant(pred.tensor()), Var::constant(gt.tensor())).value().item();
}

}  // namespace ugcn
