#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ugcn/error.hpp"
#include "ugcn/nn.hpp"

namespace ugcn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t step = 0;
  AdamHyper hyper;

  static OptimizerState for_params(const std::vector<NamedParam>& params, AdamHyper hyper = {}) {
    OptimizerState s;
    s.hyper = hyper;
    for (const auto& p : params) {
      s.first_moment.emplace_back(p.var.shape());
      s.second_moment.emplace_back(p.var.shape());
    }
    return s;
  }

  bool operator==(const OptimizerState& o) const {
    return first_moment == o.first_moment && second_moment == o.second_moment && step == o.step;
  }
};

/// One bias-corrected Adam update of a single array. With weight_decay > 0
/// the decoupled term lr * weight_decay * theta is subtracted as well.
/// `step` is the 1-based index of this update.
inline void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                        std::size_t step, double lr, double weight_decay, const AdamHyper& h) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size())
    throw ShapeMismatch("adam_update buffers differ in length");
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    const double decay = weight_decay * param[i];
    param[i] -= lr * (m_hat / (std::sqrt(v_hat) + h.eps) + decay);
  }
}

/// Applies Adam to every parameter; weight decay only where `decay` is set.
inline void adam_step(std::vector<NamedParam>& params, OptimizerState& state, double lr, double weight_decay) {
  if (!(lr > 0.0)) throw InvalidConfig("learning rate must be positive");
  if (state.first_moment.size() != params.size()) throw ShapeMismatch("optimizer state does not match parameters");
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (state.first_moment[i].shape() != p.var.shape()) throw ShapeMismatch("moment shape for " + p.name);
    adam_update(p.var.mutable_value().data(), p.var.grad().data(), state.first_moment[i].data(),
                state.second_moment[i].data(), state.step, lr, p.decay ? weight_decay : 0.0, state.hyper);
  }
}

struct LrSchedule {
  double initial = 1e-2;
  double factor = 0.1;
  std::vector<std::size_t> decay_epochs{80, 90, 100};
};

/// Step decay: multiply by `factor` once for each decay epoch already reached.
inline double lr_at(std::size_t epoch, const LrSchedule& s) {
  double lr = s.initial;
  for (auto e : s.decay_epochs)
    if (epoch >= e) lr *= s.factor;
  return lr;
}

}  // namespace ugcn
