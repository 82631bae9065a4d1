#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ugcn/autodiff.hpp"

namespace ugcn {

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  // Entries that only agreed after shrinking the step (a kink lay within one step).
  std::size_t refined = 0;
  bool finite = true;
  bool passed = true;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  // Denominator floor for the relative error, so that entries whose true
  // derivative is ~0 are judged on absolute error instead.
  double floor = 1e-6;
  // The floor is also raised to roundoff_factor * eps * |loss| / (step * tol),
  // the level at which the central difference itself is roundoff noise.
  double roundoff_factor = 10.0;
  // Extra attempts at step/10, step/100, ... for entries that disagree.
  int refinements = 2;
  // 0 checks every entry; otherwise a seeded random subset of this size.
  std::size_t max_entries = 0;
  std::uint64_t sample_seed = 0;
};

inline double grad_rel_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace detail {

inline std::vector<std::size_t> pick_entries(std::size_t n, const GradCheckOptions& opt) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (opt.max_entries == 0 || opt.max_entries >= n) return idx;
  std::mt19937_64 rng(opt.sample_seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(opt.max_entries);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline double effective_floor(double up, double down, double step, const GradCheckOptions& opt) {
  const double scale = std::max({std::abs(up), std::abs(down), 1.0});
  return std::max(opt.floor, opt.roundoff_factor * std::numeric_limits<double>::epsilon() * scale /
                                 (step * opt.tol));
}

inline void record(GradCheckReport& r, std::size_t i, double analytic, double numeric, double rel,
                   bool refined, const GradCheckOptions& opt) {
  ++r.checked;
  if (refined) ++r.refined;
  if (!std::isfinite(analytic) || !std::isfinite(numeric)) {
    r.finite = false;
    r.passed = false;
    r.worst_index = i;
    r.max_rel_error = std::numeric_limits<double>::infinity();
    return;
  }
  r.max_abs_error = std::max(r.max_abs_error, std::abs(analytic - numeric));
  if (rel > r.max_rel_error) {
    r.max_rel_error = rel;
    r.worst_index = i;
  }
  r.passed = r.finite && r.max_rel_error < opt.tol;
}

}  // namespace detail

/// Compares backprop through `loss` against central differences obtained by
/// perturbing `param` in place. `loss` must be deterministic.
inline GradCheckReport grad_check_param(const std::function<Var()>& loss, Var param,
                                        const GradCheckOptions& opt = {}, std::string name = {}) {
  GradCheckReport report;
  report.name = std::move(name);
  param.zero_grad();
  backprop(loss());
  const Tensor analytic = param.grad();

  NoGradGuard no_grad;
  auto& values = param.mutable_value();
  for (std::size_t i : detail::pick_entries(values.size(), opt)) {
    const double saved = values[i];
    double step = opt.step;
    double numeric = 0.0;
    double rel = std::numeric_limits<double>::infinity();
    bool refined = false;
    for (int attempt = 0; attempt <= opt.refinements; ++attempt, step /= 10.0) {
      values[i] = saved + step;
      const double up = loss().value().item();
      values[i] = saved - step;
      const double down = loss().value().item();
      values[i] = saved;
      const double n = (up - down) / (2.0 * step);
      const double e = grad_rel_error(analytic[i], n, detail::effective_floor(up, down, step, opt));
      if (!std::isfinite(n) || e < rel || attempt == 0) {
        numeric = n;
        rel = std::isfinite(n) ? e : std::numeric_limits<double>::infinity();
      }
      if (rel < opt.tol || !std::isfinite(n)) break;
      refined = true;
    }
    detail::record(report, i, analytic[i], numeric, rel, refined && rel < opt.tol, opt);
  }
  return report;
}

/// Gradient check of a scalar function of a single array.
inline GradCheckReport grad_check(const std::function<Var(const Var&)>& f, const Tensor& x,
                                  const GradCheckOptions& opt = {}, std::string name = {}) {
  Var input = Var::parameter(x);
  return grad_check_param([&] { return f(input); }, input, opt, std::move(name));
}

}  // namespace ugcn
