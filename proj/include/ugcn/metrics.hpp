#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ugcn/error.hpp"
#include "ugcn/pose.hpp"

namespace ugcn {

namespace detail {

inline void require_3d_pair(const PoseSequence& pred, const PoseSequence& gt, const char* what) {
  require_same_shape(pred, gt, what);
  if (pred.dims != 3) throw ShapeMismatch(std::string(what) + " expects 3-D poses");
}

inline double joint_distance(const PoseSequence& a, const PoseSequence& b, std::size_t t, std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.dims; ++d) {
    const double diff = a.at(t, j, d) - b.at(t, j, d);
    s += diff * diff;
  }
  return std::sqrt(s);
}

inline Eigen::Matrix3Xd frame_matrix(const PoseSequence& p, std::size_t t) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(p.joints));
  for (std::size_t j = 0; j < p.joints; ++j)
    for (std::size_t d = 0; d < 3; ++d) m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j)) = p.at(t, j, d);
  return m;
}

/// Per-(frame, joint) Euclidean errors after root alignment, frame-major.
inline std::vector<double> root_aligned_errors(const PoseSequence& pred, const PoseSequence& gt, std::size_t root) {
  const PoseSequence a = root_relative(pred, root), b = root_relative(gt, root);
  std::vector<double> err;
  err.reserve(pred.frames * pred.joints);
  for (std::size_t t = 0; t < pred.frames; ++t)
    for (std::size_t j = 0; j < pred.joints; ++j) err.push_back(joint_distance(a, b, t, j));
  return err;
}

}  // namespace detail

/// Protocol 1: mean joint distance after subtracting each sequence's root.
inline double mpjpe_p1(const PoseSequence& pred, const PoseSequence& gt, std::size_t root) {
  detail::require_3d_pair(pred, gt, "mpjpe_p1");
  const auto err = detail::root_aligned_errors(pred, gt, root);
  double s = 0.0;
  for (double e : err) s += e;
  return err.empty() ? 0.0 : s / static_cast<double>(err.size());
}

struct SimilarityTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;
};

/// Least-squares alignment of `source` onto `target` (both 3 x M) by a
/// proper rotation, translation and, optionally, a uniform scale.
/// Returns nullopt for degenerate (collinear or coincident) point sets.
inline std::optional<SimilarityTransform> procrustes(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target,
                                                     bool with_scale = true) {
  const Eigen::Vector3d mu_s = source.rowwise().mean();
  const Eigen::Vector3d mu_t = target.rowwise().mean();
  const Eigen::Matrix3Xd s0 = source.colwise() - mu_s;
  const Eigen::Matrix3Xd t0 = target.colwise() - mu_t;

  Eigen::JacobiSVD<Eigen::Matrix3Xd> shape_check(s0);
  const auto sv = shape_check.singularValues();
  if (sv(0) <= 1e-12 || sv(1) <= 1e-9 * sv(0)) return std::nullopt;

  const Eigen::Matrix3d H = s0 * t0.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d U = svd.matrixU(), V = svd.matrixV();
  Eigen::Vector3d signs(1.0, 1.0, (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0);

  SimilarityTransform tf;
  tf.rotation = V * signs.asDiagonal() * U.transpose();
  if (with_scale) tf.scale = svd.singularValues().dot(signs) / s0.squaredNorm();
  tf.translation = mu_t - tf.scale * tf.rotation * mu_s;
  return tf;
}

struct ProcrustesResult {
  double mpjpe = 0.0;
  std::size_t used_frames = 0;
  std::size_t skipped_frames = 0;
};

/// Protocol 2 with per-frame diagnostics. Degenerate frames are skipped.
inline ProcrustesResult mpjpe_p2_detailed(const PoseSequence& pred, const PoseSequence& gt, bool with_scale = true) {
  detail::require_3d_pair(pred, gt, "mpjpe_p2");
  ProcrustesResult r;
  double total = 0.0;
  for (std::size_t t = 0; t < pred.frames; ++t) {
    const Eigen::Matrix3Xd X = detail::frame_matrix(pred, t);
    const Eigen::Matrix3Xd Y = detail::frame_matrix(gt, t);
    const auto tf = procrustes(X, Y, with_scale);
    if (!tf) {
      ++r.skipped_frames;
      continue;
    }
    const Eigen::Matrix3Xd aligned = (tf->scale * tf->rotation * X).colwise() + tf->translation;
    total += (aligned - Y).colwise().norm().sum();
    ++r.used_frames;
  }
  if (r.used_frames == 0) throw DegenerateFrame("every frame is degenerate");
  r.mpjpe = total / static_cast<double>(r.used_frames * pred.joints);
  return r;
}

/// Protocol 2: per-frame similarity alignment, then mean joint distance.
inline double mpjpe_p2(const PoseSequence& pred, const PoseSequence& gt, bool with_scale = true) {
  const auto r = mpjpe_p2_detailed(pred, gt, with_scale);
  if (r.skipped_frames) std::cerr << "warning: mpjpe_p2 skipped " << r.skipped_frames << " degenerate frame(s)\n";
  return r.mpjpe;
}

/// Mean over (T-1) x M of the first-difference velocity error on
/// root-aligned sequences.
inline double mpjve(const PoseSequence& pred, const PoseSequence& gt, std::size_t root) {
  detail::require_3d_pair(pred, gt, "mpjve");
  if (pred.frames < 2) throw TooShort("mpjve needs at least two frames");
  const PoseSequence a = root_relative(pred, root), b = root_relative(gt, root);
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < a.frames; ++t)
    for (std::size_t j = 0; j < a.joints; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < 3; ++d) {
        const double dv = (a.at(t + 1, j, d) - a.at(t, j, d)) - (b.at(t + 1, j, d) - b.at(t, j, d));
        s += dv * dv;
      }
      total += std::sqrt(s);
    }
  return total / static_cast<double>((a.frames - 1) * a.joints);
}

struct PckResult {
  double pck = 0.0;  // at threshold_max
  double auc = 0.0;  // mean PCK over step, 2*step, ..., threshold_max
};

inline std::vector<double> pck_thresholds(double threshold_max = 150.0, double step = 5.0) {
  std::vector<double> th;
  const auto n = static_cast<std::size_t>(std::llround(threshold_max / step));
  for (std::size_t k = 1; k <= n; ++k) th.push_back(step * static_cast<double>(k));
  return th;
}

inline PckResult pck_from_errors(const std::vector<double>& err, double threshold_max = 150.0, double step = 5.0) {
  PckResult r;
  if (err.empty()) return r;
  auto pck_at = [&](double th) {
    std::size_t ok = 0;
    for (double e : err) ok += e < th ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(err.size());
  };
  const auto th = pck_thresholds(threshold_max, step);
  for (double t : th) r.auc += pck_at(t);
  r.auc /= static_cast<double>(th.size());
  r.pck = pck_at(threshold_max);
  return r;
}

/// Fraction of root-aligned joints closer than the threshold, plus the
/// mean of that fraction over the threshold grid.
inline PckResult pck_auc(const PoseSequence& pred, const PoseSequence& gt, std::size_t root, double threshold_max = 150.0,
                         double step = 5.0) {
  detail::require_3d_pair(pred, gt, "pck_auc");
  return pck_from_errors(detail::root_aligned_errors(pred, gt, root), threshold_max, step);
}

struct EvalRow {
  double mpjpe_mm = 0.0;
  double p_mpjpe_mm = 0.0;
  double mpjve_mm = 0.0;
  double pck_at_150 = 0.0;
  double auc = 0.0;
};

struct EvalReport : EvalRow {
  std::map<std::string, EvalRow> per_action;
};

/// Pools every (frame, joint) pair across sequences. Sequences with a
/// non-empty label also contribute to that label's row.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::size_t root, bool p2_with_scale = true) : root_(root), with_scale_(p2_with_scale) {}

  void add(const PoseSequence& pred, const PoseSequence& gt, const std::string& label = {}) {
    detail::require_3d_pair(pred, gt, "evaluate");
    Sums s;
    const auto err = detail::root_aligned_errors(pred, gt, root_);
    for (double e : err) s.p1 += e;
    s.errors = err;
    s.joints = err.size();
    const auto p2 = mpjpe_p2_detailed(pred, gt, with_scale_);
    s.p2 = p2.mpjpe * static_cast<double>(p2.used_frames * pred.joints);
    s.p2_joints = p2.used_frames * pred.joints;
    if (pred.frames >= 2) {
      const double v = mpjve(pred, gt, root_);
      s.vel_joints = (pred.frames - 1) * pred.joints;
      s.vel = v * static_cast<double>(s.vel_joints);
    }
    total_.merge(s);
    if (!label.empty()) by_label_[label].merge(s);
  }

  EvalReport report() const {
    EvalReport r;
    static_cast<EvalRow&>(r) = total_.row();
    for (const auto& [label, s] : by_label_) r.per_action[label] = s.row();
    return r;
  }

 private:
  struct Sums {
    double p1 = 0.0, p2 = 0.0, vel = 0.0;
    std::size_t joints = 0, p2_joints = 0, vel_joints = 0;
    std::vector<double> errors;

    void merge(const Sums& o) {
      p1 += o.p1;
      p2 += o.p2;
      vel += o.vel;
      joints += o.joints;
      p2_joints += o.p2_joints;
      vel_joints += o.vel_joints;
      errors.insert(errors.end(), o.errors.begin(), o.errors.end());
    }

    EvalRow row() const {
      EvalRow r;
      r.mpjpe_mm = joints ? p1 / static_cast<double>(joints) : 0.0;
      r.p_mpjpe_mm = p2_joints ? p2 / static_cast<double>(p2_joints) : 0.0;
      r.mpjve_mm = vel_joints ? vel / static_cast<double>(vel_joints) : 0.0;
      const auto pck = pck_from_errors(errors);
      r.pck_at_150 = pck.pck;
      r.auc = pck.auc;
      return r;
    }
  };

  std::size_t root_;
  bool with_scale_;
  Sums total_;
  std::map<std::string, Sums> by_label_;
};

}  // namespace ugcn
