#pragma once

// Straight-loop reference implementations used as test oracles. They share no
// code with the library beyond plain data types.

#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ugcn/pose.hpp"
#include "ugcn/skeleton.hpp"

namespace oracle {

using ugcn::PoseSequence;

// Dense 4-D array helper, row-major.
struct Array4 {
  std::size_t a = 0, b = 0, c = 0, d = 0;
  std::vector<double> v;
  Array4() = default;
  Array4(std::size_t a_, std::size_t b_, std::size_t c_, std::size_t d_) : a(a_), b(b_), c(c_), d(d_), v(a_ * b_ * c_ * d_) {}
  double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) { return v[((i * b + j) * c + k) * d + l]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return v[((i * b + j) * c + k) * d + l];
  }
};

/// Normalized 3-subset adjacency built from its definition: BFS hop counts
/// from the root, each neighbourhood B(j) = {j} + bone neighbours split by
/// comparing hop counts, entries 1 / |subset|.
inline std::array<std::vector<std::vector<double>>, 3> adjacency(std::size_t M, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                                              std::size_t root) {
  std::vector<std::vector<bool>> adj(M, std::vector<bool>(M, false));
  for (auto [x, y] : edges) adj[x][y] = adj[y][x] = true;
  std::vector<int> hop(M, -1);
  hop[root] = 0;
  std::queue<std::size_t> q;
  q.push(root);
  while (!q.empty()) {
    auto j = q.front();
    q.pop();
    for (std::size_t i = 0; i < M; ++i)
      if (adj[j][i] && hop[i] < 0) {
        hop[i] = hop[j] + 1;
        q.push(i);
      }
  }
  std::array<std::vector<std::vector<double>>, 3> A;
  for (auto& m : A) m.assign(M, std::vector<double>(M, 0.0));
  for (std::size_t j = 0; j < M; ++j) {
    int count[3] = {0, 0, 0};
    auto label = [&](std::size_t i) { return hop[i] == hop[j] ? 0 : (hop[i] > hop[j] ? 1 : 2); };
    for (std::size_t i = 0; i < M; ++i)
      if (i == j || adj[j][i]) ++count[label(i)];
    for (std::size_t i = 0; i < M; ++i)
      if (i == j || adj[j][i]) A[label(i)][j][i] = 1.0 / count[label(i)];
  }
  return A;
}

/// out[n,o,t,j] = sum_l sum_c W_l[o,c] sum_i A_l[j,i] x[n,c,t,i].
inline Array4 spatial_graph_conv(const Array4& x, const std::array<std::vector<std::vector<double>>, 3>& A,
                                 const std::array<std::vector<std::vector<double>>, 3>& W) {
  const std::size_t O = W[0].size();
  Array4 out(x.a, O, x.c, x.d);
  for (std::size_t n = 0; n < x.a; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t t = 0; t < x.c; ++t)
        for (std::size_t j = 0; j < x.d; ++j) {
          double s = 0.0;
          for (std::size_t l = 0; l < 3; ++l)
            for (std::size_t c = 0; c < x.b; ++c)
              for (std::size_t i = 0; i < x.d; ++i) s += W[l][o][c] * A[l][j][i] * x(n, c, t, i);
          out(n, o, t, j) = s;
        }
  return out;
}

/// Zero-padded odd-kernel convolution along the third axis.
inline Array4 conv_time(const Array4& x, const std::vector<std::vector<std::vector<double>>>& w, std::size_t stride,
                        const std::vector<double>& bias) {
  const std::size_t O = w.size(), K = w[0][0].size();
  const long pad = static_cast<long>(K / 2);
  const std::size_t To = (x.c + stride - 1) / stride;
  Array4 out(x.a, O, To, x.d);
  for (std::size_t n = 0; n < x.a; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t t = 0; t < To; ++t)
        for (std::size_t m = 0; m < x.d; ++m) {
          double s = bias.empty() ? 0.0 : bias[o];
          for (std::size_t c = 0; c < x.b; ++c)
            for (std::size_t k = 0; k < K; ++k) {
              const long ti = static_cast<long>(t * stride) + static_cast<long>(k) - pad;
              if (ti >= 0 && ti < static_cast<long>(x.c)) s += w[o][c][k] * x(n, c, static_cast<std::size_t>(ti), m);
            }
          out(n, o, t, m) = s;
        }
  return out;
}

inline std::array<double, 3> cross(const double* a, const double* b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Motion loss, written out per operator: 0 subtraction, 1 inner, 2 cross.
inline double motion_loss(const PoseSequence& p, const PoseSequence& g, int op, const std::vector<std::size_t>& taus,
                          bool l1 = true) {
  double total = 0.0;
  for (std::size_t tau : taus)
    for (std::size_t t = 0; t + tau < p.frames; ++t)
      for (std::size_t j = 0; j < p.joints; ++j) {
        std::vector<double> mp, mg;
        const double* a = &p.coords[(t * p.joints + j) * p.dims];
        const double* b = &p.coords[((t + tau) * p.joints + j) * p.dims];
        const double* c = &g.coords[(t * g.joints + j) * g.dims];
        const double* d = &g.coords[((t + tau) * g.joints + j) * g.dims];
        if (op == 0) {
          for (std::size_t k = 0; k < p.dims; ++k) {
            mp.push_back(a[k] - b[k]);
            mg.push_back(c[k] - d[k]);
          }
        } else if (op == 1) {
          double x = 0, y = 0;
          for (std::size_t k = 0; k < p.dims; ++k) {
            x += a[k] * b[k];
            y += c[k] * d[k];
          }
          mp.push_back(x);
          mg.push_back(y);
        } else {
          auto x = cross(a, b), y = cross(c, d);
          mp.assign(x.begin(), x.end());
          mg.assign(y.begin(), y.end());
        }
        double s = 0.0;
        for (std::size_t k = 0; k < mp.size(); ++k) s += l1 ? std::abs(mp[k] - mg[k]) : (mp[k] - mg[k]) * (mp[k] - mg[k]);
        total += l1 ? s : std::sqrt(s);
      }
  return total;
}

inline double position_loss(const PoseSequence& p, const PoseSequence& g) {
  double s = 0.0;
  for (std::size_t t = 0; t < p.frames; ++t)
    for (std::size_t j = 0; j < p.joints; ++j)
      for (std::size_t k = 0; k < p.dims; ++k) {
        const double d = p.at(t, j, k) - g.at(t, j, k);
        s += d * d;
      }
  return s;
}

inline double dist_rooted(const PoseSequence& p, const PoseSequence& g, std::size_t t, std::size_t j, std::size_t root) {
  double s = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double d = (p.at(t, j, k) - p.at(t, root, k)) - (g.at(t, j, k) - g.at(t, root, k));
    s += d * d;
  }
  return std::sqrt(s);
}

inline double mpjpe(const PoseSequence& p, const PoseSequence& g, std::size_t root) {
  double s = 0.0;
  for (std::size_t t = 0; t < p.frames; ++t)
    for (std::size_t j = 0; j < p.joints; ++j) s += dist_rooted(p, g, t, j, root);
  return s / static_cast<double>(p.frames * p.joints);
}

inline double mpjve(const PoseSequence& p, const PoseSequence& g, std::size_t root) {
  double s = 0.0;
  for (std::size_t t = 1; t < p.frames; ++t)
    for (std::size_t j = 0; j < p.joints; ++j) {
      double e = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double vp = (p.at(t, j, k) - p.at(t, root, k)) - (p.at(t - 1, j, k) - p.at(t - 1, root, k));
        const double vg = (g.at(t, j, k) - g.at(t, root, k)) - (g.at(t - 1, j, k) - g.at(t - 1, root, k));
        e += (vp - vg) * (vp - vg);
      }
      s += std::sqrt(e);
    }
  return s / static_cast<double>((p.frames - 1) * p.joints);
}

/// PCK at `th` (strictly below) and AUC as the mean PCK over 5, 10, ..., 150 mm.
inline std::pair<double, double> pck_auc(const PoseSequence& p, const PoseSequence& g, std::size_t root, double th = 150.0) {
  auto pck = [&](double thr) {
    double ok = 0.0;
    for (std::size_t t = 0; t < p.frames; ++t)
      for (std::size_t j = 0; j < p.joints; ++j) ok += dist_rooted(p, g, t, j, root) < thr ? 1.0 : 0.0;
    return ok / static_cast<double>(p.frames * p.joints);
  };
  double auc = 0.0;
  for (int k = 1; k <= 30; ++k) auc += pck(5.0 * k);
  return {pck(th), auc / 30.0};
}

/// Protocol 2 via Horn's quaternion method for the rotation, then the
/// least-squares scale.
inline double mpjpe_p2(const PoseSequence& p, const PoseSequence& g, bool with_scale = true) {
  double total = 0.0;
  for (std::size_t t = 0; t < p.frames; ++t) {
    Eigen::Vector3d mp = Eigen::Vector3d::Zero(), mg = Eigen::Vector3d::Zero();
    for (std::size_t j = 0; j < p.joints; ++j)
      for (int k = 0; k < 3; ++k) {
        mp(k) += p.at(t, j, k) / static_cast<double>(p.joints);
        mg(k) += g.at(t, j, k) / static_cast<double>(p.joints);
      }
    Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
    std::vector<Eigen::Vector3d> a(p.joints), b(p.joints);
    for (std::size_t j = 0; j < p.joints; ++j) {
      for (int k = 0; k < 3; ++k) {
        a[j](k) = p.at(t, j, k) - mp(k);
        b[j](k) = g.at(t, j, k) - mg(k);
      }
      S += a[j] * b[j].transpose();
    }
    Eigen::Matrix4d N;
    N << S(0, 0) + S(1, 1) + S(2, 2), S(1, 2) - S(2, 1), S(2, 0) - S(0, 2), S(0, 1) - S(1, 0),
        S(1, 2) - S(2, 1), S(0, 0) - S(1, 1) - S(2, 2), S(0, 1) + S(1, 0), S(2, 0) + S(0, 2),
        S(2, 0) - S(0, 2), S(0, 1) + S(1, 0), -S(0, 0) + S(1, 1) - S(2, 2), S(1, 2) + S(2, 1),
        S(0, 1) - S(1, 0), S(2, 0) + S(0, 2), S(1, 2) + S(2, 1), -S(0, 0) - S(1, 1) + S(2, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(N);
    const Eigen::Vector4d q = es.eigenvectors().col(3);
    const Eigen::Quaterniond quat(q(0), q(1), q(2), q(3));
    const Eigen::Matrix3d R = quat.normalized().toRotationMatrix();
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < p.joints; ++j) {
      num += b[j].dot(R * a[j]);
      den += a[j].squaredNorm();
    }
    const double s = with_scale ? num / den : 1.0;
    for (std::size_t j = 0; j < p.joints; ++j) total += (s * R * a[j] - b[j]).norm();
  }
  return total / static_cast<double>(p.frames * p.joints);
}

inline PoseSequence random_pose(std::size_t T, std::size_t M, std::size_t D, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  PoseSequence p(T, M, D);
  for (auto& v : p.coords) v = n(rng);
  return p;
}

}  // namespace oracle
