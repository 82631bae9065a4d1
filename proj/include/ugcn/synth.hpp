#pragma once

// Synthetic data: the 1-D pendulum toy and projected skeleton motion for
// desk-scale lifting experiments. Every generator is a pure function of its
// spec (including the seed).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ugcn/error.hpp"
#include "ugcn/model.hpp"
#include "ugcn/pose.hpp"
#include "ugcn/skeleton.hpp"
#include "ugcn/training.hpp"

namespace ugcn {

// ------------------------------------------------------------------ pendulum

struct PendulumTraces {
  PoseSequence gt;       // amplitude * sin(2 pi t / period)
  PoseSequence similar;  // phase-shifted sine
  PoseSequence smooth;   // smooth curve of a different tendency
  PoseSequence noisy;    // alternating-sign perturbation of gt
  double distance = 0.0; // common mean l1 distance to gt
};

inline double mean_l1_distance(const PoseSequence& a, const PoseSequence& b) {
  require_same_shape(a, b, "mean_l1_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) s += std::abs(a.coords[i] - b.coords[i]);
  return s / static_cast<double>(a.frames * a.joints);
}

inline PendulumTraces gen_pendulum(std::size_t frames, double amplitude, double period, std::uint64_t seed) {
  if (!(amplitude > 0.0) || !(period > 1.0) || static_cast<double>(frames) < 2.0 * period)
    throw InvalidParams("pendulum needs amplitude > 0, period > 1 and frames >= 2 * period");
  std::mt19937_64 rng(seed);
  const double phase = std::uniform_real_distribution<double>(0.3, 1.0)(rng);
  const double other_phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  const double noise_sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
  const double w = 2.0 * std::numbers::pi / period;

  std::vector<double> gt(frames), ra(frames), rb(frames), rc(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double x = static_cast<double>(t);
    gt[t] = amplitude * std::sin(w * x);
    ra[t] = amplitude * std::sin(w * x + phase) - gt[t];
    rb[t] = amplitude * std::sin(2.0 * w * x + other_phase) - gt[t];
    rc[t] = (t % 2 == 0 ? 1.0 : -1.0) * noise_sign;
  }
  // The alternating trace must out-run the largest ground-truth step so its
  // first difference flips sign every frame.
  const double max_step = 2.0 * amplitude * std::sin(std::min(std::numbers::pi / period, std::numbers::pi / 2.0));
  const double d = std::max(0.25 * amplitude, 0.75 * max_step);

  auto make = [&](const std::vector<double>& residual) {
    double mean_abs = 0.0;
    for (double r : residual) mean_abs += std::abs(r);
    mean_abs /= static_cast<double>(frames);
    PoseSequence p(frames, 1, 1);
    for (std::size_t t = 0; t < frames; ++t) p.coords[t] = gt[t] + residual[t] * (d / mean_abs);
    return p;
  };
  PendulumTraces out;
  out.gt = PoseSequence(frames, 1, 1, gt);
  out.similar = make(ra);
  out.smooth = make(rb);
  out.noisy = make(rc);
  out.distance = d;
  return out;
}

// ------------------------------------------------------ skeleton motion data

struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 1.0;  // Hz
  double phase = 0.0;

  double at(double seconds) const { return amplitude * std::sin(2.0 * std::numbers::pi * frequency * seconds + phase); }
};

using SinusoidSum = std::vector<Sinusoid>;

inline double evaluate(const SinusoidSum& s, double seconds) {
  double v = 0.0;
  for (const auto& c : s) v += c.at(seconds);
  return v;
}

struct PinholeCamera {
  double focal = 5000.0;  // pixels
  double cx = 0.0;
  double cy = 0.0;
  double distance = 5000.0;  // mm from camera centre to the subject's rest root
};

/// Parameters of one synthetic sequence. Each joint's local rotation about
/// the x/y/z axes is a sum of sinusoids; the root additionally translates.
struct SynthMotionSpec {
  SkeletonTopology topology;
  std::vector<std::array<double, 3>> rest_offsets;  // offset from parent, body frame (y up), mm
  std::vector<std::array<SinusoidSum, 3>> rotation;  // per joint, radians
  std::array<SinusoidSum, 3> root_translation;       // mm
  double heading = 0.0;                              // rest yaw, radians
  std::size_t frames = 128;
  double frame_rate = 50.0;
  PinholeCamera camera;
  double noise_sigma = 0.0;  // pixels
  std::uint64_t seed = 0;
  std::string label;

  void validate() const {
    const std::size_t M = topology.num_joints();
    if (M == 0 || rest_offsets.size() != M || rotation.size() != M) throw InvalidParams("motion spec joint count");
    if (frames == 0 || !(frame_rate > 0.0)) throw InvalidParams("frames and frame rate must be positive");
    if (!(noise_sigma >= 0.0)) throw InvalidParams("noise sigma must be non-negative");
    if (!(camera.focal > 0.0)) throw InvalidParams("focal length must be positive");
    auto check = [](const SinusoidSum& s) {
      for (const auto& c : s)
        if (!(c.frequency > 0.0)) throw InvalidParams("sinusoid frequencies must be positive");
    };
    for (const auto& j : rotation)
      for (const auto& axis : j) check(axis);
    for (const auto& axis : root_translation) check(axis);
  }
};

/// Parent of every joint in the breadth-first tree rooted at the root joint
/// (the root is its own parent), and a parent-before-child joint order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> kinematic_tree(const SkeletonTopology& topo) {
  const auto hops = hop_distances(topo);
  const std::size_t M = topo.num_joints();
  std::vector<std::size_t> parent(M, topo.root()), order;
  std::vector<bool> seen(M, false);
  std::vector<std::size_t> frontier{topo.root()};
  seen[topo.root()] = true;
  while (!frontier.empty()) {
    std::vector<std::size_t> next;
    for (auto j : frontier) {
      order.push_back(j);
      for (auto i : topo.neighbors(j))
        if (!seen[i] && hops.h[i] == hops.h[j] + 1) {
          seen[i] = true;
          parent[i] = j;
          next.push_back(i);
        }
    }
    frontier = std::move(next);
  }
  return {parent, order};
}

/// Rest pose offsets: anatomical proportions for the 17-joint layout,
/// otherwise a generic 150 mm fan.
inline std::vector<std::array<double, 3>> default_rest_offsets(const SkeletonTopology& topo) {
  if (topo == human17_topology()) {
    return {{0, 0, 0},       {-130, 0, 0},  {0, -430, 0},  {0, -420, 0},   {130, 0, 0},   {0, -430, 0},
            {0, -420, 0},    {0, 230, 0},   {0, 240, 0},   {0, 110, 0},    {0, 120, 0},   {160, -20, 0},
            {0, -280, 0},    {0, -250, 0},  {-160, -20, 0}, {0, -280, 0},  {0, -250, 0}};
  }
  std::vector<std::array<double, 3>> off(topo.num_joints(), {0.0, 0.0, 0.0});
  for (std::size_t j = 0; j < off.size(); ++j) {
    if (j == topo.root()) continue;
    const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(off.size());
    off[j] = {150.0 * std::cos(a), 150.0 * std::sin(a), 0.0};
  }
  return off;
}

/// Draws a random motion spec. All joints share one gait frequency; mirror
/// pairs swing in antiphase and most motion is a forward/backward swing.
/// Actions differ in tempo and reach.
inline SynthMotionSpec random_motion_spec(const SkeletonTopology& topo, std::size_t frames, double noise_sigma,
                                          std::uint64_t seed, std::size_t action = 0) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  SynthMotionSpec s;
  s.topology = topo;
  s.rest_offsets = default_rest_offsets(topo);
  s.frames = frames;
  s.noise_sigma = noise_sigma;
  s.seed = seed;
  s.label = "action" + std::to_string(action);
  const double tempo = 1.0 + 0.4 * static_cast<double>(action % 3);
  const double reach = 1.0 - 0.25 * static_cast<double>(action % 3);
  const double gait = tempo * uni(0.4, 0.8);  // Hz

  const std::size_t M = topo.num_joints();
  const auto& mirror = topo.mirror_map();
  s.rotation.resize(M);
  const std::array<double, 3> axis_scale{0.7, 0.1, 0.25};  // swing, twist, sideways
  for (std::size_t j = 0; j < M; ++j) {
    if (j == topo.root() || mirror[j] < j) continue;
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const double a1 = reach * axis_scale[axis] * uni(0.3, 1.0), a2 = 0.3 * a1 * uni(0.0, 1.0);
      const double p1 = uni(0.0, two_pi), p2 = uni(0.0, two_pi);
      s.rotation[j][axis] = {{a1, gait, p1}, {a2, 2.0 * gait, p2}};
      if (mirror[j] != j) {
        // sideways and twist angles flip sign under reflection
        const double sign = axis == 0 ? 1.0 : -1.0;
        s.rotation[mirror[j]][axis] = {{sign * a1, gait, p1 + std::numbers::pi}, {sign * a2, 2.0 * gait, p2}};
      }
    }
  }
  auto& root = s.rotation[topo.root()];
  root[1].push_back({uni(0.1, 0.4), uni(0.03, 0.1), uni(0.0, two_pi)});  // slow turning
  root[0].push_back({uni(0.02, 0.08), gait, uni(0.0, two_pi)});
  s.heading = uni(-std::numbers::pi / 3.0, std::numbers::pi / 3.0);
  s.root_translation[0].push_back({uni(100.0, 400.0), uni(0.05, 0.2), uni(0.0, two_pi)});
  s.root_translation[1].push_back({uni(10.0, 40.0), 2.0 * gait, uni(0.0, two_pi)});
  s.root_translation[2].push_back({uni(100.0, 600.0), uni(0.05, 0.2), uni(0.0, two_pi)});
  return s;
}

inline Eigen::Matrix3d euler_xyz(double ax, double ay, double az) {
  return (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

/// Projects a camera-frame point (mm, z forward) to pixels.
inline std::array<double, 2> project(const PinholeCamera& cam, const Eigen::Vector3d& p) {
  if (!(p.z() > 1.0)) throw PointBehindCamera("point at depth " + std::to_string(p.z()) + " mm");
  return {cam.focal * p.x() / p.z() + cam.cx, cam.focal * p.y() / p.z() + cam.cy};
}

/// Camera-frame 3-D positions (absolute, mm) of every joint in every frame.
inline PoseSequence synth_camera_positions(const SynthMotionSpec& spec) {
  spec.validate();
  const auto [parent, order] = kinematic_tree(spec.topology);
  const std::size_t M = spec.topology.num_joints(), root = spec.topology.root();
  // body frame: x right, y up, z towards the camera; camera frame: y down, z forward
  Eigen::Matrix3d body_to_cam;
  body_to_cam << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  PoseSequence out(spec.frames, M, 3);
  std::vector<Eigen::Matrix3d> R(M);
  std::vector<Eigen::Vector3d> P(M);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double sec = static_cast<double>(t) / spec.frame_rate;
    for (std::size_t j : order) {
      const auto& rot = spec.rotation[j];
      Eigen::Matrix3d local = euler_xyz(evaluate(rot[0], sec), evaluate(rot[1], sec), evaluate(rot[2], sec));
      if (j == root) {
        R[j] = Eigen::AngleAxisd(spec.heading, Eigen::Vector3d::UnitY()).toRotationMatrix() * local;
        P[j] = Eigen::Vector3d(evaluate(spec.root_translation[0], sec), evaluate(spec.root_translation[1], sec),
                               evaluate(spec.root_translation[2], sec));
      } else {
        const Eigen::Vector3d off(spec.rest_offsets[j][0], spec.rest_offsets[j][1], spec.rest_offsets[j][2]);
        P[j] = P[parent[j]] + R[parent[j]] * off;
        R[j] = R[parent[j]] * local;
      }
    }
    for (std::size_t j = 0; j < M; ++j) {
      Eigen::Vector3d c = body_to_cam * P[j];
      c.z() += spec.camera.distance;
      for (int d = 0; d < 3; ++d) out.at(t, j, static_cast<std::size_t>(d)) = c(d);
    }
  }
  return out;
}

/// Projects absolute camera-frame poses and adds isotropic Gaussian noise of
/// `noise_sigma` pixels drawn from `noise_seed`.
inline PoseSequence project_sequence(const PoseSequence& cam3d, const PinholeCamera& cam, double noise_sigma,
                                     std::uint64_t noise_seed) {
  PoseSequence p2(cam3d.frames, cam3d.joints, 2);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t t = 0; t < cam3d.frames; ++t)
    for (std::size_t j = 0; j < cam3d.joints; ++j) {
      const auto uv = project(cam, Eigen::Vector3d(cam3d.at(t, j, 0), cam3d.at(t, j, 1), cam3d.at(t, j, 2)));
      // noise is drawn even when sigma is 0 so every sigma shares one realization
      const double nx = z(rng), ny = z(rng);
      p2.at(t, j, 0) = uv[0] + noise_sigma * nx;
      p2.at(t, j, 1) = uv[1] + noise_sigma * ny;
    }
  return p2;
}

/// One paired sequence: noisy pixel keypoints and root-relative 3-D (mm).
inline PairedSequence gen_lifting_sequence(const SynthMotionSpec& spec) {
  const PoseSequence cam3d = synth_camera_positions(spec);
  PairedSequence s;
  s.p2d = project_sequence(cam3d, spec.camera, spec.noise_sigma, detail::splitmix64(spec.seed ^ 0x6e6f697365ull));
  s.p3d = root_relative(cam3d, spec.topology.root());
  s.label = spec.label;
  return s;
}

struct SynthDatasetSpec {
  std::size_t sequences = 32;
  std::size_t frames = 128;
  double noise_sigma = 0.0;
  std::size_t num_actions = 3;
  std::uint64_t seed = 0;
};

inline std::vector<PairedSequence> gen_lifting_dataset(const SynthDatasetSpec& spec, const SkeletonTopology& topo) {
  if (spec.sequences == 0 || spec.num_actions == 0) throw InvalidParams("dataset needs sequences and actions");
  std::vector<PairedSequence> data;
  data.reserve(spec.sequences);
  for (std::size_t i = 0; i < spec.sequences; ++i) {
    const auto ms = random_motion_spec(topo, spec.frames, spec.noise_sigma, detail::mix_seed(spec.seed, i),
                                       i % spec.num_actions);
    data.push_back(gen_lifting_sequence(ms));
  }
  return data;
}

}  // namespace ugcn
