#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ugcn/error.hpp"
#include "ugcn/skeleton.hpp"
#include "ugcn/tensor.hpp"

namespace ugcn {

/// Keypoint sequence laid out frame-major as (frames x joints x dims).
struct PoseSequence {
  std::size_t frames = 0;
  std::size_t joints = 0;
  std::size_t dims = 0;
  std::vector<double> coords;

  PoseSequence() = default;
  PoseSequence(std::size_t t, std::size_t m, std::size_t d, double fill = 0.0)
      : frames(t), joints(m), dims(d), coords(t * m * d, fill) {}
  PoseSequence(std::size_t t, std::size_t m, std::size_t d, std::vector<double> data)
      : frames(t), joints(m), dims(d), coords(std::move(data)) {
    if (coords.size() != t * m * d) throw ShapeMismatch("pose payload does not match (T,M,D)");
  }

  double& at(std::size_t t, std::size_t j, std::size_t d) { return coords[(t * joints + j) * dims + d]; }
  double at(std::size_t t, std::size_t j, std::size_t d) const { return coords[(t * joints + j) * dims + d]; }

  bool same_shape(const PoseSequence& o) const { return frames == o.frames && joints == o.joints && dims == o.dims; }

  Tensor tensor() const { return Tensor(Shape{frames, joints, dims}, coords); }
  static PoseSequence from_tensor(const Tensor& t) {
    if (t.rank() != 3) throw ShapeMismatch("pose tensor must be (T,M,D), got " + shape_str(t.shape()));
    return PoseSequence(t.dim(0), t.dim(1), t.dim(2), t.vec());
  }

  /// Frames [begin, begin + count).
  PoseSequence slice(std::size_t begin, std::size_t count) const {
    if (begin + count > frames) throw ShapeMismatch("slice past end of sequence");
    const std::size_t stride = joints * dims;
    return PoseSequence(count, joints, dims,
                        std::vector<double>(coords.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                                            coords.begin() + static_cast<std::ptrdiff_t>((begin + count) * stride)));
  }

  bool operator==(const PoseSequence&) const = default;
};

inline void require_same_shape(const PoseSequence& a, const PoseSequence& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(what) + ": (" + std::to_string(a.frames) + "," + std::to_string(a.joints) + "," +
                        std::to_string(a.dims) + ") vs (" + std::to_string(b.frames) + "," + std::to_string(b.joints) +
                        "," + std::to_string(b.dims) + ")");
}

/// Horizontal mirror: x -> -x, then joint j moves to mirror_map[j].
inline PoseSequence flip_pose(const PoseSequence& p, const SkeletonTopology& topo) {
  if (p.joints != topo.num_joints()) throw TopologyMismatch("pose joint count differs from topology");
  PoseSequence out(p.frames, p.joints, p.dims);
  const auto& mirror = topo.mirror_map();
  for (std::size_t t = 0; t < p.frames; ++t)
    for (std::size_t j = 0; j < p.joints; ++j)
      for (std::size_t d = 0; d < p.dims; ++d) {
        const double v = p.at(t, j, d);
        out.at(t, mirror[j], d) = d == 0 ? -v : v;
      }
  return out;
}

/// Subtracts the root joint from every joint, frame by frame.
inline PoseSequence root_relative(const PoseSequence& p, std::size_t root) {
  if (root >= p.joints) throw IndexOutOfRange("root joint " + std::to_string(root));
  PoseSequence out = p;
  for (std::size_t t = 0; t < p.frames; ++t)
    for (std::size_t j = 0; j < p.joints; ++j)
      for (std::size_t d = 0; d < p.dims; ++d) out.at(t, j, d) = p.at(t, j, d) - p.at(t, root, d);
  return out;
}

}  // namespace ugcn
