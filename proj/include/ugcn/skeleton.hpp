#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "ugcn/error.hpp"
#include "ugcn/tensor.hpp"

namespace ugcn {

using JointPair = std::pair<std::size_t, std::size_t>;

/// Bone graph of a skeleton plus the left/right mirror permutation.
/// Immutable once constructed; the constructor enforces every invariant.
class SkeletonTopology {
 public:
  SkeletonTopology() = default;

  SkeletonTopology(std::size_t num_joints, std::vector<JointPair> edges, std::size_t root,
                   std::vector<std::size_t> mirror_map)
      : num_joints_(num_joints), edges_(std::move(edges)), root_(root), mirror_(std::move(mirror_map)) {
    if (num_joints_ == 0) throw IndexOutOfRange("skeleton needs at least one joint");
    if (root_ >= num_joints_) throw IndexOutOfRange("root " + std::to_string(root_));
    neighbors_.assign(num_joints_, {});
    for (const auto& [a, b] : edges_) {
      if (a >= num_joints_ || b >= num_joints_)
        throw IndexOutOfRange("edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
      if (a == b) throw IndexOutOfRange("self edge on joint " + std::to_string(a));
      if (!is_adjacent(a, b)) {
        neighbors_[a].push_back(b);
        neighbors_[b].push_back(a);
      }
    }
    if (mirror_.size() != num_joints_) throw InvalidMirror("mirror map length " + std::to_string(mirror_.size()));
    for (std::size_t j = 0; j < num_joints_; ++j) {
      if (mirror_[j] >= num_joints_) throw InvalidMirror("mirror target out of range at " + std::to_string(j));
      if (mirror_[mirror_[j]] != j) throw InvalidMirror("mirror map is not an involution at " + std::to_string(j));
    }
    if (mirror_[root_] != root_) throw InvalidMirror("root must map to itself");

    std::vector<bool> seen(num_joints_, false);
    std::vector<std::size_t> stack{root_};
    seen[root_] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t j = stack.back();
      stack.pop_back();
      for (std::size_t i : neighbors_[j])
        if (!seen[i]) {
          seen[i] = true;
          ++reached;
          stack.push_back(i);
        }
    }
    if (reached != num_joints_)
      throw DisconnectedGraph(std::to_string(num_joints_ - reached) + " joint(s) unreachable from root");
  }

  std::size_t num_joints() const noexcept { return num_joints_; }
  const std::vector<JointPair>& edges() const noexcept { return edges_; }
  std::size_t root() const noexcept { return root_; }
  const std::vector<std::size_t>& mirror_map() const noexcept { return mirror_; }
  const std::vector<std::size_t>& neighbors(std::size_t j) const { return neighbors_.at(j); }

  bool is_adjacent(std::size_t a, std::size_t b) const {
    for (std::size_t n : neighbors_[a])
      if (n == b) return true;
    return false;
  }

  bool operator==(const SkeletonTopology& o) const {
    return num_joints_ == o.num_joints_ && edges_ == o.edges_ && root_ == o.root_ && mirror_ == o.mirror_;
  }

 private:
  std::size_t num_joints_ = 0;
  std::vector<JointPair> edges_;
  std::size_t root_ = 0;
  std::vector<std::size_t> mirror_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

inline SkeletonTopology build_topology(std::size_t num_joints, std::vector<JointPair> edges, std::size_t root,
                                       std::vector<std::size_t> mirror_map) {
  return SkeletonTopology(num_joints, std::move(edges), root, std::move(mirror_map));
}

inline std::vector<std::size_t> identity_mirror(std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = i;
  return m;
}

// 17-joint layout:
//   0 hip (root)   1 r_hip   2 r_knee  3 r_ankle  4 l_hip  5 l_knee  6 l_ankle
//   7 spine        8 thorax  9 neck   10 head    11 l_shoulder 12 l_elbow
//  13 l_wrist     14 r_shoulder 15 r_elbow 16 r_wrist
inline const std::array<const char*, 17>& human17_joint_names() {
  static const std::array<const char*, 17> names{
      "hip",   "r_hip",      "r_knee",  "r_ankle", "l_hip",      "l_knee",  "l_ankle", "spine",  "thorax",
      "neck",  "head",       "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist"};
  return names;
}

inline SkeletonTopology human17_topology() {
  std::vector<JointPair> edges{{0, 1}, {1, 2},  {2, 3},  {0, 4},   {4, 5},   {5, 6},   {0, 7},   {7, 8},
                               {8, 9}, {9, 10}, {8, 11}, {11, 12}, {12, 13}, {8, 14}, {14, 15}, {15, 16}};
  std::vector<std::size_t> mirror = identity_mirror(17);
  for (auto [l, r] : {JointPair{1, 4}, {2, 5}, {3, 6}, {11, 14}, {12, 15}, {13, 16}}) {
    mirror[l] = r;
    mirror[r] = l;
  }
  return build_topology(17, std::move(edges), 0, std::move(mirror));
}

/// Topology with joint j renamed perm[j].
inline SkeletonTopology relabel(const SkeletonTopology& topo, const std::vector<std::size_t>& perm) {
  std::vector<JointPair> edges;
  for (auto [a, b] : topo.edges()) edges.emplace_back(perm.at(a), perm.at(b));
  std::vector<std::size_t> mirror(topo.num_joints());
  for (std::size_t j = 0; j < topo.num_joints(); ++j) mirror[perm[j]] = perm[topo.mirror_map()[j]];
  return build_topology(topo.num_joints(), std::move(edges), perm.at(topo.root()), std::move(mirror));
}

struct HopDistances {
  std::vector<std::size_t> h;
};

inline HopDistances hop_distances(const SkeletonTopology& topo) {
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  HopDistances d{std::vector<std::size_t>(topo.num_joints(), unset)};
  std::queue<std::size_t> q;
  d.h[topo.root()] = 0;
  q.push(topo.root());
  while (!q.empty()) {
    const std::size_t j = q.front();
    q.pop();
    for (std::size_t i : topo.neighbors(j))
      if (d.h[i] == unset) {
        d.h[i] = d.h[j] + 1;
        q.push(i);
      }
  }
  return d;
}

/// Three normalized adjacency matrices, one per neighbor subset:
///   0: same hop distance as the center joint (always includes the joint itself)
///   1: farther from the root than the center
///   2: closer to the root than the center
/// Entry (j, i) of subset l is 1 / |{i' in B(j) : label(j, i') = l}|.
class PartitionedAdjacency {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double weight;
  };

  static constexpr std::size_t kSubsets = 3;

  PartitionedAdjacency() = default;
  explicit PartitionedAdjacency(std::array<Tensor, kSubsets> matrices) : matrices_(std::move(matrices)) {
    for (std::size_t l = 0; l < kSubsets; ++l) {
      const auto& A = matrices_[l];
      if (A.rank() != 2 || A.dim(0) != A.dim(1) || A.dim(0) != matrices_[0].dim(0))
        throw ShapeMismatch("adjacency subset " + std::to_string(l) + " has shape " + shape_str(A.shape()));
      const std::size_t M = A.dim(0);
      for (std::size_t j = 0; j < M; ++j)
        for (std::size_t i = 0; i < M; ++i)
          if (A[j * M + i] != 0.0) entries_[l].push_back({j, i, A[j * M + i]});
    }
  }

  std::size_t num_joints() const { return matrices_[0].rank() ? matrices_[0].dim(0) : 0; }
  const Tensor& matrix(std::size_t label) const { return matrices_.at(label); }
  const std::vector<Entry>& entries(std::size_t label) const { return entries_.at(label); }

 private:
  std::array<Tensor, kSubsets> matrices_;
  std::array<std::vector<Entry>, kSubsets> entries_;
};

inline std::size_t subset_label(std::size_t h_center, std::size_t h_neighbor) {
  if (h_center == h_neighbor) return 0;
  return h_center < h_neighbor ? 1 : 2;
}

inline PartitionedAdjacency partition_adjacency(const SkeletonTopology& topo, const HopDistances& hops) {
  const std::size_t M = topo.num_joints();
  if (hops.h.size() != M) throw ShapeMismatch("hop distances do not match topology");
  std::array<Tensor, 3> mats{Tensor(Shape{M, M}), Tensor(Shape{M, M}), Tensor(Shape{M, M})};
  for (std::size_t j = 0; j < M; ++j) {
    std::vector<std::size_t> hood{j};
    hood.insert(hood.end(), topo.neighbors(j).begin(), topo.neighbors(j).end());
    std::array<std::size_t, 3> count{};
    for (std::size_t i : hood) ++count[subset_label(hops.h[j], hops.h[i])];
    for (std::size_t i : hood) {
      const std::size_t l = subset_label(hops.h[j], hops.h[i]);
      mats[l][j * M + i] = 1.0 / static_cast<double>(count[l]);
    }
  }
  return PartitionedAdjacency(std::move(mats));
}

inline PartitionedAdjacency partition_adjacency(const SkeletonTopology& topo) {
  return partition_adjacency(topo, hop_distances(topo));
}

}  // namespace ugcn
