#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ugcn/autodiff.hpp"
#include "ugcn/nn.hpp"
#include "ugcn/pose.hpp"
#include "ugcn/skeleton.hpp"

namespace ugcn {

struct ModelConfig {
  std::size_t frames = 96;
  std::size_t num_joints = 17;
  std::size_t in_dims = 2;
  std::size_t width = 64;
  std::size_t down_blocks = 9;
  std::vector<std::size_t> strided_blocks{2, 4, 6, 8};  // 1-based positions in the downsampling stage
  std::size_t up_blocks = 4;
  std::size_t kernel = 5;
  double dropout = 0.5;
  bool residual = false;
  // Express non-root keypoints relative to the root keypoint; the root keeps
  // its image position. Lossless, and spares the network from recovering
  // fine offsets out of absolute image coordinates.
  bool center_input = true;
  // Affine input normalization (x - mean) * scale and output scale; set by
  // the trainer from data statistics and stored with the checkpoint.
  std::array<double, 2> input_mean{0.0, 0.0};
  double input_scale = 1.0;
  double output_scale = 1.0;

  std::size_t num_scales() const { return strided_blocks.size(); }

  void validate() const {
    if (width == 0) throw InvalidConfig("width must be positive");
    if (in_dims != 2) throw InvalidConfig("input must be 2-D keypoints");
    if (kernel % 2 == 0 || kernel == 0) throw InvalidConfig("temporal kernel must be odd");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidConfig("dropout must lie in [0,1)");
    if (down_blocks == 0) throw InvalidConfig("need at least one downsampling block");
    std::size_t prev = 0;
    for (auto b : strided_blocks) {
      if (b < 1 || b > down_blocks) throw InvalidConfig("strided block position " + std::to_string(b) + " out of range");
      if (b <= prev) throw InvalidConfig("strided block positions must be strictly increasing");
      prev = b;
    }
    if (up_blocks != strided_blocks.size())
      throw InvalidConfig("upsampling blocks (" + std::to_string(up_blocks) + ") must pair with strided blocks (" +
                          std::to_string(strided_blocks.size()) + ")");
    const std::size_t factor = std::size_t{1} << strided_blocks.size();
    if (frames == 0 || frames % factor != 0)
      throw InvalidConfig("frames " + std::to_string(frames) + " not divisible by " + std::to_string(factor));
  }

  /// Keeps the first `pairs` stride-2 blocks and as many upsampling units.
  ModelConfig with_scale_pairs(std::size_t pairs) const {
    static const std::vector<std::size_t> kDefault{2, 4, 6, 8};
    if (pairs > kDefault.size()) throw InvalidConfig("at most 4 downsample/upsample pairs");
    ModelConfig c = *this;
    c.strided_blocks.assign(kDefault.begin(), kDefault.begin() + static_cast<std::ptrdiff_t>(pairs));
    c.up_blocks = pairs;
    return c;
  }
};

/// Per-layer trace of a forward pass, recorded on request.
struct ForwardTrace {
  struct Step {
    std::string stage;
    Shape shape;
  };
  std::vector<Step> steps;
  // (upsampled branch shape, cached skip shape) for every skip addition.
  std::vector<std::pair<Shape, Shape>> skips;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// (N, T, M, D) -> (N, D, T, M), applying (x - mean[d]) * scale. With a
/// `root`, every other joint becomes (x_j - x_root) * scale instead.
inline Var pose_to_channels(const Var& x, const std::array<double, 2>& mean, double scale,
                            std::optional<std::size_t> root = std::nullopt) {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[3] > 2) throw ShapeMismatch("expected (N,T,M,2) input, got " + shape_str(s));
  const std::size_t N = s[0], T = s[1], M = s[2], D = s[3];
  if (root && *root >= M) throw IndexOutOfRange("root joint " + std::to_string(*root));
  const bool centered = root.has_value();
  const std::size_t r = root.value_or(0);
  auto in_at = [=](std::size_t n, std::size_t t, std::size_t m, std::size_t d) { return ((n * T + t) * M + m) * D + d; };
  auto out_at = [=](std::size_t n, std::size_t t, std::size_t m, std::size_t d) { return ((n * D + d) * T + t) * M + m; };
  Tensor out(Shape{N, D, T, M});
  const auto& X = x.value();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t d = 0; d < D; ++d) {
          const double origin = centered && m != r ? X[in_at(n, t, r, d)] : mean[d];
          out[out_at(n, t, m, d)] = (X[in_at(n, t, m, d)] - origin) * scale;
        }
  return make_op(std::move(out), {x}, [=](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t d = 0; d < D; ++d) {
            const double g = scale * self.grad[out_at(n, t, m, d)];
            p.grad[in_at(n, t, m, d)] += g;
            if (centered && m != r) p.grad[in_at(n, t, r, d)] -= g;
          }
  });
}

/// (N, D, T, M) -> (N, T, M, D) scaled by `scale`, with the root joint
/// subtracted so the root sits at the origin in every frame.
inline Var channels_to_root_relative(const Var& x, std::size_t root, double scale) {
  const Shape& s = x.shape();
  if (s.size() != 4) throw ShapeMismatch("expected (N,D,T,M), got " + shape_str(s));
  const std::size_t N = s[0], D = s[1], T = s[2], M = s[3];
  if (root >= M) throw IndexOutOfRange("root joint " + std::to_string(root));
  Tensor out(Shape{N, T, M, D});
  auto in_at = [=](std::size_t n, std::size_t d, std::size_t t, std::size_t m) { return ((n * D + d) * T + t) * M + m; };
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t d = 0; d < D; ++d)
          out[((n * T + t) * M + m) * D + d] = scale * (x.value()[in_at(n, d, t, m)] - x.value()[in_at(n, d, t, root)]);
  return make_op(std::move(out), {x}, [=](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t d = 0; d < D; ++d) {
            const double g = scale * self.grad[((n * T + t) * M + m) * D + d];
            p.grad[in_at(n, d, t, m)] += g;
            p.grad[in_at(n, d, t, root)] -= g;
          }
  });
}

/// Per-scale 1x1 transform used by the merging stage.
struct PointwiseParams {
  Var weight;  // (C_out, C_in, 1)
  Var bias;    // (C_out)
};

/// Final st-gcn regressor: spatial graph conv then a temporal conv to 3
/// channels, linear output.
struct RegressorParams {
  std::array<Var, 3> spatial;
  Var temporal;  // (3, C, K)
  Var bias;      // (3)
};

class UgcnModel {
 public:
  UgcnModel() = default;

  UgcnModel(ModelConfig config, SkeletonTopology topo, std::uint64_t seed)
      : config_(std::move(config)), topo_(std::move(topo)) {
    config_.validate();
    if (config_.num_joints != topo_.num_joints())
      throw InvalidConfig("config has " + std::to_string(config_.num_joints) + " joints, topology has " +
                          std::to_string(topo_.num_joints()));
    adjacency_ = partition_adjacency(topo_);
    std::mt19937_64 rng(seed);
    const std::size_t W = config_.width, K = config_.kernel;
    embed_ = StgcnBlockParams::create(config_.in_dims, W, K, 1, config_.dropout, rng, false);
    for (std::size_t b = 1; b <= config_.down_blocks; ++b)
      down_.push_back(StgcnBlockParams::create(W, W, K, is_strided(b) ? 2 : 1, config_.dropout, rng, config_.residual));
    for (std::size_t u = 0; u < config_.up_blocks; ++u)
      up_.push_back(StgcnBlockParams::create(W, W, K, 1, config_.dropout, rng, config_.residual));
    const std::size_t scales = std::max<std::size_t>(config_.up_blocks, 1);
    const double pb = 1.0 / std::sqrt(static_cast<double>(W));
    for (std::size_t s = 0; s < scales; ++s)
      merge_.push_back({Var::parameter(Tensor::uniform(Shape{W, W, 1}, -pb, pb, rng)),
                        Var::parameter(Tensor::uniform(Shape{W}, -pb, pb, rng))});
    for (auto& w : regressor_.spatial) w = Var::parameter(Tensor::uniform(Shape{W, W}, -pb, pb, rng));
    const double rb = 1.0 / std::sqrt(static_cast<double>(W * K));
    regressor_.temporal = Var::parameter(Tensor::uniform(Shape{3, W, K}, -rb, rb, rng));
    regressor_.bias = Var::parameter(Tensor::uniform(Shape{3}, -rb, rb, rng));
  }

  // Parameters are shared through Var handles, so copies must be deep.
  UgcnModel(const UgcnModel& o) { *this = o; }
  UgcnModel& operator=(const UgcnModel& o) {
    if (this == &o) return *this;
    config_ = o.config_;
    topo_ = o.topo_;
    adjacency_ = o.adjacency_;
    embed_ = o.embed_;
    down_ = o.down_;
    up_ = o.up_;
    merge_ = o.merge_;
    regressor_ = o.regressor_;
    rebind_after_copy();
    return *this;
  }
  UgcnModel(UgcnModel&&) noexcept = default;
  UgcnModel& operator=(UgcnModel&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }
  ModelConfig& mutable_config() noexcept { return config_; }
  const SkeletonTopology& topology() const noexcept { return topo_; }
  const PartitionedAdjacency& adjacency() const noexcept { return adjacency_; }
  std::size_t num_down_blocks() const { return down_.size(); }
  std::size_t num_up_blocks() const { return up_.size(); }
  std::size_t num_merge_scales() const { return merge_.size(); }

  /// Named trainable parameters in a fixed order.
  std::vector<NamedParam> parameters() {
    std::vector<NamedParam> params;
    std::vector<NamedBuffer> buffers;
    collect(params, buffers);
    return params;
  }

  /// Running statistics of every batch-norm layer.
  std::vector<NamedBuffer> buffers() {
    std::vector<NamedParam> params;
    std::vector<NamedBuffer> buffers;
    collect(params, buffers);
    return buffers;
  }

  void zero_grad() {
    for (auto& p : parameters()) p.var.zero_grad();
  }

  /// input: (N, T, M, 2). Returns root-relative 3-D poses (N, T, M, 3).
  Var forward(const Var& input, Mode mode, std::uint64_t seed = 0, ForwardTrace* trace = nullptr) {
    const Shape& s = input.shape();
    if (s.size() != 4 || s[1] != config_.frames || s[2] != config_.num_joints || s[3] != config_.in_dims)
      throw ShapeMismatch("model expects (N," + std::to_string(config_.frames) + "," + std::to_string(config_.num_joints) +
                          ",2) input, got " + shape_str(s));
    std::size_t block_id = 0;
    auto block_seed = [&] { return detail::splitmix64(seed ^ detail::splitmix64(++block_id)); };
    auto note = [&](const std::string& stage, const Var& v) {
      if (trace) trace->steps.push_back({stage, v.shape()});
    };

    Var h = pose_to_channels(input, config_.input_mean, config_.input_scale,
                             config_.center_input ? std::optional<std::size_t>(topo_.root()) : std::nullopt);
    h = stgcn_block(h, embed_, adjacency_, mode, block_seed());
    note("embed", h);

    std::map<std::size_t, Var> cache;  // temporal length -> last feature at that length
    for (std::size_t b = 0; b < down_.size(); ++b) {
      h = stgcn_block(h, down_[b], adjacency_, mode, block_seed());
      cache[h.shape()[2]] = h;
      note("down" + std::to_string(b + 1), h);
    }

    std::vector<Var> scales;
    for (std::size_t u = 0; u < up_.size(); ++u) {
      h = stgcn_block(h, up_[u], adjacency_, mode, block_seed());
      h = temporal_upsample(h);
      const auto it = cache.find(h.shape()[2]);
      if (it == cache.end() || it->second.shape() != h.shape())
        throw ShapeMismatch("no downsampling feature matches upsampled shape " + shape_str(h.shape()));
      if (trace) trace->skips.emplace_back(h.shape(), it->second.shape());
      h = add(h, it->second);
      note("up" + std::to_string(u + 1), h);
      scales.push_back(h);
    }
    if (scales.empty()) scales.push_back(h);

    Var merged;
    for (std::size_t i = 0; i < scales.size(); ++i) {
      Var f = scales[i];
      while (f.shape()[2] < config_.frames) f = temporal_upsample(f);
      f = conv_time(f, merge_[i].weight, 1, merge_[i].bias);
      merged = merged.valid() ? add(merged, f) : f;
    }
    note("merge", merged);

    Var y = spatial_graph_conv(merged, adjacency_, regressor_.spatial);
    y = conv_time(y, regressor_.temporal, 1, regressor_.bias);
    note("regressor", y);
    return channels_to_root_relative(y, topo_.root(), config_.output_scale);
  }

  /// Eval-mode prediction for a single 2-D sequence of exactly `frames` frames.
  PoseSequence predict(const PoseSequence& p2d) {
    NoGradGuard no_grad;
    if (p2d.dims != 2) throw ShapeMismatch("predict expects 2-D keypoints");
    Var in = Var::constant(Tensor(Shape{1, p2d.frames, p2d.joints, 2}, p2d.coords));
    const Tensor out = forward(in, Mode::eval).value();
    return PoseSequence(p2d.frames, p2d.joints, 3, out.vec());
  }

  /// Eval-mode prediction of many windows in one batch.
  std::vector<PoseSequence> predict_batch(const std::vector<PoseSequence>& windows) {
    if (windows.empty()) return {};
    NoGradGuard no_grad;
    const std::size_t T = config_.frames, M = config_.num_joints;
    std::vector<double> data;
    data.reserve(windows.size() * T * M * 2);
    for (const auto& w : windows) {
      if (w.frames != T || w.joints != M || w.dims != 2) throw ShapeMismatch("predict_batch window shape");
      data.insert(data.end(), w.coords.begin(), w.coords.end());
    }
    const Tensor out = forward(Var::constant(Tensor(Shape{windows.size(), T, M, 2}, std::move(data))), Mode::eval).value();
    std::vector<PoseSequence> result;
    const std::size_t stride = T * M * 3;
    for (std::size_t n = 0; n < windows.size(); ++n)
      result.emplace_back(T, M, 3,
                          std::vector<double>(out.vec().begin() + static_cast<std::ptrdiff_t>(n * stride),
                                              out.vec().begin() + static_cast<std::ptrdiff_t>((n + 1) * stride)));
    return result;
  }

 private:
  bool is_strided(std::size_t position) const {
    for (auto b : config_.strided_blocks)
      if (b == position) return true;
    return false;
  }

  void collect(std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers) {
    embed_.collect("embed", params, buffers);
    for (std::size_t i = 0; i < down_.size(); ++i) down_[i].collect("down" + std::to_string(i + 1), params, buffers);
    for (std::size_t i = 0; i < up_.size(); ++i) up_[i].collect("up" + std::to_string(i + 1), params, buffers);
    for (std::size_t i = 0; i < merge_.size(); ++i) {
      params.push_back({"merge" + std::to_string(i + 1) + ".weight", merge_[i].weight, true});
      params.push_back({"merge" + std::to_string(i + 1) + ".bias", merge_[i].bias, false});
    }
    for (std::size_t l = 0; l < 3; ++l)
      params.push_back({"regressor.spatial" + std::to_string(l), regressor_.spatial[l], true});
    params.push_back({"regressor.temporal", regressor_.temporal, true});
    params.push_back({"regressor.bias", regressor_.bias, false});
  }

  // Replaces every shared parameter handle with a fresh deep copy.
  void rebind_after_copy() {
    auto fresh = [](Var& v) { v = Var::parameter(v.value()); };
    auto fresh_block = [&](StgcnBlockParams& b) {
      for (auto& w : b.spatial) fresh(w);
      fresh(b.temporal);
      fresh(b.norm.gamma);
      fresh(b.norm.beta);
    };
    fresh_block(embed_);
    for (auto& b : down_) fresh_block(b);
    for (auto& b : up_) fresh_block(b);
    for (auto& m : merge_) {
      fresh(m.weight);
      fresh(m.bias);
    }
    for (auto& w : regressor_.spatial) fresh(w);
    fresh(regressor_.temporal);
    fresh(regressor_.bias);
  }

  ModelConfig config_;
  SkeletonTopology topo_;
  PartitionedAdjacency adjacency_;
  StgcnBlockParams embed_;
  std::vector<StgcnBlockParams> down_;
  std::vector<StgcnBlockParams> up_;
  std::vector<PointwiseParams> merge_;
  RegressorParams regressor_;
};

inline UgcnModel build_model(const ModelConfig& config, const SkeletonTopology& topo, std::uint64_t seed) {
  return UgcnModel(config, topo, seed);
}

}  // namespace ugcn
