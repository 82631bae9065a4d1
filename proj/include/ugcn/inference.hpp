#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ugcn/error.hpp"
#include "ugcn/model.hpp"
#include "ugcn/pose.hpp"
#include "ugcn/skeleton.hpp"

namespace ugcn {

struct InferenceConfig {
  std::size_t window = 96;
  std::size_t step = 5;
  bool flip_test = true;

  void validate() const {
    if (window == 0 || step == 0 || step > window) throw InvalidConfig("need 1 <= step <= window");
  }
};

/// Maps a batch of 2-D windows to 3-D windows of the same length.
using BatchLifter = std::function<std::vector<PoseSequence>(const std::vector<PoseSequence>&)>;

/// Adapts a single-window lifter to the batch interface.
template <typename F>
BatchLifter batched(F lifter) {
  return [lifter](const std::vector<PoseSequence>& windows) mutable {
    std::vector<PoseSequence> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(lifter(w));
    return out;
  };
}

inline BatchLifter model_lifter(UgcnModel& model) {
  return [&model](const std::vector<PoseSequence>& windows) { return model.predict_batch(windows); };
}

/// Window start frames: 0, step, 2*step, ... plus a final window clamped to
/// end exactly at `length`.
inline std::vector<std::size_t> window_starts(std::size_t length, std::size_t window, std::size_t step) {
  if (length < window)
    throw SequenceTooShort("sequence of " + std::to_string(length) + " frames, window " + std::to_string(window));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window <= length; s += step) starts.push_back(s);
  if (starts.back() + window < length) starts.push_back(length - window);
  return starts;
}

namespace detail {

inline void accumulate(PoseSequence& sum, const PoseSequence& part, std::size_t offset, double weight) {
  const std::size_t stride = part.joints * part.dims;
  for (std::size_t i = 0; i < part.coords.size(); ++i) sum.coords[offset * stride + i] += weight * part.coords[i];
}

}  // namespace detail

/// (f(p) + unflip(f(flip(p)))) / 2 for every window in the batch.
inline std::vector<PoseSequence> flip_averaged(const BatchLifter& lifter, const std::vector<PoseSequence>& windows,
                                               const SkeletonTopology& topo) {
  std::vector<PoseSequence> all = windows;
  for (const auto& w : windows) all.push_back(flip_pose(w, topo));
  std::vector<PoseSequence> pred = lifter(all);
  if (pred.size() != all.size()) throw ShapeMismatch("lifter returned the wrong number of windows");
  std::vector<PoseSequence> out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    PoseSequence plain = pred[i];
    const PoseSequence mirrored = flip_pose(pred[windows.size() + i], topo);
    for (std::size_t k = 0; k < plain.coords.size(); ++k) plain.coords[k] = 0.5 * (plain.coords[k] + mirrored.coords[k]);
    out.push_back(std::move(plain));
  }
  return out;
}

inline PoseSequence flip_invariant_predict(const BatchLifter& lifter, const PoseSequence& p, const SkeletonTopology& topo) {
  return flip_averaged(lifter, {p}, topo).front();
}

inline PoseSequence flip_invariant_predict(UgcnModel& model, const PoseSequence& p) {
  return flip_invariant_predict(model_lifter(model), p, model.topology());
}

/// Full-length estimate: every frame is the mean of all window predictions
/// covering it. `topo` is required only when flip_test is on.
inline PoseSequence sliding_window_predict(const BatchLifter& lifter, const PoseSequence& p, const InferenceConfig& cfg,
                                           const SkeletonTopology* topo = nullptr) {
  cfg.validate();
  if (cfg.flip_test && topo == nullptr) throw InvalidConfig("flip test needs a topology");
  const auto starts = window_starts(p.frames, cfg.window, cfg.step);
  std::vector<PoseSequence> windows;
  windows.reserve(starts.size());
  for (auto s : starts) windows.push_back(p.slice(s, cfg.window));
  const std::vector<PoseSequence> pred = cfg.flip_test ? flip_averaged(lifter, windows, *topo) : lifter(windows);
  if (pred.size() != windows.size()) throw ShapeMismatch("lifter returned the wrong number of windows");

  const std::size_t dims = pred.front().dims;
  PoseSequence sum(p.frames, p.joints, dims);
  std::vector<double> cover(p.frames, 0.0);
  for (std::size_t w = 0; w < starts.size(); ++w) {
    if (pred[w].frames != cfg.window || pred[w].joints != p.joints || pred[w].dims != dims)
      throw ShapeMismatch("lifter output window has the wrong shape");
    detail::accumulate(sum, pred[w], starts[w], 1.0);
    for (std::size_t t = 0; t < cfg.window; ++t) cover[starts[w] + t] += 1.0;
  }
  const std::size_t stride = p.joints * dims;
  for (std::size_t t = 0; t < p.frames; ++t)
    for (std::size_t i = 0; i < stride; ++i) sum.coords[t * stride + i] /= cover[t];
  return sum;
}

inline PoseSequence sliding_window_predict(UgcnModel& model, const PoseSequence& p, const InferenceConfig& cfg) {
  if (cfg.window != model.config().frames) throw InvalidConfig("inference window must equal the model input length");
  return sliding_window_predict(model_lifter(model), p, cfg, &model.topology());
}

}  // namespace ugcn
