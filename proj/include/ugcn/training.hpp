#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ugcn/loss.hpp"
#include "ugcn/model.hpp"
#include "ugcn/optim.hpp"
#include "ugcn/pose.hpp"

namespace ugcn {

struct TrainConfig {
  std::size_t epochs = 110;
  std::size_t batch_size = 256;
  LrSchedule schedule;
  double weight_decay = 1e-5;
  std::size_t window = 96;
  std::size_t crops_per_sequence = 1;
  double flip_probability = 0.5;
  // Coordinates are multiplied by this before the loss (mm -> m by default).
  double loss_scale = 1e-3;
  LossConfig loss;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs == 0) throw InvalidConfig("epochs must be positive");
    if (batch_size == 0) throw InvalidConfig("batch size must be at least 1");
    if (window == 0) throw InvalidConfig("window must be positive");
    if (crops_per_sequence == 0) throw InvalidConfig("crops_per_sequence must be positive");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) throw InvalidConfig("flip probability must lie in [0,1]");
    if (!(schedule.initial > 0.0)) throw InvalidConfig("learning rate must be positive");
    if (!(loss_scale > 0.0)) throw InvalidConfig("loss scale must be positive");
    for (std::size_t i = 0; i < schedule.decay_epochs.size(); ++i) {
      if (schedule.decay_epochs[i] >= epochs) throw InvalidConfig("decay epoch beyond training length");
      if (i && schedule.decay_epochs[i] <= schedule.decay_epochs[i - 1])
        throw InvalidConfig("decay epochs must be strictly increasing");
    }
    loss.validate(window);
  }
};

/// A paired 2-D / 3-D sequence of equal length, optionally labelled.
struct PairedSequence {
  PoseSequence p2d;
  PoseSequence p3d;
  std::string label;
};

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  double position_loss = 0.0;
  double motion_loss = 0.0;
  double total_loss = 0.0;
  double seconds = 0.0;

  // Wall time is excluded: it is the only non-deterministic field.
  bool operator==(const EpochStats& o) const {
    return epoch == o.epoch && lr == o.lr && position_loss == o.position_loss && motion_loss == o.motion_loss &&
           total_loss == o.total_loss;
  }
};

/// Everything needed to continue an interrupted run bit-exactly.
struct TrainState {
  std::size_t next_epoch = 0;
  OptimizerState optimizer;
  std::vector<EpochStats> history;
};

/// Mirrors both halves of a training pair.
inline std::pair<PoseSequence, PoseSequence> flip_augment(const PoseSequence& p2d, const PoseSequence& p3d,
                                                          const SkeletonTopology& topo) {
  return {flip_pose(p2d, topo), flip_pose(p3d, topo)};
}

/// Input mean/scale and output scale from the training data. The mean comes
/// from the root keypoint when the input is root-centred, otherwise from all
/// keypoints. With flip augmentation the horizontal mean is pinned to 0 so
/// that mirrored inputs stay in distribution.
inline void fit_normalization(ModelConfig& cfg, const std::vector<PairedSequence>& data, std::size_t root,
                              bool symmetric_x) {
  double sum[2] = {0.0, 0.0};
  std::size_t n2 = 0;
  for (const auto& s : data)
    for (std::size_t t = 0; t < s.p2d.frames; ++t)
      for (std::size_t j = 0; j < s.p2d.joints; ++j) {
        if (cfg.center_input && j != root) continue;
        sum[0] += s.p2d.at(t, j, 0);
        sum[1] += s.p2d.at(t, j, 1);
        ++n2;
      }
  if (n2 == 0) throw EmptyDataset("no 2-D keypoints");
  cfg.input_mean = {symmetric_x ? 0.0 : sum[0] / static_cast<double>(n2), sum[1] / static_cast<double>(n2)};
  double var2 = 0.0;
  std::size_t count = 0;
  for (const auto& s : data)
    for (std::size_t t = 0; t < s.p2d.frames; ++t)
      for (std::size_t j = 0; j < s.p2d.joints; ++j)
        for (std::size_t d = 0; d < 2; ++d) {
          const double origin = cfg.center_input && j != root ? s.p2d.at(t, root, d) : cfg.input_mean[d];
          const double v = s.p2d.at(t, j, d) - origin;
          var2 += v * v;
          ++count;
        }
  const double std2 = std::sqrt(var2 / static_cast<double>(count));
  cfg.input_scale = std2 > 0.0 ? 1.0 / std2 : 1.0;

  double var3 = 0.0;
  std::size_t n3 = 0;
  for (const auto& s : data) {
    const PoseSequence rel = root_relative(s.p3d, root);
    for (double v : rel.coords) {
      var3 += v * v;
      ++n3;
    }
  }
  const double std3 = n3 ? std::sqrt(var3 / static_cast<double>(n3)) : 0.0;
  cfg.output_scale = std3 > 0.0 ? std3 : 1.0;
}

namespace detail {

struct Window {
  std::size_t sequence;
  std::size_t start;
  bool flip;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(seed ^ splitmix64(a ^ splitmix64(b + 0x1234567ull)));
}

}  // namespace detail

class Trainer {
 public:
  using EpochCallback = std::function<void(const EpochStats&, const TrainState&, UgcnModel&)>;

  Trainer(UgcnModel& model, TrainConfig cfg) : model_(model), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.window != model_.config().frames)
      throw InvalidConfig("training window " + std::to_string(cfg_.window) + " differs from model input length " +
                          std::to_string(model_.config().frames));
    state_.optimizer = OptimizerState::for_params(model_.parameters());
  }

  const TrainConfig& config() const noexcept { return cfg_; }
  TrainState& state() noexcept { return state_; }
  const TrainState& state() const noexcept { return state_; }
  void set_state(TrainState s) { state_ = std::move(s); }
  void on_epoch_end(EpochCallback cb) { callback_ = std::move(cb); }

  /// Trains from state().next_epoch up to `until` (default: all epochs).
  const std::vector<EpochStats>& run(const std::vector<PairedSequence>& data, std::size_t until = 0) {
    if (data.empty()) throw EmptyDataset("training set is empty");
    for (const auto& s : data) {
      if (s.p2d.frames < cfg_.window)
        throw SequenceTooShort("training sequence of " + std::to_string(s.p2d.frames) + " frames, window " +
                               std::to_string(cfg_.window));
      if (s.p2d.frames != s.p3d.frames || s.p2d.joints != model_.config().num_joints || s.p3d.joints != s.p2d.joints ||
          s.p2d.dims != 2 || s.p3d.dims != 3)
        throw ShapeMismatch("training pair does not match the model");
    }
    const std::size_t last = until ? std::min(until, cfg_.epochs) : cfg_.epochs;
    for (std::size_t epoch = state_.next_epoch; epoch < last; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      EpochStats stats = run_epoch(data, epoch);
      stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      state_.history.push_back(stats);
      state_.next_epoch = epoch + 1;
      if (callback_) callback_(stats, state_, model_);
    }
    return state_.history;
  }

  /// One optimization step on an explicit batch; returns the batch-mean losses.
  EpochStats step(const std::vector<PoseSequence>& inputs, const std::vector<PoseSequence>& targets, double lr,
                  std::uint64_t dropout_seed) {
    const std::size_t N = inputs.size(), T = cfg_.window, M = model_.config().num_joints;
    std::vector<double> in, gt;
    in.reserve(N * T * M * 2);
    gt.reserve(N * T * M * 3);
    for (std::size_t n = 0; n < N; ++n) {
      in.insert(in.end(), inputs[n].coords.begin(), inputs[n].coords.end());
      for (double v : targets[n].coords) gt.push_back(v * cfg_.loss_scale);
    }
    Var x = Var::constant(Tensor(Shape{N, T, M, 2}, std::move(in)));
    Var target = Var::constant(Tensor(Shape{N, T, M, 3}, std::move(gt)));

    auto params = model_.parameters();
    for (auto& p : params) p.var.zero_grad();
    Var pred = scale(model_.forward(x, Mode::train, dropout_seed), cfg_.loss_scale);
    LossTerms terms = loss_terms(pred, target, cfg_.loss);
    const double inv_n = 1.0 / static_cast<double>(N);
    Var objective = scale(terms.total, inv_n);
    const double value = objective.value().item();
    if (!std::isfinite(value)) throw NonFiniteLoss("loss became " + std::to_string(value));
    backprop(objective);
    adam_step(params, state_.optimizer, lr, cfg_.weight_decay);

    EpochStats s;
    s.lr = lr;
    s.position_loss = terms.position.value().item() * inv_n;
    s.motion_loss = terms.motion.value().item() * inv_n;
    s.total_loss = value;
    return s;
  }

 private:
  EpochStats run_epoch(const std::vector<PairedSequence>& data, std::size_t epoch) {
    std::mt19937_64 rng(detail::mix_seed(cfg_.seed, epoch));
    std::bernoulli_distribution flip(cfg_.flip_probability);
    std::vector<detail::Window> windows;
    for (std::size_t s = 0; s < data.size(); ++s)
      for (std::size_t c = 0; c < cfg_.crops_per_sequence; ++c) {
        std::uniform_int_distribution<std::size_t> start(0, data[s].p2d.frames - cfg_.window);
        const std::size_t b = start(rng);
        windows.push_back({s, b, flip(rng)});
      }
    std::shuffle(windows.begin(), windows.end(), rng);

    const double lr = lr_at(epoch, cfg_.schedule);
    EpochStats total;
    total.epoch = epoch;
    total.lr = lr;
    const auto& topo = model_.topology();
    for (std::size_t b = 0, batch = 0; b < windows.size(); b += cfg_.batch_size, ++batch) {
      const std::size_t e = std::min(windows.size(), b + cfg_.batch_size);
      std::vector<PoseSequence> in, gt;
      for (std::size_t i = b; i < e; ++i) {
        const auto& w = windows[i];
        PoseSequence p2 = data[w.sequence].p2d.slice(w.start, cfg_.window);
        PoseSequence p3 = data[w.sequence].p3d.slice(w.start, cfg_.window);
        if (w.flip) std::tie(p2, p3) = flip_augment(p2, p3, topo);
        in.push_back(std::move(p2));
        gt.push_back(std::move(p3));
      }
      EpochStats s;
      try {
        s = step(in, gt, lr, detail::mix_seed(cfg_.seed, epoch, batch + 1));
      } catch (const NonFiniteLoss& err) {
        throw NonFiniteLoss(std::string(err.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch));
      }
      const double w = static_cast<double>(e - b);
      total.position_loss += s.position_loss * w;
      total.motion_loss += s.motion_loss * w;
      total.total_loss += s.total_loss * w;
    }
    const double n = static_cast<double>(windows.size());
    total.position_loss /= n;
    total.motion_loss /= n;
    total.total_loss /= n;
    return total;
  }

  UgcnModel& model_;
  TrainConfig cfg_;
  TrainState state_;
  EpochCallback callback_;
};

/// Convenience wrapper: trains `model` in place and returns the loss history.
inline std::vector<EpochStats> train(UgcnModel& model, const std::vector<PairedSequence>& data, const TrainConfig& cfg) {
  Trainer trainer(model, cfg);
  return trainer.run(data);
}

}  // namespace ugcn
