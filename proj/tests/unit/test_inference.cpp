#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ugcn/inference.hpp"
#include "ugcn/skeleton.hpp"

using namespace ugcn;

namespace {

// A lifter whose output depends on the whole window, so averaging errors show.
PoseSequence toy_lift(const PoseSequence& w) {
  PoseSequence out(w.frames, w.joints, 3);
  double first = w.at(0, 0, 0);
  for (std::size_t t = 0; t < w.frames; ++t)
    for (std::size_t j = 0; j < w.joints; ++j) {
      out.at(t, j, 0) = w.at(t, j, 0) + first;
      out.at(t, j, 1) = w.at(t, j, 1) * static_cast<double>(t + 1);
      out.at(t, j, 2) = w.at(t, j, 0) * w.at(t, j, 1);
    }
  return out;
}

}  // namespace

TEST(WindowStarts, EnumeratesAndClampsTheLastWindow) {
  EXPECT_EQ(window_starts(101, 96, 5), (std::vector<std::size_t>{0, 5}));
  EXPECT_EQ(window_starts(96, 96, 5), (std::vector<std::size_t>{0}));
  EXPECT_EQ(window_starts(20, 8, 5), (std::vector<std::size_t>{0, 5, 10, 12}));
  EXPECT_THROW(window_starts(10, 16, 5), SequenceTooShort);
}

TEST(SlidingWindow, EveryFrameIsTheMeanOfCoveringWindows) {
  std::mt19937_64 rng(2);
  const auto p = oracle::random_pose(37, 3, 2, rng);
  InferenceConfig cfg;
  cfg.window = 12;
  cfg.step = 5;
  cfg.flip_test = false;
  const auto got = sliding_window_predict(batched(toy_lift), p, cfg);
  // Brute force: try every start, keep the ones the schedule uses.
  std::vector<bool> used(p.frames, false);
  for (std::size_t s = 0; s + 12 <= 37; s += 5) used[s] = true;
  used[37 - 12] = true;
  for (std::size_t t = 0; t < 37; ++t)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t d = 0; d < 3; ++d) {
        double sum = 0.0, n = 0.0;
        for (std::size_t s = 0; s + 12 <= 37; ++s)
          if (used[s] && t >= s && t < s + 12) {
            sum += toy_lift(p.slice(s, 12)).at(t - s, j, d);
            n += 1.0;
          }
        EXPECT_NEAR(got.at(t, j, d), sum / n, 1e-12);
      }
}

TEST(SlidingWindow, FlipTestAveragesMirroredPrediction) {
  const auto topo = human17_topology();
  std::mt19937_64 rng(3);
  const auto p = oracle::random_pose(10, 17, 2, rng);
  InferenceConfig cfg;
  cfg.window = 10;
  cfg.step = 10;
  const auto got = sliding_window_predict(batched(toy_lift), p, cfg, &topo);
  const auto plain = toy_lift(p), back = flip_pose(toy_lift(flip_pose(p, topo)), topo);
  for (std::size_t i = 0; i < got.coords.size(); ++i) EXPECT_NEAR(got.coords[i], 0.5 * (plain.coords[i] + back.coords[i]), 1e-12);
  EXPECT_THROW(sliding_window_predict(batched(toy_lift), p, cfg), InvalidConfig);
}

TEST(SlidingWindow, InvalidSchedules) {
  const PoseSequence p(20, 1, 2);
  InferenceConfig cfg;
  cfg.window = 8;
  cfg.step = 9;
  cfg.flip_test = false;
  EXPECT_THROW(sliding_window_predict(batched(toy_lift), p, cfg), InvalidConfig);
  cfg.step = 0;
  EXPECT_THROW(sliding_window_predict(batched(toy_lift), p, cfg), InvalidConfig);
}
