#include <gtest/gtest.h>

#include <cmath>

#include "ugcn/io.hpp"
#include "ugcn/synth.hpp"
#include "ugcn/training.hpp"

using namespace ugcn;

namespace {

struct Tiny {
  SkeletonTopology topo = human17_topology();
  std::vector<PairedSequence> data;
  ModelConfig model;
  TrainConfig train;

  Tiny() {
    SynthDatasetSpec ds;
    ds.sequences = 4;
    ds.frames = 24;
    ds.noise_sigma = 1.0;
    ds.seed = 3;
    data = gen_lifting_dataset(ds, topo);
    model.frames = 16;
    model.width = 4;
    model.kernel = 3;
    model.dropout = 0.1;
    fit_normalization(model, data, topo.root(), true);
    train.epochs = 4;
    train.batch_size = 4;
    train.window = 16;
    train.crops_per_sequence = 2;
    train.schedule.initial = 1e-2;
    train.schedule.decay_epochs = {3};
    train.loss.intervals = {2, 4};
    train.seed = 5;
  }
};

std::vector<std::vector<double>> params_of(UgcnModel& m) {
  std::vector<std::vector<double>> out;
  for (auto& p : m.parameters()) out.push_back(p.var.value().vec());
  for (auto& b : m.buffers()) out.push_back(b.tensor->vec());
  return out;
}

}  // namespace

TEST(Training, LossDecreasesOnTinyData) {
  Tiny t;
  t.train.epochs = 12;
  t.train.schedule.decay_epochs = {};
  UgcnModel m(t.model, t.topo, 1);
  const auto h = train(m, t.data, t.train);
  ASSERT_EQ(h.size(), 12u);
  for (const auto& s : h) EXPECT_TRUE(std::isfinite(s.total_loss));
  EXPECT_LT(h.back().total_loss, 0.5 * h.front().total_loss);
}

TEST(Training, IdenticalRunsAreBitwiseIdentical) {
  Tiny t;
  UgcnModel a(t.model, t.topo, 1), b(t.model, t.topo, 1);
  const auto ha = train(a, t.data, t.train), hb = train(b, t.data, t.train);
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(params_of(a), params_of(b));
  EXPECT_EQ(encode_checkpoint(a, t.train, TrainState{}), encode_checkpoint(b, t.train, TrainState{}));
}

TEST(Training, ResumeFromCheckpointMatchesStraightRun) {
  Tiny t;
  UgcnModel straight(t.model, t.topo, 1);
  Trainer full(straight, t.train);
  full.run(t.data);

  UgcnModel first(t.model, t.topo, 1);
  Trainer half(first, t.train);
  half.run(t.data, 2);
  Checkpoint ck = decode_checkpoint(encode_checkpoint(first, t.train, half.state()));
  EXPECT_EQ(ck.state.next_epoch, 2u);
  Trainer rest(ck.model, ck.train);
  rest.set_state(ck.state);
  rest.run(t.data);

  EXPECT_EQ(rest.state().history, full.state().history);
  EXPECT_EQ(params_of(ck.model), params_of(straight));
}

TEST(Training, LambdaZeroIgnoresIntervals) {
  Tiny t;
  t.train.loss.lambda = 0.0;
  UgcnModel a(t.model, t.topo, 1), b(t.model, t.topo, 1);
  const auto ha = train(a, t.data, t.train);
  t.train.loss.intervals = {};
  const auto hb = train(b, t.data, t.train);
  ASSERT_EQ(ha.size(), hb.size());
  for (std::size_t i = 0; i < ha.size(); ++i) EXPECT_EQ(ha[i].total_loss, hb[i].total_loss);
  EXPECT_EQ(params_of(a), params_of(b));
}

TEST(Training, RejectsBadData) {
  Tiny t;
  UgcnModel m(t.model, t.topo, 1);
  EXPECT_THROW(train(m, {}, t.train), EmptyDataset);
  auto shorty = t.data;
  shorty[0].p2d = shorty[0].p2d.slice(0, 8);
  shorty[0].p3d = shorty[0].p3d.slice(0, 8);
  EXPECT_THROW(train(m, shorty, t.train), SequenceTooShort);
  t.train.loss.intervals = {16};
  EXPECT_THROW(t.train.validate(), IntervalTooLarge);
}

TEST(Training, FitNormalizationMatchesDirectStatistics) {
  Tiny t;
  ModelConfig c = t.model;
  fit_normalization(c, t.data, t.topo.root(), false);
  double mx = 0, my = 0, n = 0;
  for (const auto& s : t.data)
    for (std::size_t f = 0; f < s.p2d.frames; ++f) {
      mx += s.p2d.at(f, 0, 0);
      my += s.p2d.at(f, 0, 1);
      n += 1;
    }
  EXPECT_NEAR(c.input_mean[0], mx / n, 1e-9);
  EXPECT_NEAR(c.input_mean[1], my / n, 1e-9);
  double v3 = 0, n3 = 0;
  for (const auto& s : t.data)
    for (double v : s.p3d.coords) {  // already root-relative
      v3 += v * v;
      n3 += 1;
    }
  EXPECT_NEAR(c.output_scale, std::sqrt(v3 / n3), 1e-9);
  fit_normalization(c, t.data, t.topo.root(), true);
  EXPECT_EQ(c.input_mean[0], 0.0);
}
