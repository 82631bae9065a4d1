#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "ugcn/io.hpp"
#include "ugcn/synth.hpp"

using namespace ugcn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ugcn_io_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void replace_once(std::string& s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  ASSERT_NE(at, std::string::npos) << from;
  s.replace(at, from.size(), to);
}

}  // namespace

TEST(SequenceFormat, RoundTripIsBitwise) {
  std::mt19937_64 rng(1);
  const auto p = oracle::random_pose(7, 17, 3, rng, 1e3);
  const SequenceMeta meta{25.0, "walk", "human17"};
  const auto back = decode_sequence(encode_sequence(p, meta));
  EXPECT_EQ(back.pose, p);
  EXPECT_EQ(back.meta.label, "walk");
  EXPECT_EQ(back.meta.frame_rate, 25.0);
  const auto dir = scratch("seq");
  save_sequence(dir / "a.ugcnseq", p, meta);
  EXPECT_EQ(load_sequence(dir / "a.ugcnseq").pose, p);
}

TEST(SequenceFormat, RejectsMalformedInput) {
  std::mt19937_64 rng(2);
  const auto p = oracle::random_pose(3, 4, 2, rng);
  const std::string good = encode_sequence(p);
  EXPECT_THROW(decode_sequence(good.substr(0, good.size() - 3)), ParseError);
  EXPECT_THROW(decode_sequence("garbage"), ParseError);
  std::string dims = good;
  replace_once(dims, "\"dims\":2", "\"dims\":4");
  EXPECT_THROW(decode_sequence(dims), SchemaMismatch);
  std::string version = good;
  replace_once(version, "UGCNSEQ 1", "UGCNSEQ 9");
  EXPECT_THROW(decode_sequence(version), SchemaMismatch);
  std::string nan = good;
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 8, &q, 8);
  EXPECT_THROW(decode_sequence(nan), NonFiniteValue);
  PoseSequence bad = p;
  bad.coords[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(encode_sequence(bad), NonFiniteValue);
}

TEST(Dataset, SaveLoadRoundTrip) {
  SynthDatasetSpec ds;
  ds.sequences = 3;
  ds.frames = 20;
  ds.seed = 4;
  const auto data = gen_lifting_dataset(ds, human17_topology());
  const auto dir = scratch("dataset");
  save_dataset(dir, data);
  const auto back = load_dataset(dir);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].p2d, data[i].p2d);
    EXPECT_EQ(back[i].p3d, data[i].p3d);
    EXPECT_EQ(back[i].label, data[i].label);
  }
  EXPECT_EQ(dataset_topology_ref(dir), "human17");
  EXPECT_THROW(load_dataset(scratch("empty")), EmptyDataset);
  EXPECT_THROW(load_dataset(dir / "missing"), ParseError);
}

TEST(Topology, JsonRoundTrip) {
  const auto t = human17_topology();
  const auto back = topology_from_json(topology_to_json(t, "human17"));
  EXPECT_EQ(back.edges(), t.edges());
  EXPECT_EQ(back.root(), t.root());
  EXPECT_EQ(back.mirror_map(), t.mirror_map());
}

class CheckpointFormat : public ::testing::Test {
 protected:
  void SetUp() override {
    ModelConfig mc;
    mc.frames = 16;
    mc.width = 4;
    mc.kernel = 3;
    mc.input_scale = 0.01;
    model = std::make_unique<UgcnModel>(mc, human17_topology(), 7);
    train.epochs = 3;
    train.loss.op = MotionOperator::inner_product;
    state.next_epoch = 2;
    state.optimizer = OptimizerState::for_params(model->parameters(), {});
    state.optimizer.step = 5;
    state.optimizer.first_moment[0][0] = 0.25;
    EpochStats s;
    s.epoch = 1;
    s.lr = 1e-3;
    s.total_loss = 1.0 / 3.0;
    state.history.push_back(s);
    bytes = encode_checkpoint(*model, train, state);
  }
  std::unique_ptr<UgcnModel> model;
  TrainConfig train;
  TrainState state;
  std::string bytes;
};

TEST_F(CheckpointFormat, RoundTripIsBitwise) {
  Checkpoint c = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(c.model, c.train, c.state), bytes);
  EXPECT_EQ(c.state.history, state.history);
  EXPECT_EQ(c.state.optimizer.first_moment[0][0], 0.25);
  EXPECT_EQ(c.train.loss.op, MotionOperator::inner_product);
  EXPECT_EQ(c.model.config().input_scale, 0.01);
}

TEST_F(CheckpointFormat, DetectsCorruptionAndVersion) {
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  EXPECT_THROW(decode_checkpoint(flipped), ParseError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 100)), ParseError);
  std::string version = bytes;
  replace_once(version, "UGCNCKPT 1", "UGCNCKPT 2");
  EXPECT_THROW(decode_checkpoint(version), VersionMismatch);
}

TEST_F(CheckpointFormat, FilesAreWrittenAtomically) {
  const auto dir = scratch("ckpt");
  save_checkpoint(dir / "c.ugcnckpt", *model, train, state);
  EXPECT_EQ(detail::read_file(dir / "c.ugcnckpt"), bytes);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  EXPECT_THROW(load_checkpoint(dir / "none.ugcnckpt"), std::exception);
}
