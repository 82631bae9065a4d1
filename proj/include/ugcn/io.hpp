#pragma once

// File formats.
//
// Sequence file (.ugcnseq):
//   line 1  "UGCNSEQ <version>"
//   line 2  JSON header {schema_version, num_joints, dims, frames, frame_rate, label, topology}
//   rest    frames * joints * dims little-endian float64, frame-major
//
// Checkpoint (.ugcnckpt):
//   line 1  "UGCNCKPT <version>"
//   line 2  JSON header (model config, topology, train config, tensor table, optimizer and train state)
//   rest    little-endian float64 payload, then an 8-byte FNV-1a digest of everything before it
//
// Topology file: JSON {name, num_joints, root, edges, mirror}.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ugcn/error.hpp"
#include "ugcn/inference.hpp"
#include "ugcn/metrics.hpp"
#include "ugcn/model.hpp"
#include "ugcn/pose.hpp"
#include "ugcn/skeleton.hpp"
#include "ugcn/training.hpp"

namespace ugcn {

using Json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSequenceVersion = 1;
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

inline void put_doubles(std::string& out, std::span<const double> values) {
  for (double d : values) {
    const std::uint64_t le = to_little(std::bit_cast<std::uint64_t>(d));
    char b[8];
    std::memcpy(b, &le, 8);
    out.append(b, 8);
  }
}

inline void put_u64(std::string& out, std::uint64_t v) {
  v = to_little(v);
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

inline std::uint64_t get_u64(std::string_view in, std::size_t offset) {
  std::uint64_t v;
  std::memcpy(&v, in.data() + offset, 8);
  return to_little(v);
}

/// Reads `count` doubles starting at `offset`; throws ParseError if the
/// buffer is too short.
inline std::vector<double> get_doubles(std::string_view in, std::size_t offset, std::size_t count, const std::string& what) {
  if (offset > in.size() || (in.size() - offset) / 8 < count) throw ParseError(what + ": payload truncated");
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = std::bit_cast<double>(get_u64(in, offset + 8 * i));
  return v;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParseError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Splits "MAGIC version\n{json}\n<payload>" and checks the magic word.
struct Framed {
  int version = 0;
  Json header;
  std::size_t payload_offset = 0;
};

inline Framed unframe(std::string_view bytes, std::string_view magic, const std::string& what) {
  const auto nl1 = bytes.find('\n');
  if (nl1 == std::string_view::npos) throw ParseError(what + ": missing magic line");
  const std::string_view first = bytes.substr(0, nl1);
  if (first.substr(0, magic.size()) != magic || first.size() <= magic.size() + 1 || first[magic.size()] != ' ')
    throw ParseError(what + ": bad magic");
  Framed f;
  try {
    f.version = std::stoi(std::string(first.substr(magic.size() + 1)));
  } catch (const std::exception&) {
    throw ParseError(what + ": bad version field");
  }
  const auto nl2 = bytes.find('\n', nl1 + 1);
  if (nl2 == std::string_view::npos) throw ParseError(what + ": missing header line");
  try {
    f.header = Json::parse(bytes.substr(nl1 + 1, nl2 - nl1 - 1));
  } catch (const Json::exception& e) {
    throw ParseError(what + ": header is not valid JSON (" + e.what() + ")");
  }
  f.payload_offset = nl2 + 1;
  return f;
}

template <typename T>
T field(const Json& j, const char* key, const std::string& what) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ParseError(what + ": missing or malformed field '" + key + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------- topology

inline Json topology_to_json(const SkeletonTopology& t, const std::string& name = {}) {
  Json edges = Json::array();
  for (auto [a, b] : t.edges()) edges.push_back({a, b});
  return {{"name", name}, {"num_joints", t.num_joints()}, {"root", t.root()}, {"edges", edges}, {"mirror", t.mirror_map()}};
}

inline SkeletonTopology topology_from_json(const Json& j) {
  const std::string what = "topology";
  const auto n = detail::field<std::size_t>(j, "num_joints", what);
  const auto root = detail::field<std::size_t>(j, "root", what);
  std::vector<JointPair> edges;
  for (const auto& e : detail::field<std::vector<std::vector<std::size_t>>>(j, "edges", what)) {
    if (e.size() != 2) throw ParseError("topology: every edge needs two joints");
    edges.emplace_back(e[0], e[1]);
  }
  std::vector<std::size_t> mirror =
      j.contains("mirror") ? detail::field<std::vector<std::size_t>>(j, "mirror", what) : identity_mirror(n);
  return build_topology(n, std::move(edges), root, std::move(mirror));
}

inline void save_topology(const fs::path& path, const SkeletonTopology& t, const std::string& name = {}) {
  detail::write_file_atomic(path, topology_to_json(t, name).dump(2) + "\n");
}

inline SkeletonTopology load_topology(const fs::path& path) {
  try {
    return topology_from_json(Json::parse(detail::read_file(path)));
  } catch (const Json::exception& e) {
    throw ParseError("topology file " + path.string() + ": " + e.what());
  }
}

/// "human17" names the built-in layout; anything else is a topology file.
inline SkeletonTopology resolve_topology(const std::string& ref) {
  if (ref.empty() || ref == "human17") return human17_topology();
  return load_topology(ref);
}

// --------------------------------------------------------------- sequences

struct SequenceMeta {
  double frame_rate = 50.0;
  std::string label;
  std::string topology = "human17";
};

struct LoadedSequence {
  PoseSequence pose;
  SequenceMeta meta;
};

inline std::string encode_sequence(const PoseSequence& p, const SequenceMeta& meta = {}) {
  if (p.dims != 2 && p.dims != 3) throw SchemaMismatch("sequence dims must be 2 or 3, got " + std::to_string(p.dims));
  if (p.coords.size() != p.frames * p.joints * p.dims) throw SchemaMismatch("sequence payload length disagrees with shape");
  for (double v : p.coords)
    if (!std::isfinite(v)) throw NonFiniteValue("sequence contains a non-finite coordinate");
  const Json h = {{"schema_version", kSequenceVersion}, {"num_joints", p.joints}, {"dims", p.dims},
                  {"frames", p.frames}, {"frame_rate", meta.frame_rate}, {"label", meta.label},
                  {"topology", meta.topology}};
  std::string out = "UGCNSEQ " + std::to_string(kSequenceVersion) + "\n" + h.dump() + "\n";
  detail::put_doubles(out, p.coords);
  return out;
}

inline LoadedSequence decode_sequence(std::string_view bytes, const std::string& what = "sequence") {
  const auto f = detail::unframe(bytes, "UGCNSEQ", what);
  if (f.version != kSequenceVersion) throw SchemaMismatch(what + ": unsupported schema version " + std::to_string(f.version));
  LoadedSequence s;
  const auto joints = detail::field<std::size_t>(f.header, "num_joints", what);
  const auto dims = detail::field<std::size_t>(f.header, "dims", what);
  const auto frames = detail::field<std::size_t>(f.header, "frames", what);
  if (dims != 2 && dims != 3) throw SchemaMismatch(what + ": dims must be 2 or 3, got " + std::to_string(dims));
  if (joints == 0) throw SchemaMismatch(what + ": num_joints must be positive");
  s.meta.frame_rate = f.header.value("frame_rate", 50.0);
  s.meta.label = f.header.value("label", std::string{});
  s.meta.topology = f.header.value("topology", std::string{"human17"});
  const std::size_t count = frames * joints * dims;
  const std::size_t payload = bytes.size() - f.payload_offset;
  if (payload != count * 8)
    throw ParseError(what + ": payload has " + std::to_string(payload) + " bytes, header implies " + std::to_string(count * 8));
  std::vector<double> coords = detail::get_doubles(bytes, f.payload_offset, count, what);
  for (double v : coords)
    if (!std::isfinite(v)) throw NonFiniteValue(what + ": non-finite coordinate");
  s.pose = PoseSequence(frames, joints, dims, std::move(coords));
  return s;
}

inline void save_sequence(const fs::path& path, const PoseSequence& p, const SequenceMeta& meta = {}) {
  detail::write_file_atomic(path, encode_sequence(p, meta));
}

inline LoadedSequence load_sequence(const fs::path& path) {
  return decode_sequence(detail::read_file(path), path.string());
}

/// A dataset directory holds <name>.2d.ugcnseq / <name>.3d.ugcnseq pairs.
inline void save_dataset(const fs::path& dir, const std::vector<PairedSequence>& data, const std::string& topology = "human17") {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::ostringstream name;
    name << "seq" << std::setw(4) << std::setfill('0') << i;
    const SequenceMeta meta{50.0, data[i].label, topology};
    save_sequence(dir / (name.str() + ".2d.ugcnseq"), data[i].p2d, meta);
    save_sequence(dir / (name.str() + ".3d.ugcnseq"), data[i].p3d, meta);
  }
}

inline std::vector<PairedSequence> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ParseError("dataset directory " + dir.string() + " does not exist");
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    const std::string suffix = ".2d.ugcnseq";
    if (n.size() > suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0)
      stems.push_back(n.substr(0, n.size() - suffix.size()));
  }
  std::sort(stems.begin(), stems.end());
  std::vector<PairedSequence> data;
  for (const auto& stem : stems) {
    const auto p2 = load_sequence(dir / (stem + ".2d.ugcnseq"));
    const fs::path p3_path = dir / (stem + ".3d.ugcnseq");
    if (!fs::exists(p3_path)) throw ParseError("missing 3-D partner for " + stem);
    const auto p3 = load_sequence(p3_path);
    if (p2.pose.dims != 2 || p3.pose.dims != 3) throw SchemaMismatch(stem + ": expected a 2-D and a 3-D file");
    if (p2.pose.frames != p3.pose.frames || p2.pose.joints != p3.pose.joints)
      throw SchemaMismatch(stem + ": 2-D and 3-D files disagree in shape");
    data.push_back({p2.pose, p3.pose, p2.meta.label});
  }
  if (data.empty()) throw EmptyDataset("no sequences in " + dir.string());
  return data;
}

/// Topology reference stored in the first 2-D file of a dataset directory.
inline std::string dataset_topology_ref(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ParseError("dataset directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (n.size() > 11 && n.compare(n.size() - 11, 11, ".2d.ugcnseq") == 0) files.push_back(e.path());
  }
  if (files.empty()) throw EmptyDataset("no sequences in " + dir.string());
  std::sort(files.begin(), files.end());
  return load_sequence(files.front()).meta.topology;
}

// ----------------------------------------------------------------- configs

inline Json to_json(const LossConfig& c) {
  return {{"operator", to_string(c.op)}, {"intervals", c.intervals}, {"lambda", c.lambda},
          {"norm", c.norm == MotionNorm::l1 ? "l1" : "l2"}};
}

inline LossConfig loss_config_from_json(const Json& j, LossConfig c = {}) {
  if (j.contains("operator")) c.op = parse_motion_operator(j.at("operator").get<std::string>());
  if (j.contains("intervals")) c.intervals = j.at("intervals").get<std::vector<std::size_t>>();
  c.lambda = j.value("lambda", c.lambda);
  if (j.contains("norm")) {
    const auto n = j.at("norm").get<std::string>();
    if (n != "l1" && n != "l2") throw InvalidConfig("motion norm must be l1 or l2");
    c.norm = n == "l1" ? MotionNorm::l1 : MotionNorm::l2;
  }
  return c;
}

inline Json to_json(const ModelConfig& c) {
  return {{"frames", c.frames},         {"num_joints", c.num_joints},   {"in_dims", c.in_dims},
          {"width", c.width},           {"down_blocks", c.down_blocks}, {"strided_blocks", c.strided_blocks},
          {"up_blocks", c.up_blocks},   {"kernel", c.kernel},           {"dropout", c.dropout},
          {"residual", c.residual},     {"center_input", c.center_input}, {"input_mean", c.input_mean},   {"input_scale", c.input_scale},
          {"output_scale", c.output_scale}};
}

inline ModelConfig model_config_from_json(const Json& j, ModelConfig c = {}) {
  c.frames = j.value("frames", c.frames);
  c.num_joints = j.value("num_joints", c.num_joints);
  c.in_dims = j.value("in_dims", c.in_dims);
  c.width = j.value("width", c.width);
  c.down_blocks = j.value("down_blocks", c.down_blocks);
  if (j.contains("strided_blocks")) c.strided_blocks = j.at("strided_blocks").get<std::vector<std::size_t>>();
  c.up_blocks = j.value("up_blocks", c.up_blocks);
  c.kernel = j.value("kernel", c.kernel);
  c.dropout = j.value("dropout", c.dropout);
  c.residual = j.value("residual", c.residual);
  c.center_input = j.value("center_input", c.center_input);
  if (j.contains("input_mean")) c.input_mean = j.at("input_mean").get<std::array<double, 2>>();
  c.input_scale = j.value("input_scale", c.input_scale);
  c.output_scale = j.value("output_scale", c.output_scale);
  return c;
}

inline Json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.schedule.initial},
          {"lr_factor", c.schedule.factor},
          {"lr_decay_epochs", c.schedule.decay_epochs},
          {"weight_decay", c.weight_decay},
          {"window", c.window},
          {"crops_per_sequence", c.crops_per_sequence},
          {"flip_probability", c.flip_probability},
          {"loss_scale", c.loss_scale},
          {"loss", to_json(c.loss)},
          {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const Json& j, TrainConfig c = {}) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.schedule.initial = j.value("lr", c.schedule.initial);
  c.schedule.factor = j.value("lr_factor", c.schedule.factor);
  if (j.contains("lr_decay_epochs")) c.schedule.decay_epochs = j.at("lr_decay_epochs").get<std::vector<std::size_t>>();
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.window = j.value("window", c.window);
  c.crops_per_sequence = j.value("crops_per_sequence", c.crops_per_sequence);
  c.flip_probability = j.value("flip_probability", c.flip_probability);
  c.loss_scale = j.value("loss_scale", c.loss_scale);
  if (j.contains("loss")) c.loss = loss_config_from_json(j.at("loss"), c.loss);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline Json to_json(const InferenceConfig& c) {
  return {{"window", c.window}, {"step", c.step}, {"flip_test", c.flip_test}};
}

inline InferenceConfig inference_config_from_json(const Json& j, InferenceConfig c = {}) {
  c.window = j.value("window", c.window);
  c.step = j.value("step", c.step);
  c.flip_test = j.value("flip_test", c.flip_test);
  return c;
}

// ------------------------------------------------------------- checkpoints

struct Checkpoint {
  UgcnModel model;
  TrainConfig train;
  TrainState state;
};

inline std::string encode_checkpoint(UgcnModel& model, const TrainConfig& train, const TrainState& state) {
  auto params = model.parameters();
  auto buffers = model.buffers();
  const auto& opt = state.optimizer;
  if (!opt.first_moment.empty() && opt.first_moment.size() != params.size())
    throw ShapeMismatch("optimizer state does not match the model");

  Json tensors = Json::array();
  std::string payload;
  auto add = [&](const std::string& name, const Tensor& t) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}});
    detail::put_doubles(payload, t.data());
  };
  for (const auto& p : params) add(p.name, p.var.value());
  for (const auto& b : buffers) add(b.name, *b.tensor);
  for (std::size_t i = 0; i < opt.first_moment.size(); ++i) {
    add("adam_m." + params[i].name, opt.first_moment[i]);
    add("adam_v." + params[i].name, opt.second_moment[i]);
  }

  // Wall-clock time stays out so identical runs give identical files.
  Json history = Json::array();
  for (const auto& e : state.history)
    history.push_back({e.epoch, e.lr, e.position_loss, e.motion_loss, e.total_loss});
  const Json header = {{"format", "ugcn-checkpoint"},
                       {"model", to_json(model.config())},
                       {"topology", topology_to_json(model.topology())},
                       {"train", to_json(train)},
                       {"tensors", tensors},
                       {"optimizer",
                        {{"step", opt.step},
                         {"beta1", opt.hyper.beta1},
                         {"beta2", opt.hyper.beta2},
                         {"eps", opt.hyper.eps},
                         {"has_moments", !opt.first_moment.empty()}}},
                       {"next_epoch", state.next_epoch},
                       {"history", history}};
  std::string out = "UGCNCKPT " + std::to_string(kCheckpointVersion) + "\n" + header.dump() + "\n" + payload;
  detail::put_u64(out, detail::fnv1a(out));
  return out;
}

inline Checkpoint decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint") {
  if (bytes.size() < 8) throw ParseError(what + ": file too short");
  const auto f = detail::unframe(bytes, "UGCNCKPT", what);
  if (f.version != kCheckpointVersion)
    throw VersionMismatch(what + ": version " + std::to_string(f.version) + ", expected " + std::to_string(kCheckpointVersion));
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  if (bytes.size() < f.payload_offset + 8 || detail::fnv1a(body) != detail::get_u64(bytes, bytes.size() - 8))
    throw ParseError(what + ": checksum mismatch (file corrupted or truncated)");

  try {
    const Json& h = f.header;
    Checkpoint c;
    const ModelConfig mc = model_config_from_json(h.at("model"));
    c.model = build_model(mc, topology_from_json(h.at("topology")), 0);
    c.train = train_config_from_json(h.at("train"));

    std::size_t offset = f.payload_offset;
    const auto& table = h.at("tensors");
    std::size_t next = 0;
    auto take = [&](const std::string& name, Tensor& into) {
      if (next >= table.size()) throw ParseError(what + ": tensor table ends before " + name);
      const auto& entry = table.at(next++);
      if (entry.at("name").get<std::string>() != name) throw ParseError(what + ": expected tensor " + name);
      const auto shape = entry.at("shape").get<Shape>();
      if (shape != into.shape()) throw ParseError(what + ": shape of " + name + " is " + shape_str(shape));
      auto v = detail::get_doubles(body, offset, into.size(), what);
      offset += 8 * into.size();
      into = Tensor(shape, std::move(v));
    };
    auto params = c.model.parameters();
    for (auto& p : params) take(p.name, p.var.mutable_value());
    for (auto& b : c.model.buffers()) take(b.name, *b.tensor);
    const auto& o = h.at("optimizer");
    c.state.optimizer.step = o.at("step").get<std::size_t>();
    c.state.optimizer.hyper = {o.at("beta1").get<double>(), o.at("beta2").get<double>(), o.at("eps").get<double>()};
    if (o.at("has_moments").get<bool>()) {
      c.state.optimizer = OptimizerState::for_params(params, c.state.optimizer.hyper);
      c.state.optimizer.step = o.at("step").get<std::size_t>();
      for (std::size_t i = 0; i < params.size(); ++i) {
        take("adam_m." + params[i].name, c.state.optimizer.first_moment[i]);
        take("adam_v." + params[i].name, c.state.optimizer.second_moment[i]);
      }
    }
    if (next != table.size() || offset != body.size()) throw ParseError(what + ": trailing data after tensors");
    c.state.next_epoch = h.at("next_epoch").get<std::size_t>();
    for (const auto& e : h.at("history")) {
      EpochStats s;
      s.epoch = e.at(0).get<std::size_t>();
      s.lr = e.at(1).get<double>();
      s.position_loss = e.at(2).get<double>();
      s.motion_loss = e.at(3).get<double>();
      s.total_loss = e.at(4).get<double>();
      c.state.history.push_back(s);
    }
    return c;
  } catch (const Json::exception& e) {
    throw ParseError(what + ": malformed header (" + e.what() + ")");
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(what + ": inconsistent contents (" + e.what() + ")");
  }
}

inline void save_checkpoint(const fs::path& path, UgcnModel& model, const TrainConfig& train, const TrainState& state) {
  detail::write_file_atomic(path, encode_checkpoint(model, train, state));
}

inline Checkpoint load_checkpoint(const fs::path& path) { return decode_checkpoint(detail::read_file(path), path.string()); }

/// Hex FNV-1a digest of a file, for comparing run outputs.
inline std::string file_digest(const fs::path& path) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << detail::fnv1a(detail::read_file(path));
  return s.str();
}

// ----------------------------------------------------------------- reports

inline Json to_json(const EvalRow& r) {
  return {{"mpjpe_mm", r.mpjpe_mm}, {"p_mpjpe_mm", r.p_mpjpe_mm}, {"mpjve_mm", r.mpjve_mm},
          {"pck_at_150", r.pck_at_150}, {"auc", r.auc}};
}

/// Writes report.json (the five pooled metrics) and, when labels exist,
/// per_action.tsv with one row per label.
inline void save_eval_report(const fs::path& dir, const EvalReport& r) {
  detail::write_file_atomic(dir / "report.json", to_json(static_cast<const EvalRow&>(r)).dump(2) + "\n");
  if (r.per_action.empty()) return;
  std::ostringstream t;
  t << std::setprecision(17) << "action\tmpjpe_mm\tp_mpjpe_mm\tmpjve_mm\tpck_at_150\tauc\n";
  for (const auto& [label, row] : r.per_action)
    t << label << '\t' << row.mpjpe_mm << '\t' << row.p_mpjpe_mm << '\t' << row.mpjve_mm << '\t' << row.pck_at_150 << '\t'
      << row.auc << '\n';
  detail::write_file_atomic(dir / "per_action.tsv", t.str());
}

inline std::string training_log_header() { return "epoch\tlr\tposition_loss\tmotion_loss\ttotal_loss\tseconds\n"; }

inline std::string training_log_line(const EpochStats& s) {
  std::ostringstream o;
  o << std::setprecision(17) << s.epoch << '\t' << s.lr << '\t' << s.position_loss << '\t' << s.motion_loss << '\t'
    << s.total_loss << '\t' << std::setprecision(4) << s.seconds << '\n';
  return o.str();
}

}  // namespace ugcn
