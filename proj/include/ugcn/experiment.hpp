#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ugcn/error.hpp"
#include "ugcn/gradcheck_suite.hpp"
#include "ugcn/inference.hpp"
#include "ugcn/io.hpp"
#include "ugcn/loss.hpp"
#include "ugcn/metrics.hpp"
#include "ugcn/model.hpp"
#include "ugcn/synth.hpp"
#include "ugcn/training.hpp"

namespace ugcn {

/// Either a dataset directory or a synthetic generator spec.
struct DataSource {
  std::string dir;
  SynthDatasetSpec synth;

  bool synthetic() const { return dir.empty(); }
};

struct ExperimentConfig {
  std::string topology = "human17";
  ModelConfig model;
  TrainConfig train;
  InferenceConfig inference;
  DataSource train_data;
  DataSource test_data;
  std::string output_dir = "runs/ugcn";
  bool fit_normalization = true;
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint
  std::size_t stop_after = 0;        // stop after this many epochs (0: run all)
  std::string resume;                // checkpoint to continue from

  /// Sets the one temporal window shared by model, trainer and inference.
  void set_window(std::size_t frames) {
    model.frames = frames;
    train.window = frames;
    inference.window = frames;
  }

  void validate() const {
    model.validate();
    train.validate();
    inference.validate();
    if (train.window != model.frames || inference.window != model.frames)
      throw InvalidConfig("model, training and inference windows must agree");
    for (const DataSource* d : {&train_data, &test_data}) {
      if (!d->synthetic() && !std::filesystem::is_directory(d->dir))
        throw InvalidConfig("dataset directory " + d->dir + " does not exist");
      if (d->synthetic() && d->synth.sequences == 0) throw InvalidConfig("synthetic dataset needs sequences");
      if (d->synthetic() && d->synth.frames < model.frames)
        throw InvalidConfig("synthetic sequences are shorter than the window");
    }
    if (!resume.empty() && !std::filesystem::exists(resume))
      throw InvalidConfig("resume checkpoint " + resume + " does not exist");
    if (output_dir.empty()) throw InvalidConfig("output directory must be set");
  }
};

/// Desk-scale preset: short windows, narrow layers, synthetic data, 1 core.
inline ExperimentConfig toy_config() {
  ExperimentConfig c;
  c.model.width = 8;
  c.model.kernel = 3;
  c.model.dropout = 0.0;
  c.set_window(32);
  c.train.epochs = 20;
  c.train.batch_size = 8;
  c.train.crops_per_sequence = 8;
  c.train.schedule.initial = 1e-2;
  c.train.schedule.decay_epochs = {14, 16, 18};
  c.inference.step = 5;
  c.train_data.synth = {48, 128, 5.0, 3, 1};
  c.test_data.synth = {16, 128, 5.0, 3, 1001};
  c.output_dir = "runs/toy";
  return c;
}

/// Decay epochs at 80/110, 90/110 and 100/110 of the run.
inline std::vector<std::size_t> proportional_decays(std::size_t epochs) {
  std::vector<std::size_t> out;
  for (std::size_t k : {80, 90, 100}) {
    const std::size_t e = epochs * k / 110;
    if (e > 0 && e < epochs && (out.empty() || e > out.back())) out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------- JSON

inline Json to_json(const SynthDatasetSpec& s) {
  return {{"sequences", s.sequences}, {"frames", s.frames}, {"noise_sigma", s.noise_sigma},
          {"num_actions", s.num_actions}, {"seed", s.seed}};
}

inline SynthDatasetSpec synth_spec_from_json(const Json& j, SynthDatasetSpec s = {}) {
  s.sequences = j.value("sequences", s.sequences);
  s.frames = j.value("frames", s.frames);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.num_actions = j.value("num_actions", s.num_actions);
  s.seed = j.value("seed", s.seed);
  return s;
}

inline Json to_json(const DataSource& d) {
  if (!d.synthetic()) return {{"dir", d.dir}};
  return {{"synth", to_json(d.synth)}};
}

inline DataSource data_source_from_json(const Json& j, DataSource d = {}) {
  if (j.contains("dir")) d.dir = j.at("dir").get<std::string>();
  if (j.contains("synth")) {
    d.dir.clear();
    d.synth = synth_spec_from_json(j.at("synth"), d.synth);
  }
  return d;
}

inline Json to_json(const ExperimentConfig& c) {
  return {{"topology", c.topology},
          {"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"inference", to_json(c.inference)},
          {"train_data", to_json(c.train_data)},
          {"test_data", to_json(c.test_data)},
          {"output_dir", c.output_dir},
          {"fit_normalization", c.fit_normalization},
          {"checkpoint_every", c.checkpoint_every},
          {"stop_after", c.stop_after},
          {"resume", c.resume}};
}

/// Keys absent from `j` keep their value in `c`. A top-level "window" sets all
/// three windows at once.
inline ExperimentConfig experiment_from_json(const Json& j, ExperimentConfig c = toy_config()) {
  try {
    if (!j.is_object()) throw InvalidConfig("experiment config must be a JSON object");
    c.topology = j.value("topology", c.topology);
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"), c.model);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    if (j.contains("inference")) c.inference = inference_config_from_json(j.at("inference"), c.inference);
    if (j.contains("window")) c.set_window(j.at("window").get<std::size_t>());
    if (j.contains("train_data")) c.train_data = data_source_from_json(j.at("train_data"), c.train_data);
    if (j.contains("test_data")) c.test_data = data_source_from_json(j.at("test_data"), c.test_data);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.fit_normalization = j.value("fit_normalization", c.fit_normalization);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.stop_after = j.value("stop_after", c.stop_after);
    c.resume = j.value("resume", c.resume);
  } catch (const Json::exception& e) {
    throw InvalidConfig(std::string("bad config value: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig base = toy_config()) {
  if (!std::filesystem::exists(path)) throw InvalidConfig("config file " + path.string() + " does not exist");
  Json j;
  try {
    j = Json::parse(detail::read_file(path));
  } catch (const Json::exception& e) {
    throw InvalidConfig("config file " + path.string() + ": " + e.what());
  }
  return experiment_from_json(j, std::move(base));
}

// ---------------------------------------------------------------- data

inline std::vector<PairedSequence> load_data(const DataSource& src, const SkeletonTopology& topo) {
  if (!src.synthetic()) {
    auto data = load_dataset(src.dir);
    for (const auto& s : data)
      if (s.p2d.joints != topo.num_joints())
        throw TopologyMismatch(src.dir + ": sequences have " + std::to_string(s.p2d.joints) + " joints, topology " +
                               std::to_string(topo.num_joints()));
    return data;
  }
  return gen_lifting_dataset(src.synth, topo);
}

// ---------------------------------------------------------------- evaluation

/// Sliding-window evaluation of any lifter over paired sequences.
inline EvalReport evaluate_lifter(const BatchLifter& lifter, const SkeletonTopology& topo,
                                  const std::vector<PairedSequence>& data, const InferenceConfig& cfg) {
  if (data.empty()) throw EmptyDataset("evaluation set is empty");
  MetricAccumulator acc(topo.root());
  for (const auto& s : data) {
    if (s.p2d.joints != topo.num_joints()) throw TopologyMismatch("evaluation data joint count differs from the model");
    acc.add(sliding_window_predict(lifter, s.p2d, cfg, &topo), s.p3d, s.label);
  }
  return acc.report();
}

inline EvalReport evaluate_model(UgcnModel& model, const std::vector<PairedSequence>& data, const InferenceConfig& cfg) {
  if (cfg.window != model.config().frames) throw InvalidConfig("inference window must equal the model input length");
  return evaluate_lifter(model_lifter(model), model.topology(), data, cfg);
}

// ---------------------------------------------------------------- training

struct RunResult {
  EvalReport report;
  std::vector<EpochStats> history;
};

/// Hooks used by cmd_train; the in-memory sweeps leave them empty.
struct RunHooks {
  std::ostream* log = nullptr;
  Trainer::EpochCallback on_epoch;
  std::function<void(const TrainState&, UgcnModel&)> on_finish;
};

/// Trains a fresh model (or continues `resume_from`) and evaluates it on `test`.
inline RunResult train_and_evaluate(const ExperimentConfig& cfg, const SkeletonTopology& topo,
                                    const std::vector<PairedSequence>& train_data,
                                    const std::vector<PairedSequence>& test, const RunHooks& hooks = {},
                                    std::optional<Checkpoint> resume_from = std::nullopt) {
  std::optional<UgcnModel> model;
  TrainConfig tc = cfg.train;
  if (resume_from) {
    if (!(resume_from->model.topology() == topo)) throw TopologyMismatch("checkpoint topology differs from the config");
    model.emplace(std::move(resume_from->model));
    tc = resume_from->train;
  } else {
    ModelConfig mc = cfg.model;
    mc.num_joints = topo.num_joints();
    if (cfg.fit_normalization) fit_normalization(mc, train_data, topo.root(), tc.flip_probability > 0.0);
    model.emplace(mc, topo, tc.seed);
  }
  Trainer trainer(*model, tc);
  if (resume_from) trainer.set_state(resume_from->state);
  trainer.on_epoch_end([&](const EpochStats& s, const TrainState& st, UgcnModel& m) {
    if (hooks.log)
      *hooks.log << "epoch " << s.epoch << "  lr " << s.lr << "  position " << s.position_loss << "  motion "
                 << s.motion_loss << "  total " << s.total_loss << "  (" << std::fixed << std::setprecision(1)
                 << s.seconds << "s)" << std::defaultfloat << std::setprecision(6) << "\n";
    if (hooks.on_epoch) hooks.on_epoch(s, st, m);
  });
  const std::size_t until = cfg.stop_after ? std::min(cfg.stop_after, tc.epochs) : 0;
  trainer.run(train_data, until);
  RunResult r;
  r.history = trainer.state().history;
  InferenceConfig ic = cfg.inference;
  ic.window = model->config().frames;
  r.report = evaluate_model(*model, test, ic);
  if (hooks.on_finish) hooks.on_finish(trainer.state(), *model);
  return r;
}

// ---------------------------------------------------------------- commands

/// Process exit codes.
enum ExitCode : int { kOk = 0, kOther = 1, kConfigError = 2, kDataError = 3, kNumericError = 4 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const Json::exception*>(&e)) return kConfigError;
  if (dynamic_cast<const InvalidConfig*>(&e) || dynamic_cast<const IntervalTooLarge*>(&e) ||
      dynamic_cast<const EvenKernel*>(&e))
    return kConfigError;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const SchemaMismatch*>(&e) ||
      dynamic_cast<const NonFiniteValue*>(&e) || dynamic_cast<const VersionMismatch*>(&e) ||
      dynamic_cast<const EmptyDataset*>(&e) || dynamic_cast<const SequenceTooShort*>(&e) ||
      dynamic_cast<const TopologyMismatch*>(&e) || dynamic_cast<const InvalidParams*>(&e) ||
      dynamic_cast<const PointBehindCamera*>(&e) || dynamic_cast<const std::filesystem::filesystem_error*>(&e))
    return kDataError;
  if (dynamic_cast<const NonFiniteLoss*>(&e) || dynamic_cast<const DegenerateFrame*>(&e)) return kNumericError;
  return kOther;
}

namespace detail {

inline void write_json(const std::filesystem::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline std::string join(const std::vector<std::size_t>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

inline std::string fmt(double v, int precision = 6) {
  std::ostringstream o;
  o << std::setprecision(precision) << v;
  return o.str();
}

}  // namespace detail

/// Trains per config; writes config.json, train_log.tsv, checkpoint.ugcnckpt
/// and the held-out report. Nothing is written if the inputs fail to load.
inline RunResult cmd_train(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  cfg.validate();
  const SkeletonTopology topo = resolve_topology(cfg.topology);
  std::optional<Checkpoint> resume;
  if (!cfg.resume.empty()) resume = load_checkpoint(cfg.resume);
  const auto train_data = load_data(cfg.train_data, topo);
  const auto test = load_data(cfg.test_data, topo);

  const std::filesystem::path out(cfg.output_dir);
  std::filesystem::create_directories(out);
  detail::write_json(out / "config.json", to_json(cfg));

  std::string log_text = training_log_header();
  if (resume)
    for (const auto& s : resume->state.history) log_text += training_log_line(s);
  detail::write_file_atomic(out / "train_log.tsv", log_text);

  RunHooks hooks;
  hooks.log = &log;
  const TrainConfig tc = resume ? resume->train : cfg.train;
  hooks.on_epoch = [&](const EpochStats& s, const TrainState& st, UgcnModel& m) {
    log_text += training_log_line(s);
    detail::write_file_atomic(out / "train_log.tsv", log_text);
    if (cfg.checkpoint_every && st.next_epoch % cfg.checkpoint_every == 0)
      save_checkpoint(out / ("checkpoint_epoch" + std::to_string(st.next_epoch) + ".ugcnckpt"), m, tc, st);
  };
  hooks.on_finish = [&](const TrainState& st, UgcnModel& m) { save_checkpoint(out / "checkpoint.ugcnckpt", m, tc, st); };
  RunResult r = train_and_evaluate(cfg, topo, train_data, test, hooks, std::move(resume));
  save_eval_report(out, r.report);
  log << "held-out  MPJPE " << r.report.mpjpe_mm << " mm  P-MPJPE " << r.report.p_mpjpe_mm << " mm  MPJVE "
      << r.report.mpjve_mm << " mm  PCK@150 " << r.report.pck_at_150 << "  AUC " << r.report.auc << "\n";
  return r;
}

/// Loads a checkpoint and evaluates it on `data`; writes the report when
/// `output_dir` is non-empty.
inline EvalReport cmd_eval(const std::filesystem::path& checkpoint, const DataSource& data, InferenceConfig inference,
                           const std::string& output_dir = {}, std::ostream& log = std::cout) {
  inference.validate();
  Checkpoint ck = load_checkpoint(checkpoint);
  if (!data.synthetic()) {
    const std::string ref = dataset_topology_ref(data.dir);
    if (!ref.empty() && (ref == "human17" || std::filesystem::exists(ref)) && !(resolve_topology(ref) == ck.model.topology()))
      throw TopologyMismatch("dataset topology '" + ref + "' differs from the checkpoint's");
  }
  const auto test = load_data(data, ck.model.topology());
  inference.window = ck.model.config().frames;
  const EvalReport r = evaluate_model(ck.model, test, inference);
  if (!output_dir.empty()) {
    std::filesystem::create_directories(output_dir);
    detail::write_json(std::filesystem::path(output_dir) / "config.json",
                       {{"checkpoint", checkpoint.string()}, {"data", to_json(data)}, {"inference", to_json(inference)}});
    save_eval_report(output_dir, r);
  }
  log << to_json(static_cast<const EvalRow&>(r)).dump() << "\n";
  return r;
}

/// Lifts one 2-D sequence file to a 3-D sequence file.
inline PoseSequence cmd_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                              const std::filesystem::path& output, InferenceConfig inference) {
  inference.validate();
  Checkpoint ck = load_checkpoint(checkpoint);
  const LoadedSequence in = load_sequence(input);
  if (in.pose.dims != 2) throw SchemaMismatch(input.string() + " is not a 2-D sequence");
  if (in.pose.joints != ck.model.topology().num_joints())
    throw TopologyMismatch(input.string() + " joint count differs from the checkpoint");
  inference.window = ck.model.config().frames;
  PoseSequence out = sliding_window_predict(ck.model, in.pose, inference);
  save_sequence(output, out, in.meta);
  return out;
}

// ------------------------------------------------------------ pendulum toy

struct PendulumRow {
  std::string trace;
  double l1_distance = 0.0;
  double motion_loss = 0.0;
};

struct PendulumParams {
  std::size_t frames = 200;
  double amplitude = 1.0;
  double period = 40.0;
  std::uint64_t seed = 0;
};

/// Scores the three perturbed pendulum traces with the mean l1 distance and
/// the first-difference motion loss; writes pendulum.tsv and traces.tsv.
inline std::vector<PendulumRow> cmd_toy_pendulum(const std::string& output_dir, const PendulumParams& p = {},
                                                 std::ostream& log = std::cout) {
  const PendulumTraces tr = gen_pendulum(p.frames, p.amplitude, p.period, p.seed);
  LossConfig lc;
  lc.op = MotionOperator::subtraction;
  lc.intervals = {1};
  lc.lambda = 1.0;
  std::vector<PendulumRow> rows;
  for (const auto& [name, trace] : {std::pair{"similar", &tr.similar}, {"smooth_different", &tr.smooth}, {"noisy", &tr.noisy}})
    rows.push_back({name, mean_l1_distance(*trace, tr.gt), motion_loss(*trace, tr.gt, lc)});

  std::string table = "trace\tl1_distance\tmotion_loss\n";
  for (const auto& r : rows) table += r.trace + "\t" + detail::fmt(r.l1_distance, 17) + "\t" + detail::fmt(r.motion_loss, 17) + "\n";
  std::string traces = "t\tgt\tsimilar\tsmooth_different\tnoisy\n";
  for (std::size_t t = 0; t < p.frames; ++t)
    traces += std::to_string(t) + "\t" + detail::fmt(tr.gt.coords[t], 17) + "\t" + detail::fmt(tr.similar.coords[t], 17) +
              "\t" + detail::fmt(tr.smooth.coords[t], 17) + "\t" + detail::fmt(tr.noisy.coords[t], 17) + "\n";
  if (!output_dir.empty()) {
    const std::filesystem::path out(output_dir);
    std::filesystem::create_directories(out);
    detail::write_json(out / "config.json",
                       {{"frames", p.frames}, {"amplitude", p.amplitude}, {"period", p.period}, {"seed", p.seed}});
    detail::write_file_atomic(out / "pendulum.tsv", table);
    detail::write_file_atomic(out / "traces.tsv", traces);
  }
  log << table;
  return rows;
}

// ---------------------------------------------------------------- ablation

/// Cartesian sweep. Every variant trains on the same data; `seeds` varies the
/// training seed, and with `reseed_data` also the synthetic data seeds.
struct SweepSpec {
  std::vector<MotionOperator> operators{MotionOperator::cross_product};
  std::vector<std::vector<std::size_t>> interval_sets{{8, 12, 16, 24}};
  std::vector<double> lambdas{0.0, 1.0};
  std::vector<std::size_t> scale_pairs{4};
  std::vector<std::uint64_t> seeds{1};
  bool reseed_data = false;

  std::size_t size() const {
    return operators.size() * interval_sets.size() * lambdas.size() * scale_pairs.size() * seeds.size();
  }
};

inline Json to_json(const SweepSpec& s) {
  std::vector<std::string> ops;
  for (auto o : s.operators) ops.push_back(to_string(o));
  return {{"operators", ops}, {"interval_sets", s.interval_sets}, {"lambdas", s.lambdas},
          {"scale_pairs", s.scale_pairs}, {"seeds", s.seeds}, {"reseed_data", s.reseed_data}};
}

inline SweepSpec sweep_spec_from_json(const Json& j, SweepSpec s = {}) {
  try {
    if (j.contains("operators")) {
      s.operators.clear();
      for (const auto& o : j.at("operators")) s.operators.push_back(parse_motion_operator(o.get<std::string>()));
    }
    if (j.contains("interval_sets")) s.interval_sets = j.at("interval_sets").get<std::vector<std::vector<std::size_t>>>();
    if (j.contains("lambdas")) s.lambdas = j.at("lambdas").get<std::vector<double>>();
    if (j.contains("scale_pairs")) s.scale_pairs = j.at("scale_pairs").get<std::vector<std::size_t>>();
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.reseed_data = j.value("reseed_data", s.reseed_data);
  } catch (const Json::exception& e) {
    throw InvalidConfig(std::string("bad sweep value: ") + e.what());
  }
  if (s.size() == 0) throw InvalidConfig("sweep has no variants");
  return s;
}

struct AblationRow {
  std::uint64_t seed = 0;
  std::size_t scale_pairs = 0;
  MotionOperator op = MotionOperator::cross_product;
  std::vector<std::size_t> intervals;
  double lambda = 0.0;
  EvalRow metrics;
  double final_loss = 0.0;
};

inline ExperimentConfig with_seed(ExperimentConfig c, std::uint64_t seed, bool reseed_data) {
  c.train.seed = seed;
  if (reseed_data) {
    c.train_data.synth.seed = seed;
    c.test_data.synth.seed = 1000 + seed;
  }
  return c;
}

inline std::string ablation_header() {
  return "seed\tscale_pairs\toperator\tintervals\tlambda\tmpjpe_mm\tp_mpjpe_mm\tmpjve_mm\tpck_at_150\tauc\tfinal_loss\n";
}

inline std::string ablation_line(const AblationRow& r) {
  return std::to_string(r.seed) + "\t" + std::to_string(r.scale_pairs) + "\t" + to_string(r.op) + "\t" +
         (r.intervals.empty() ? "none" : detail::join(r.intervals)) + "\t" + detail::fmt(r.lambda) + "\t" +
         detail::fmt(r.metrics.mpjpe_mm, 10) + "\t" + detail::fmt(r.metrics.p_mpjpe_mm, 10) + "\t" +
         detail::fmt(r.metrics.mpjve_mm, 10) + "\t" + detail::fmt(r.metrics.pck_at_150, 10) + "\t" +
         detail::fmt(r.metrics.auc, 10) + "\t" + detail::fmt(r.final_loss, 10) + "\n";
}

/// Trains every variant of `sweep` and writes ablation.tsv (rows appended as
/// they finish).
inline std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, const SweepSpec& sweep,
                                           std::ostream& log = std::cout) {
  if (sweep.size() == 0) throw InvalidConfig("sweep has no variants");
  cfg.validate();
  const SkeletonTopology topo = resolve_topology(cfg.topology);
  // Validate every variant before training anything.
  for (auto pairs : sweep.scale_pairs) {
    ExperimentConfig c = cfg;
    c.model = c.model.with_scale_pairs(pairs);
    c.validate();
    for (const auto& iv : sweep.interval_sets) {
      c.train.loss.intervals = iv;
      c.train.loss.validate(c.train.window);
    }
  }
  const std::filesystem::path out(cfg.output_dir);
  std::vector<AblationRow> rows;
  std::string table = ablation_header();
  bool dirs_made = false;
  for (auto seed : sweep.seeds) {
    const ExperimentConfig base = with_seed(cfg, seed, sweep.reseed_data);
    const auto train_data = load_data(base.train_data, topo);
    const auto test = load_data(base.test_data, topo);
    if (!dirs_made) {
      std::filesystem::create_directories(out);
      detail::write_json(out / "config.json", {{"experiment", to_json(cfg)}, {"sweep", to_json(sweep)}});
      dirs_made = true;
    }
    for (auto pairs : sweep.scale_pairs)
      for (auto op : sweep.operators)
        for (const auto& iv : sweep.interval_sets)
          for (double lambda : sweep.lambdas) {
            ExperimentConfig c = base;
            c.model = c.model.with_scale_pairs(pairs);
            c.train.loss.op = op;
            c.train.loss.intervals = iv;
            c.train.loss.lambda = lambda;
            const RunResult r = train_and_evaluate(c, topo, train_data, test);
            AblationRow row{seed, pairs, op, iv, lambda, r.report, r.history.empty() ? 0.0 : r.history.back().total_loss};
            rows.push_back(row);
            table += ablation_line(row);
            detail::write_file_atomic(out / "ablation.tsv", table);
            log << ablation_line(row) << std::flush;
          }
  }
  return rows;
}

// -------------------------------------------------------------- noise curve

/// Sample Pearson correlation; NaN when either side has zero variance.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidConfig("pearson needs two equal-length samples of size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

/// Mean 2-norm distance between corresponding 2-D keypoints.
inline double mean_2d_error(const std::vector<PairedSequence>& noisy, const std::vector<PairedSequence>& clean) {
  if (noisy.size() != clean.size()) throw ShapeMismatch("mean_2d_error: dataset sizes differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < noisy.size(); ++s) {
    require_same_shape(noisy[s].p2d, clean[s].p2d, "mean_2d_error");
    for (std::size_t t = 0; t < noisy[s].p2d.frames; ++t)
      for (std::size_t j = 0; j < noisy[s].p2d.joints; ++j) {
        const double dx = noisy[s].p2d.at(t, j, 0) - clean[s].p2d.at(t, j, 0);
        const double dy = noisy[s].p2d.at(t, j, 1) - clean[s].p2d.at(t, j, 1);
        sum += std::sqrt(dx * dx + dy * dy);
        ++n;
      }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

struct NoiseCurveRow {
  double sigma = 0.0;
  double mean_2d_error = 0.0;
  EvalRow metrics;
};

struct NoiseCurve {
  std::vector<NoiseCurveRow> rows;
  double pearson = 0.0;
};

/// Trains and evaluates once per 2-D noise scale (train and test share the
/// scale); writes noise_curve.tsv with the correlation in a trailing comment.
inline NoiseCurve cmd_noise_curve(const ExperimentConfig& cfg, const std::vector<double>& sigmas,
                                  std::ostream& log = std::cout) {
  if (sigmas.empty()) throw InvalidConfig("noise curve needs at least one sigma");
  for (double s : sigmas)
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidConfig("noise sigma must be finite and non-negative");
  if (!cfg.train_data.synthetic() || !cfg.test_data.synthetic())
    throw InvalidConfig("noise curve needs synthetic train and test data");
  cfg.validate();
  const SkeletonTopology topo = resolve_topology(cfg.topology);
  const std::filesystem::path out(cfg.output_dir);
  std::filesystem::create_directories(out);
  detail::write_json(out / "config.json", {{"experiment", to_json(cfg)}, {"sigmas", sigmas}});

  SynthDatasetSpec clean_spec = cfg.test_data.synth;
  clean_spec.noise_sigma = 0.0;
  const auto clean = gen_lifting_dataset(clean_spec, topo);
  NoiseCurve curve;
  std::string table = "sigma\tmean_2d_error\tmpjpe_mm\tp_mpjpe_mm\tmpjve_mm\n";
  for (double sigma : sigmas) {
    ExperimentConfig c = cfg;
    c.train_data.synth.noise_sigma = sigma;
    c.test_data.synth.noise_sigma = sigma;
    const auto train_data = load_data(c.train_data, topo);
    const auto test = load_data(c.test_data, topo);
    const RunResult r = train_and_evaluate(c, topo, train_data, test);
    NoiseCurveRow row{sigma, mean_2d_error(test, clean), r.report};
    curve.rows.push_back(row);
    const std::string line = detail::fmt(sigma) + "\t" + detail::fmt(row.mean_2d_error, 10) + "\t" +
                             detail::fmt(row.metrics.mpjpe_mm, 10) + "\t" + detail::fmt(row.metrics.p_mpjpe_mm, 10) +
                             "\t" + detail::fmt(row.metrics.mpjve_mm, 10) + "\n";
    table += line;
    detail::write_file_atomic(out / "noise_curve.tsv", table);
    log << line << std::flush;
  }
  if (curve.rows.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& r : curve.rows) {
      x.push_back(r.mean_2d_error);
      y.push_back(r.metrics.mpjpe_mm);
    }
    curve.pearson = pearson(x, y);
  } else {
    curve.pearson = std::numeric_limits<double>::quiet_NaN();
  }
  table += "# pearson\t" + detail::fmt(curve.pearson, 10) + "\n";
  detail::write_file_atomic(out / "noise_curve.tsv", table);
  log << "pearson(mean 2D error, MPJPE) = " << curve.pearson << "\n";
  return curve;
}

// ---------------------------------------------------------------- gradcheck

/// Runs the finite-difference suite and prints one line per check.
inline GradSuiteResult cmd_gradcheck(const GradSuiteOptions& opt = {}, std::ostream& log = std::cout) {
  GradSuiteResult r = run_gradcheck_suite(opt);
  log << std::left << std::setw(40) << "check" << std::right << std::setw(10) << "entries" << std::setw(14)
      << "max_rel_err" << std::setw(10) << "refined" << "  status\n";
  for (const auto& s : r.summary())
    log << std::left << std::setw(40) << s.name << std::right << std::setw(10) << s.checked << std::setw(14)
        << std::setprecision(3) << s.max_rel_error << std::setw(10) << s.refined << "  " << (s.passed ? "ok" : "FAIL")
        << "\n";
  log << std::setprecision(6) << (r.passed ? "all checks passed" : "gradient check FAILED") << "\n";
  return r;
}

}  // namespace ugcn
