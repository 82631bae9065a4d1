// ugcn command-line entry point. Every experiment subcommand reads an optional
// JSON config (--config) and then applies flag overrides on top of it.

#include <cstring>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ugcn/experiment.hpp"

namespace {

using namespace ugcn;

std::vector<std::size_t> parse_intervals(const std::string& s) {
  std::vector<std::size_t> out;
  if (s == "none" || s.empty()) return out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw InvalidConfig("bad interval list '" + s + "'");
    }
  }
  return out;
}

// Value of --config/-c if present, scanned before the real parse so that the
// file provides the defaults the flags then override.
std::string find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if ((a == "--config" || a == "-c") && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

struct Overrides {
  std::string op, norm, intervals, train_dir, test_dir;
  std::size_t window = 0, scale_pairs = 99;
  double sigma = -1.0;
  bool no_flip_test = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentConfig& c, Overrides& o) {
  cmd->add_option("-c,--config", "JSON experiment config");
  cmd->add_option("-o,--output", c.output_dir, "output directory");
  cmd->add_option("--topology", c.topology, "'human17' or a topology JSON file");
  cmd->add_option("--width", c.model.width, "channels per block");
  cmd->add_option("--kernel", c.model.kernel, "temporal kernel size (odd)");
  cmd->add_option("--dropout", c.model.dropout);
  cmd->add_option("--residual", c.model.residual, "residual connections inside blocks");
  cmd->add_option("--center-input", c.model.center_input, "express keypoints relative to the root");
  cmd->add_option("--scale-pairs", o.scale_pairs, "number of downsample/upsample pairs (0-4)");
  cmd->add_option("--window", o.window, "temporal window for model, training and inference");
  cmd->add_option("--epochs", c.train.epochs);
  cmd->add_option("--batch-size", c.train.batch_size);
  cmd->add_option("--lr", c.train.schedule.initial);
  cmd->add_option("--lr-factor", c.train.schedule.factor);
  cmd->add_option("--lr-decay", c.train.schedule.decay_epochs, "epochs at which the learning rate decays")->delimiter(',');
  cmd->add_option("--weight-decay", c.train.weight_decay);
  cmd->add_option("--crops", c.train.crops_per_sequence, "random windows per sequence per epoch");
  cmd->add_option("--flip-prob", c.train.flip_probability);
  cmd->add_option("--loss-scale", c.train.loss_scale);
  cmd->add_option("--seed", c.train.seed);
  cmd->add_option("--operator", o.op, "subtraction | inner_product | cross_product");
  cmd->add_option("--intervals", o.intervals, "comma-separated motion intervals or 'none'");
  cmd->add_option("--lambda", c.train.loss.lambda);
  cmd->add_option("--norm", o.norm, "l1 | l2");
  cmd->add_option("--step", c.inference.step, "sliding-window stride at inference");
  cmd->add_flag("--no-flip-test", o.no_flip_test);
  cmd->add_option("--train-dir", o.train_dir, "training dataset directory");
  cmd->add_option("--test-dir", o.test_dir, "held-out dataset directory");
  cmd->add_option("--train-sequences", c.train_data.synth.sequences);
  cmd->add_option("--test-sequences", c.test_data.synth.sequences);
  cmd->add_option("--train-seed", c.train_data.synth.seed);
  cmd->add_option("--test-seed", c.test_data.synth.seed);
  cmd->add_option("--sigma", o.sigma, "2-D noise scale of the synthetic data");
  cmd->add_option("--checkpoint-every", c.checkpoint_every);
  cmd->add_option("--stop-after", c.stop_after, "stop after this many epochs");
  cmd->add_option("--resume", c.resume, "checkpoint to continue from");
}

void apply(ExperimentConfig& c, const Overrides& o) {
  if (o.window) c.set_window(o.window);
  if (o.scale_pairs != 99) c.model = c.model.with_scale_pairs(o.scale_pairs);
  if (!o.op.empty()) c.train.loss.op = parse_motion_operator(o.op);
  if (!o.norm.empty()) {
    if (o.norm != "l1" && o.norm != "l2") throw InvalidConfig("norm must be l1 or l2");
    c.train.loss.norm = o.norm == "l1" ? MotionNorm::l1 : MotionNorm::l2;
  }
  if (!o.intervals.empty()) c.train.loss.intervals = parse_intervals(o.intervals);
  if (!o.train_dir.empty()) c.train_data.dir = o.train_dir;
  if (!o.test_dir.empty()) c.test_data.dir = o.test_dir;
  if (o.sigma >= 0.0) {
    c.train_data.synth.noise_sigma = o.sigma;
    c.test_data.synth.noise_sigma = o.sigma;
  }
  if (o.no_flip_test) c.inference.flip_test = false;
}

int run(int argc, char** argv) {
  ExperimentConfig cfg = toy_config();
  const std::string config_path = find_config(argc, argv);
  if (!config_path.empty()) cfg = load_experiment_config(config_path);
  Overrides ov;

  CLI::App app{"UGCN: 2-D to 3-D pose lifting with a motion loss"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model and evaluate it on held-out data");
  add_experiment_flags(train, cfg, ov);

  std::string checkpoint, data_dir, input, output;
  InferenceConfig inf;
  bool no_flip = false;
  DataSource eval_data = cfg.test_data;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data_dir, "dataset directory (default: synthetic held-out set)");
  eval->add_option("--test-sequences", eval_data.synth.sequences);
  eval->add_option("--test-seed", eval_data.synth.seed);
  eval->add_option("--sigma", eval_data.synth.noise_sigma);
  eval->add_option("--step", inf.step);
  eval->add_flag("--no-flip-test", no_flip);
  eval->add_option("-o,--output", output, "directory for report.json");

  auto* infer = app.add_subcommand("infer", "lift a 2-D sequence file to 3-D");
  infer->add_option("--checkpoint", checkpoint)->required();
  infer->add_option("--input", input)->required();
  infer->add_option("-o,--output", output)->required();
  infer->add_option("--step", inf.step);
  infer->add_flag("--no-flip-test", no_flip);

  PendulumParams pend;
  std::string pend_out = "runs/pendulum";
  auto* toy = app.add_subcommand("toy-pendulum", "motion loss vs positional distance on pendulum traces");
  toy->add_option("-o,--output", pend_out);
  toy->add_option("--frames", pend.frames);
  toy->add_option("--amplitude", pend.amplitude);
  toy->add_option("--period", pend.period);
  toy->add_option("--seed", pend.seed);

  SweepSpec sweep;
  std::string sweep_path, operators, interval_sets;
  std::vector<double> lambdas;
  std::vector<std::size_t> pair_list;
  std::vector<std::uint64_t> seeds;
  bool reseed = false;
  auto* ablate = app.add_subcommand("ablate", "train a cartesian sweep of variants");
  add_experiment_flags(ablate, cfg, ov);
  ablate->add_option("--sweep", sweep_path, "JSON sweep spec");
  ablate->add_option("--operators", operators, "comma-separated operators");
  ablate->add_option("--interval-sets", interval_sets, "semicolon-separated interval lists, e.g. 'none;2;12'");
  ablate->add_option("--lambdas", lambdas)->delimiter(',');
  ablate->add_option("--pairs", pair_list, "downsample/upsample pair counts")->delimiter(',');
  ablate->add_option("--seeds", seeds)->delimiter(',');
  ablate->add_flag("--reseed-data", reseed, "also vary the synthetic data seed");

  std::vector<double> sigmas{0, 1, 2, 4, 8};
  auto* noise = app.add_subcommand("noise-curve", "2-D noise scale vs 3-D error");
  add_experiment_flags(noise, cfg, ov);
  noise->add_option("--sigmas", sigmas)->delimiter(',');

  GradSuiteOptions gopt;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every backward rule");
  grad->add_option("--seeds", gopt.seeds);
  grad->add_option("--base-seed", gopt.base_seed);
  grad->add_flag("--inject-fault", gopt.inject_fault, "add a deliberately wrong backward rule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*train) {
    apply(cfg, ov);
    cmd_train(cfg);
  } else if (*eval) {
    if (!data_dir.empty()) eval_data.dir = data_dir;
    inf.flip_test = !no_flip;
    cmd_eval(checkpoint, eval_data, inf, output);
  } else if (*infer) {
    inf.flip_test = !no_flip;
    cmd_infer(checkpoint, input, output, inf);
  } else if (*toy) {
    const auto rows = cmd_toy_pendulum(pend_out, pend);
    const bool ordered = rows[0].motion_loss < rows[1].motion_loss && rows[1].motion_loss < rows[2].motion_loss;
    std::cout << (ordered ? "motion loss orders the traces: similar < smooth_different < noisy"
                          : "motion loss does NOT order the traces")
              << "\n";
  } else if (*ablate) {
    apply(cfg, ov);
    if (!sweep_path.empty()) sweep = sweep_spec_from_json(Json::parse(detail::read_file(sweep_path)), sweep);
    if (!operators.empty()) {
      sweep.operators.clear();
      std::stringstream in(operators);
      std::string tok;
      while (std::getline(in, tok, ',')) sweep.operators.push_back(parse_motion_operator(tok));
    }
    if (!interval_sets.empty()) {
      sweep.interval_sets.clear();
      std::stringstream in(interval_sets);
      std::string tok;
      while (std::getline(in, tok, ';')) sweep.interval_sets.push_back(parse_intervals(tok));
    }
    if (!lambdas.empty()) sweep.lambdas = lambdas;
    if (!pair_list.empty()) sweep.scale_pairs = pair_list;
    if (!seeds.empty()) sweep.seeds = seeds;
    if (reseed) sweep.reseed_data = true;
    cmd_ablate(cfg, sweep);
  } else if (*noise) {
    apply(cfg, ov);
    cmd_noise_curve(cfg, sigmas);
  } else if (*grad) {
    const GradSuiteResult r = cmd_gradcheck(gopt);
    return r.passed ? kOk : kNumericError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ugcn::exit_code_for(e);
  }
}
