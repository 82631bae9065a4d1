#pragma once

// Finite-difference checks of every differentiable operation, the loss
// functions and a tiny complete model.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ugcn/autodiff.hpp"
#include "ugcn/gradcheck.hpp"
#include "ugcn/loss.hpp"
#include "ugcn/model.hpp"
#include "ugcn/nn.hpp"
#include "ugcn/skeleton.hpp"

namespace ugcn {

struct GradSuiteOptions {
  std::size_t seeds = 20;
  std::uint64_t base_seed = 0;
  GradCheckOptions check;
  // Entries sampled per model parameter tensor; 0 checks all of them.
  std::size_t model_entries = 6;
  // Adds an operation with a deliberately wrong backward rule.
  bool inject_fault = false;
};

namespace detail {

/// sum(y * R) for a fixed random R, turning any op into a scalar test function.
inline Var project(const Var& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  return sum(mul(y, Var::constant(Tensor::normal(y.shape(), 1.0, rng))));
}

/// scale(x, 2) with a backward rule that is off by 10 %.
inline Var faulty_double(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.vec()) v *= 2.0;
  return make_op(std::move(out), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += 1.8 * self.grad[i];
  });
}

// Values bounded away from zero keep relu/abs away from their kinks.
inline Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor t = Tensor::uniform(std::move(shape), 0.2, 1.5, rng);
  std::bernoulli_distribution neg(0.5);
  for (auto& v : t.vec())
    if (neg(rng)) v = -v;
  return t;
}

inline SkeletonTopology chain3() { return build_topology(3, {{0, 1}, {1, 2}}, 1, {2, 1, 0}); }

}  // namespace detail

struct GradSuiteResult {
  std::vector<GradCheckReport> reports;  // one per check and seed
  bool passed = true;

  /// Worst relative error per check name, in first-seen order.
  std::vector<GradCheckReport> summary() const {
    std::vector<GradCheckReport> out;
    for (const auto& r : reports) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& o) { return o.name == r.name; });
      if (it == out.end()) {
        out.push_back(r);
        continue;
      }
      it->checked += r.checked;
      it->refined += r.refined;
      it->passed = it->passed && r.passed;
      it->finite = it->finite && r.finite;
      it->max_abs_error = std::max(it->max_abs_error, r.max_abs_error);
      if (r.max_rel_error > it->max_rel_error) {
        it->max_rel_error = r.max_rel_error;
        it->worst_index = r.worst_index;
      }
    }
    return out;
  }
};

inline GradSuiteResult run_gradcheck_suite(const GradSuiteOptions& opt = {}) {
  GradSuiteResult result;
  for (std::size_t s = 0; s < opt.seeds; ++s) {
    const std::uint64_t seed = opt.base_seed + s;
    std::mt19937_64 rng(seed);
    auto check_fn = [&](const std::string& name, const std::function<Var(const Var&)>& f, const Tensor& x) {
      result.reports.push_back(grad_check(f, x, opt.check, name));
    };
    auto projected = [&](const std::function<Var(const Var&)>& f) {
      return [f, seed](const Var& x) { return detail::project(f(x), seed); };
    };
    auto rand = [&](Shape shape) { return Tensor::normal(std::move(shape), 1.0, rng); };

    // elementwise and structural ops
    const Tensor b34 = rand({3, 4}), b234 = rand({2, 3, 4});
    check_fn("add", projected([&](const Var& x) { return add(x, Var::constant(b34)); }), rand({2, 3, 4}));
    check_fn("add/broadcast", projected([&](const Var& x) { return add(Var::constant(b234), x); }),
             rand({3, 4}));
    check_fn("sub", projected([&](const Var& x) { return sub(Var::constant(b34), x); }), rand({3, 4}));
    check_fn("mul", projected([&](const Var& x) { return mul(x, x); }), rand({2, 5}));
    check_fn("scale", projected([](const Var& x) { return scale(x, -1.7); }), rand({4}));
    check_fn("relu", projected([](const Var& x) { return relu(x); }), detail::away_from_zero({3, 5}, rng));
    check_fn("abs", projected([](const Var& x) { return abs(x); }), detail::away_from_zero({3, 5}, rng));
    check_fn("reshape", projected([](const Var& x) { return reshape(x, {6, 2}); }), rand({3, 4}));
    const Tensor m45 = rand({4, 5});
    check_fn("matmul", projected([&](const Var& x) { return matmul(x, Var::constant(m45)); }), rand({3, 4}));
    check_fn("matmul/rhs", projected([&](const Var& x) { return matmul(Var::constant(m45), x); }), rand({5, 2}));
    check_fn("reduce/sum", projected([](const Var& x) { return reduce(ReduceKind::sum, x, {1}); }), rand({2, 3, 4}));
    check_fn("reduce/mean", projected([](const Var& x) { return reduce(ReduceKind::mean, x, {0, 2}); }), rand({2, 3, 4}));

    // temporal convolution: input, weight and bias
    const Tensor w = rand({3, 2, 3}), bias = rand({3});
    for (std::size_t stride : {1u, 2u}) {
      const std::string tag = "conv_time/stride" + std::to_string(stride);
      check_fn(tag + "/input", projected([&, stride](const Var& x) {
                 return conv_time(x, Var::constant(w), stride, Var::constant(bias));
               }),
               rand({2, 2, 7, 3}));
      const Tensor x0 = rand({2, 2, 7, 3});
      check_fn(tag + "/weight", projected([&, stride](const Var& k) {
                 return conv_time(Var::constant(x0), k, stride, Var::constant(bias));
               }),
               w);
      check_fn(tag + "/bias", projected([&, stride](const Var& b) { return conv_time(Var::constant(x0), Var::constant(w), stride, b); }),
               bias);
    }

    // graph ops and block pieces
    const SkeletonTopology topo = detail::chain3();
    const PartitionedAdjacency A = partition_adjacency(topo);
    const std::array<Tensor, 3> W{rand({4, 2}), rand({4, 2}), rand({4, 2})};
    auto constW = [&] { return std::array<Var, 3>{Var::constant(W[0]), Var::constant(W[1]), Var::constant(W[2])}; };
    check_fn("spatial_graph_conv/input", projected([&](const Var& x) { return spatial_graph_conv(x, A, constW()); }),
             rand({2, 2, 4, 3}));
    const Tensor xg = rand({2, 2, 4, 3});
    for (std::size_t l = 0; l < 3; ++l)
      check_fn("spatial_graph_conv/weight" + std::to_string(l), projected([&, l](const Var& wl) {
                 auto ws = constW();
                 ws[l] = wl;
                 return spatial_graph_conv(Var::constant(xg), A, ws);
               }),
               W[l]);

    BatchNormParams bn = BatchNormParams::create(2);
    bn.gamma.mutable_value() = rand({2});
    bn.beta.mutable_value() = rand({2});
    bn.running_var = Tensor(Shape{2}, 1.3);
    check_fn("batch_norm/train", projected([&](const Var& x) { return batch_norm(x, bn, Mode::train); }), rand({2, 2, 4, 3}));
    check_fn("batch_norm/eval", projected([&](const Var& x) { return batch_norm(x, bn, Mode::eval); }), rand({2, 2, 4, 3}));
    const Tensor xb = rand({2, 2, 4, 3});
    check_fn("batch_norm/gamma", projected([&](const Var& g) {
               BatchNormParams p = bn;
               p.gamma = g;
               return batch_norm(Var::constant(xb), p, Mode::train);
             }),
             bn.gamma.value());
    check_fn("batch_norm/beta", projected([&](const Var& b) {
               BatchNormParams p = bn;
               p.beta = b;
               return batch_norm(Var::constant(xb), p, Mode::train);
             }),
             bn.beta.value());
    check_fn("dropout", projected([&](const Var& x) { return dropout(x, 0.3, Mode::train, seed); }), rand({2, 3, 4}));
    check_fn("temporal_upsample", projected([](const Var& x) { return temporal_upsample(x); }), rand({2, 2, 3, 3}));

    std::mt19937_64 block_rng(seed + 1000);
    StgcnBlockParams block = StgcnBlockParams::create(2, 4, 3, 2, 0.2, block_rng, false);
    check_fn("stgcn_block", projected([&](const Var& x) { return stgcn_block(x, block, A, Mode::train, seed); }),
             rand({2, 2, 6, 3}));
    StgcnBlockParams res_block = StgcnBlockParams::create(3, 3, 3, 1, 0.0, block_rng, true);
    check_fn("stgcn_block/residual", projected([&](const Var& x) { return stgcn_block(x, res_block, A, Mode::train, seed); }),
             rand({1, 3, 5, 3}));
    check_fn("pose_to_channels", projected([](const Var& x) { return pose_to_channels(x, {0.3, -0.2}, 0.7); }),
             rand({2, 4, 3, 2}));
    check_fn("pose_to_channels/centered",
             projected([](const Var& x) { return pose_to_channels(x, {0.3, -0.2}, 0.7, std::size_t{1}); }), rand({2, 4, 3, 2}));
    check_fn("channels_to_root_relative", projected([](const Var& x) { return channels_to_root_relative(x, 1, 2.5); }),
             rand({2, 3, 4, 3}));

    // losses
    const Tensor gt = rand({2, 8, 3, 3});
    for (auto op : {MotionOperator::subtraction, MotionOperator::inner_product, MotionOperator::cross_product}) {
      const std::string name = to_string(op);
      check_fn("encode_motion/" + name, projected([op](const Var& x) { return encode_motion(x, 3, op); }), rand({2, 8, 3, 3}));
      for (auto norm : {MotionNorm::l1, MotionNorm::l2}) {
        LossConfig cfg;
        cfg.op = op;
        cfg.norm = norm;
        cfg.intervals = {1, 2, 5};
        check_fn("motion_loss/" + name + (norm == MotionNorm::l1 ? "/l1" : "/l2"),
                 [&, cfg](const Var& x) { return motion_loss(x, Var::constant(gt), cfg); }, rand({2, 8, 3, 3}));
      }
    }
    check_fn("row_norm_sum", [](const Var& x) { return row_norm_sum(x); }, rand({4, 3}));
    check_fn("position_loss", [&](const Var& x) { return position_loss(x, Var::constant(gt)); }, rand({2, 8, 3, 3}));
    {
      LossConfig cfg;
      cfg.intervals = {2, 4};
      cfg.lambda = 0.7;
      check_fn("combined_loss", [&, cfg](const Var& x) { return combined_loss(x, Var::constant(gt), cfg); },
               rand({2, 8, 3, 3}));
    }
    check_fn("derivative_loss", [&](const Var& x) { return derivative_loss(x, Var::constant(gt)); }, rand({2, 8, 3, 3}));
    if (opt.inject_fault)
      check_fn("fault_injected", projected([](const Var& x) { return detail::faulty_double(x); }), rand({3, 3}));

    // tiny complete model: every parameter tensor and the input
    ModelConfig mc;
    mc.frames = 16;
    mc.num_joints = 3;
    mc.width = 4;
    mc.kernel = 3;
    mc.dropout = 0.1;
    mc.input_scale = 0.8;
    mc.output_scale = 1.3;
    UgcnModel model(mc, topo, seed);
    const Tensor x_in = rand({2, 16, 3, 2});
    const Tensor target = rand({2, 16, 3, 3});
    LossConfig lc;
    lc.intervals = {2, 5};
    Var input = Var::parameter(x_in);
    auto loss = [&] { return combined_loss(model.forward(input, Mode::train, seed), Var::constant(target), lc); };
    GradCheckOptions sampled = opt.check;
    sampled.max_entries = opt.model_entries;
    for (auto& p : model.parameters()) {
      sampled.sample_seed = seed;
      GradCheckReport r = grad_check_param(loss, p.var, sampled, "ugcn/" + p.name);
      r.name = "ugcn/parameters";
      result.reports.push_back(r);
    }
    sampled.max_entries = 0;
    result.reports.push_back(grad_check_param(loss, input, sampled, "ugcn/input"));
  }
  for (const auto& r : result.reports) result.passed = result.passed && r.passed;
  return result;
}

}  // namespace ugcn
