#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ugcn/autodiff.hpp"
#include "ugcn/skeleton.hpp"

namespace ugcn {

enum class Mode { train, eval };

/// A trainable array with its checkpoint name. `decay` marks convolution
/// weights, the only parameters that receive weight decay.
struct NamedParam {
  std::string name;
  Var var;
  bool decay = false;
};

/// Non-trainable state that still belongs in a checkpoint.
struct NamedBuffer {
  std::string name;
  Tensor* tensor = nullptr;
};

namespace detail {

struct Dims4 {
  std::size_t N, C, T, M;
  bool batched;
};

inline Dims4 dims4(const Shape& s, const char* op) {
  if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
  if (s.size() == 3) return {1, s[0], s[1], s[2], false};
  throw ShapeMismatch(std::string(op) + " expects (N,C,T,M) or (C,T,M), got " + shape_str(s));
}

inline Shape with_channels(const Dims4& d, std::size_t C, std::size_t T) {
  return d.batched ? Shape{d.N, C, T, d.M} : Shape{C, T, d.M};
}

}  // namespace detail

// --------------------------------------------------------- spatial graph conv

/// f_s = sum_l W_l * f_in * A_l^T per frame; normalization lives in A.
inline Var spatial_graph_conv(const Var& x, const PartitionedAdjacency& A, const std::array<Var, 3>& W) {
  const auto d = detail::dims4(x.shape(), "spatial_graph_conv");
  if (A.num_joints() != d.M)
    throw ShapeMismatch("adjacency has " + std::to_string(A.num_joints()) + " joints, input has " + std::to_string(d.M));
  const Shape& ws = W[0].shape();
  if (ws.size() != 2 || ws[1] != d.C) throw ShapeMismatch("spatial weight " + shape_str(ws) + " for " + std::to_string(d.C) + " channels");
  for (const auto& w : W)
    if (w.shape() != ws) throw ShapeMismatch("spatial weights differ in shape");
  const std::size_t O = ws[0], C = d.C, TM = d.T * d.M, M = d.M;

  // z_l = x aggregated over subset l, kept for the weight gradient.
  auto z = std::make_shared<std::array<Tensor, 3>>();
  Tensor out(detail::with_channels(d, O, d.T));
  for (std::size_t l = 0; l < 3; ++l) {
    Tensor& zl = (*z)[l] = Tensor(Shape{d.N, C, d.T, M});
    const auto& entries = A.entries(l);
    for (std::size_t nc = 0; nc < d.N * C; ++nc)
      for (std::size_t t = 0; t < d.T; ++t) {
        const std::size_t base = nc * TM + t * M;
        for (const auto& e : entries) zl[base + e.row] += e.weight * x.value()[base + e.col];
      }
    const auto& Wl = W[l].value();
    for (std::size_t n = 0; n < d.N; ++n)
      for (std::size_t o = 0; o < O; ++o) {
        double* orow = &out[(n * O + o) * TM];
        for (std::size_t c = 0; c < C; ++c) {
          const double w = Wl[o * C + c];
          const double* zrow = &zl[(n * C + c) * TM];
          for (std::size_t i = 0; i < TM; ++i) orow[i] += w * zrow[i];
        }
      }
  }

  std::array<std::vector<PartitionedAdjacency::Entry>, 3> entries{A.entries(0), A.entries(1), A.entries(2)};
  return make_op(std::move(out), {x, W[0], W[1], W[2]}, [z, d, O, C, TM, M, entries = std::move(entries)](Node& self) {
    Node& px = *self.parents[0];
    const auto& G = self.grad;
    Tensor dz(Shape{d.N, C, d.T, M});
    for (std::size_t l = 0; l < 3; ++l) {
      Node& pw = *self.parents[1 + l];
      const auto& zl = (*z)[l];
      if (px.requires_grad) dz.fill(0.0);
      for (std::size_t n = 0; n < d.N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
          const double* grow = &G[(n * O + o) * TM];
          for (std::size_t c = 0; c < C; ++c) {
            const double* zrow = &zl[(n * C + c) * TM];
            if (pw.requires_grad) {
              double s = 0.0;
              for (std::size_t i = 0; i < TM; ++i) s += grow[i] * zrow[i];
              pw.grad[o * C + c] += s;
            }
            if (px.requires_grad) {
              const double w = pw.value[o * C + c];
              double* dzrow = &dz[(n * C + c) * TM];
              for (std::size_t i = 0; i < TM; ++i) dzrow[i] += w * grow[i];
            }
          }
        }
      if (px.requires_grad) {
        for (std::size_t nc = 0; nc < d.N * C; ++nc)
          for (std::size_t t = 0; t < d.T; ++t) {
            const std::size_t base = nc * TM + t * M;
            for (const auto& e : entries[l]) px.grad[base + e.col] += e.weight * dz[base + e.row];
          }
      }
    }
  });
}

// ----------------------------------------------------------------- batch norm

struct BatchNormParams {
  Var gamma;
  Var beta;
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNormParams create(std::size_t channels) {
    return {Var::parameter(Tensor(Shape{channels}, 1.0)), Var::parameter(Tensor(Shape{channels}, 0.0)),
            Tensor(Shape{channels}, 0.0), Tensor(Shape{channels}, 1.0)};
  }
};

/// Per-channel normalization over (N, T, M). Train mode uses batch
/// statistics and updates the running estimates; eval mode uses the latter.
inline Var batch_norm(const Var& x, BatchNormParams& p, Mode mode) {
  const auto d = detail::dims4(x.shape(), "batch_norm");
  if (p.gamma.shape() != Shape{d.C}) throw ShapeMismatch("batch_norm channels " + shape_str(p.gamma.shape()));
  const std::size_t TM = d.T * d.M;
  const double count = static_cast<double>(d.N * TM);
  const auto& X = x.value();

  std::vector<double> mu(d.C), inv_std(d.C);
  if (mode == Mode::train) {
    for (std::size_t c = 0; c < d.C; ++c) {
      double s = 0.0;
      for (std::size_t n = 0; n < d.N; ++n)
        for (std::size_t i = 0; i < TM; ++i) s += X[(n * d.C + c) * TM + i];
      mu[c] = s / count;
      double v = 0.0;
      for (std::size_t n = 0; n < d.N; ++n)
        for (std::size_t i = 0; i < TM; ++i) {
          const double diff = X[(n * d.C + c) * TM + i] - mu[c];
          v += diff * diff;
        }
      const double var = v / count;
      inv_std[c] = 1.0 / std::sqrt(var + p.eps);
      const double unbiased = count > 1.0 ? v / (count - 1.0) : var;
      p.running_mean[c] = (1.0 - p.momentum) * p.running_mean[c] + p.momentum * mu[c];
      p.running_var[c] = (1.0 - p.momentum) * p.running_var[c] + p.momentum * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < d.C; ++c) {
      mu[c] = p.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(p.running_var[c] + p.eps);
    }
  }

  Tensor xhat(x.shape());
  Tensor out(x.shape());
  for (std::size_t n = 0; n < d.N; ++n)
    for (std::size_t c = 0; c < d.C; ++c) {
      const double g = p.gamma.value()[c], b = p.beta.value()[c];
      for (std::size_t i = 0; i < TM; ++i) {
        const std::size_t k = (n * d.C + c) * TM + i;
        xhat[k] = (X[k] - mu[c]) * inv_std[c];
        out[k] = g * xhat[k] + b;
      }
    }

  return make_op(std::move(out), {x, p.gamma, p.beta},
                 [d, TM, count, mode, inv_std = std::move(inv_std), xhat = std::move(xhat)](Node& self) {
                   Node& px = *self.parents[0];
                   Node& pg = *self.parents[1];
                   Node& pb = *self.parents[2];
                   const auto& G = self.grad;
                   for (std::size_t c = 0; c < d.C; ++c) {
                     double sum_g = 0.0, sum_gx = 0.0;
                     for (std::size_t n = 0; n < d.N; ++n)
                       for (std::size_t i = 0; i < TM; ++i) {
                         const std::size_t k = (n * d.C + c) * TM + i;
                         sum_g += G[k];
                         sum_gx += G[k] * xhat[k];
                       }
                     if (pg.requires_grad) pg.grad[c] += sum_gx;
                     if (pb.requires_grad) pb.grad[c] += sum_g;
                     if (!px.requires_grad) continue;
                     const double gamma = pg.value[c];
                     for (std::size_t n = 0; n < d.N; ++n)
                       for (std::size_t i = 0; i < TM; ++i) {
                         const std::size_t k = (n * d.C + c) * TM + i;
                         if (mode == Mode::train)
                           px.grad[k] += gamma * inv_std[c] * (G[k] - sum_g / count - xhat[k] * sum_gx / count);
                         else
                           px.grad[k] += gamma * inv_std[c] * G[k];
                       }
                   }
                 });
}

// -------------------------------------------------------------------- dropout

/// Inverted dropout. Identity in eval mode or when rate is 0.
inline Var dropout(const Var& x, double rate, Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidConfig("dropout rate must lie in [0,1)");
  if (mode == Mode::eval || rate == 0.0) return x;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = keep(rng) ? scale : 0.0;
    out[i] = mask[i] * x.value()[i];
  }
  return make_op(std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < mask.size(); ++i) p.grad[i] += mask[i] * self.grad[i];
  });
}

// ---------------------------------------------------------- temporal upsample

/// Nearest-neighbour doubling along time: out[t] = in[t / 2].
inline Var temporal_upsample(const Var& x) {
  const auto d = detail::dims4(x.shape(), "temporal_upsample");
  const std::size_t M = d.M, T = d.T;
  Tensor out(detail::with_channels(d, d.C, 2 * T));
  for (std::size_t nc = 0; nc < d.N * d.C; ++nc)
    for (std::size_t t = 0; t < 2 * T; ++t)
      for (std::size_t m = 0; m < M; ++m) out[(nc * 2 * T + t) * M + m] = x.value()[(nc * T + t / 2) * M + m];
  return make_op(std::move(out), {x}, [d, M, T](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t nc = 0; nc < d.N * d.C; ++nc)
      for (std::size_t t = 0; t < 2 * T; ++t)
        for (std::size_t m = 0; m < M; ++m) p.grad[(nc * T + t / 2) * M + m] += self.grad[(nc * 2 * T + t) * M + m];
  });
}

// ------------------------------------------------------------- st-gcn block

struct StgcnBlockParams {
  std::array<Var, 3> spatial;  // (C_mid, C_in) per subset
  Var temporal;                // (C_out, C_mid, K)
  BatchNormParams norm;
  double dropout_rate = 0.5;
  std::size_t stride = 1;
  bool residual = false;

  std::size_t in_channels() const { return spatial[0].shape()[1]; }
  std::size_t out_channels() const { return temporal.shape()[0]; }

  static StgcnBlockParams create(std::size_t c_in, std::size_t c_out, std::size_t kernel, std::size_t stride,
                                 double dropout_rate, std::mt19937_64& rng, bool residual = false) {
    if (kernel % 2 == 0) throw EvenKernel("temporal kernel " + std::to_string(kernel));
    StgcnBlockParams p;
    const double sb = 1.0 / std::sqrt(static_cast<double>(c_in));
    for (auto& w : p.spatial) w = Var::parameter(Tensor::uniform(Shape{c_out, c_in}, -sb, sb, rng));
    const double tb = 1.0 / std::sqrt(static_cast<double>(c_out * kernel));
    p.temporal = Var::parameter(Tensor::uniform(Shape{c_out, c_out, kernel}, -tb, tb, rng));
    p.norm = BatchNormParams::create(c_out);
    p.dropout_rate = dropout_rate;
    p.stride = stride;
    p.residual = residual;
    return p;
  }

  void collect(const std::string& prefix, std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers) {
    for (std::size_t l = 0; l < 3; ++l) params.push_back({prefix + ".spatial" + std::to_string(l), spatial[l], true});
    params.push_back({prefix + ".temporal", temporal, true});
    params.push_back({prefix + ".bn_gamma", norm.gamma, false});
    params.push_back({prefix + ".bn_beta", norm.beta, false});
    buffers.push_back({prefix + ".bn_running_mean", &norm.running_mean});
    buffers.push_back({prefix + ".bn_running_var", &norm.running_var});
  }
};

/// spatial graph conv -> temporal conv -> batch norm -> dropout -> ReLU.
inline Var stgcn_block(const Var& x, StgcnBlockParams& p, const PartitionedAdjacency& A, Mode mode,
                       std::uint64_t dropout_seed = 0) {
  Var y = spatial_graph_conv(x, A, p.spatial);
  y = conv_time(y, p.temporal, p.stride);
  y = batch_norm(y, p.norm, mode);
  y = dropout(y, p.dropout_rate, mode, dropout_seed);
  if (p.residual && p.stride == 1 && p.in_channels() == p.out_channels()) y = add(y, x);
  return relu(y);
}

}  // namespace ugcn
