#pragma once

// Layer primitives with explicit forward/backward passes. Backward functions
// accumulate (+=) into gradient holders shaped like the parameters.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ddosnet/error.hpp"
#include "ddosnet/matrix.hpp"

namespace ddosnet::nn {

enum class Mode { train, infer };

// --- affine -----------------------------------------------------------------

/// y = x W^T + b. A width-1 convolution over a length-1 sequence is exactly this map.
struct AffineParams {
  Matrix W;  // out x in
  std::vector<double> b;

  AffineParams() = default;
  AffineParams(std::size_t in, std::size_t out) : W(out, in), b(out, 0.0) {}

  std::size_t in() const { return W.cols(); }
  std::size_t out() const { return W.rows(); }

  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

inline Matrix affine_forward(const AffineParams& p, const Matrix& x) {
  if (x.cols() != p.in() || p.b.size() != p.out())
    throw ShapeError("affine_forward: input " + shape_string(x) + ", weights " + shape_string(p.W));
  Matrix y(x.rows(), p.out());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    auto yr = y.row(r);
    for (std::size_t o = 0; o < p.out(); ++o) {
      const auto w = p.W.row(o);
      double acc = p.b[o];
      for (std::size_t i = 0; i < xr.size(); ++i) acc += xr[i] * w[i];
      yr[o] = acc;
    }
  }
  return y;
}

/// Returns dL/dx; accumulates dL/dW and dL/db into `g`.
inline Matrix affine_backward(const AffineParams& p, const Matrix& x, const Matrix& dy,
                              AffineParams& g) {
  Matrix dx(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto dyr = dy.row(r);
    auto dxr = dx.row(r);
    for (std::size_t o = 0; o < p.out(); ++o) {
      const double d = dyr[o];
      if (d == 0.0) continue;
      const auto w = p.W.row(o);
      auto gw = g.W.row(o);
      g.b[o] += d;
      for (std::size_t i = 0; i < xr.size(); ++i) {
        gw[i] += d * xr[i];
        dxr[i] += d * w[i];
      }
    }
  }
  return dx;
}

// --- batch normalization ------------------------------------------------------

struct BatchNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double eps_bn = 1e-5;

  BatchNormParams() = default;
  explicit BatchNormParams(std::size_t width, double momentum_ = 0.9, double eps = 1e-5)
      : gamma(width, 1.0), beta(width, 0.0), running_mean(width, 0.0), running_var(width, 1.0),
        momentum(momentum_), eps_bn(eps) {}

  std::size_t width() const { return gamma.size(); }

  friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

struct BatchNormCache {
  Matrix xhat;
  std::vector<double> inv_std;
  std::vector<double> batch_mean;  // train mode only
  std::vector<double> batch_var;
  Mode mode = Mode::infer;
};

/// Train mode normalizes by the batch mean and population variance; infer
/// mode uses the running statistics, which makes rows independent. The
/// running statistics are not touched here, see update_running_stats.
inline Matrix batchnorm_forward(const BatchNormParams& p, const Matrix& x, Mode mode,
                                BatchNormCache* cache = nullptr) {
  const std::size_t n = x.rows(), w = x.cols();
  if (w != p.width()) throw ShapeError("batchnorm_forward: width mismatch");
  if (mode == Mode::train && n < 2) throw DataError("batch norm in train mode needs a batch of >= 2 rows");

  BatchNormCache local;
  BatchNormCache& bc = cache ? *cache : local;
  bc.mode = mode;
  if (mode == Mode::train) {
    bc.batch_mean.assign(w, 0.0);
    bc.batch_var.assign(w, 0.0);
    for (std::size_t c = 0; c < w; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += x(r, c);
      const double mu = s / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = x(r, c) - mu;
        ss += d * d;
      }
      bc.batch_mean[c] = mu;
      bc.batch_var[c] = ss / static_cast<double>(n);
    }
  } else {
    bc.batch_mean.clear();
    bc.batch_var.clear();
  }
  const auto& mean = mode == Mode::train ? bc.batch_mean : p.running_mean;
  const auto& var = mode == Mode::train ? bc.batch_var : p.running_var;

  Matrix y(n, w);
  bc.xhat = Matrix(n, w);
  bc.inv_std.resize(w);
  for (std::size_t c = 0; c < w; ++c) bc.inv_std[c] = 1.0 / std::sqrt(var[c] + p.eps_bn);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double xh = (x(r, c) - mean[c]) * bc.inv_std[c];
      bc.xhat(r, c) = xh;
      y(r, c) = p.gamma[c] * xh + p.beta[c];
    }
  return y;
}

inline void update_running_stats(BatchNormParams& p, const BatchNormCache& cache) {
  if (cache.mode != Mode::train) return;
  for (std::size_t c = 0; c < p.width(); ++c) {
    p.running_mean[c] = p.momentum * p.running_mean[c] + (1.0 - p.momentum) * cache.batch_mean[c];
    p.running_var[c] = p.momentum * p.running_var[c] + (1.0 - p.momentum) * cache.batch_var[c];
  }
}

/// Returns dL/dx; accumulates dL/dgamma and dL/dbeta into `g`.
inline Matrix batchnorm_backward(const BatchNormParams& p, const BatchNormCache& cache,
                                 const Matrix& dy, BatchNormParams& g) {
  const std::size_t n = dy.rows(), w = dy.cols();
  Matrix dx(n, w);
  for (std::size_t c = 0; c < w; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      sum_dy += dy(r, c);
      sum_dy_xhat += dy(r, c) * cache.xhat(r, c);
    }
    g.gamma[c] += sum_dy_xhat;
    g.beta[c] += sum_dy;
    const double scale = p.gamma[c] * cache.inv_std[c];
    if (cache.mode == Mode::infer) {
      for (std::size_t r = 0; r < n; ++r) dx(r, c) = dy(r, c) * scale;
    } else {
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r)
        dx(r, c) = scale * (dy(r, c) - inv_n * sum_dy - cache.xhat(r, c) * inv_n * sum_dy_xhat);
    }
  }
  return dx;
}

// --- activations ------------------------------------------------------------

inline Matrix relu(Matrix x) {
  for (auto& v : x.flat()) v = v > 0.0 ? v : 0.0;
  return x;
}

/// dL/dx given the ReLU's input.
inline Matrix relu_backward(const Matrix& input, Matrix dy) {
  auto in = input.flat();
  auto d = dy.flat();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(in[i] > 0.0)) d[i] = 0.0;
  return dy;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Matrix sigmoid(Matrix x) {
  for (auto& v : x.flat()) v = sigmoid(v);
  return x;
}

inline Matrix softmax_rows(Matrix x) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (auto& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : row) v /= sum;
  }
  return x;
}

// --- feature attention ------------------------------------------------------

/// Per row: A = softmax(W_a z + b_a), z' = A (.) z.
struct AttentionParams {
  Matrix W_a;  // width x width
  std::vector<double> b_a;

  AttentionParams() = default;
  explicit AttentionParams(std::size_t width) : W_a(width, width), b_a(width, 0.0) {}

  std::size_t width() const { return b_a.size(); }

  friend bool operator==(const AttentionParams&, const AttentionParams&) = default;
};

struct AttentionCache {
  Matrix input;
  Matrix weights;  // A
};

inline Matrix attention_forward(const AttentionParams& p, const Matrix& z,
                                AttentionCache* cache = nullptr) {
  if (p.W_a.rows() != p.W_a.cols() || p.W_a.cols() != z.cols() || p.b_a.size() != z.cols())
    throw ShapeError("attention_forward: input " + shape_string(z) + ", W_a " + shape_string(p.W_a));
  AffineParams scores{};
  scores.W = p.W_a;
  scores.b = p.b_a;
  Matrix a = softmax_rows(affine_forward(scores, z));
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] = a.flat()[i] * z.flat()[i];
  if (cache) {
    cache->input = z;
    cache->weights = std::move(a);
  }
  return out;
}

/// Returns dL/dz; accumulates dL/dW_a and dL/db_a into `g`.
inline Matrix attention_backward(const AttentionParams& p, const AttentionCache& cache,
                                 const Matrix& dy, AttentionParams& g) {
  const Matrix& z = cache.input;
  const Matrix& a = cache.weights;
  const std::size_t n = z.rows(), w = z.cols();
  Matrix dz(n, w);
  Matrix ds(n, w);  // gradient w.r.t. the pre-softmax scores
  for (std::size_t r = 0; r < n; ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < w; ++c) {
      const double da = dy(r, c) * z(r, c);
      dot += da * a(r, c);
    }
    for (std::size_t c = 0; c < w; ++c) {
      const double da = dy(r, c) * z(r, c);
      ds(r, c) = a(r, c) * (da - dot);
      dz(r, c) = dy(r, c) * a(r, c);
    }
  }
  AffineParams scores{};
  scores.W = p.W_a;
  scores.b = p.b_a;
  AffineParams gs(w, w);
  Matrix dz_scores = affine_backward(scores, z, ds, gs);
  for (std::size_t i = 0; i < dz.size(); ++i) dz.flat()[i] += dz_scores.flat()[i];
  for (std::size_t i = 0; i < gs.W.size(); ++i) g.W_a.flat()[i] += gs.W.flat()[i];
  for (std::size_t i = 0; i < w; ++i) g.b_a[i] += gs.b[i];
  return dz;
}

// --- residual block ---------------------------------------------------------

/// y = ReLU(BN2(A2(ReLU(BN1(A1(x))))) + shortcut(x)); the shortcut is the
/// identity, or a projection when the block changes width.
struct ResidualBlockParams {
  AffineParams affine1, affine2;
  BatchNormParams bn1, bn2;
  std::optional<AffineParams> projection;

  ResidualBlockParams() = default;
  ResidualBlockParams(std::size_t in, std::size_t out, double momentum = 0.9, double eps = 1e-5)
      : affine1(in, out), affine2(out, out), bn1(out, momentum, eps), bn2(out, momentum, eps) {
    if (in != out) projection = AffineParams(in, out);
  }

  std::size_t in() const { return affine1.in(); }
  std::size_t out() const { return affine2.out(); }

  friend bool operator==(const ResidualBlockParams&, const ResidualBlockParams&) = default;
};

struct ResidualCache {
  Matrix x, a1, b1, r1, b2, pre;
  BatchNormCache bn1, bn2;
};

inline Matrix residual_block_forward(const ResidualBlockParams& p, const Matrix& x,
                                     Mode mode = Mode::infer, ResidualCache* cache = nullptr) {
  if (x.cols() != p.in()) throw ShapeError("residual_block_forward: input width mismatch");
  if (p.projection.has_value() != (p.in() != p.out()))
    throw ShapeError("residual_block_forward: projection must be present exactly when widths differ");
  ResidualCache local;
  ResidualCache& c = cache ? *cache : local;
  c.x = x;
  c.a1 = affine_forward(p.affine1, x);
  c.b1 = batchnorm_forward(p.bn1, c.a1, mode, &c.bn1);
  c.r1 = relu(c.b1);
  const Matrix a2 = affine_forward(p.affine2, c.r1);
  c.b2 = batchnorm_forward(p.bn2, a2, mode, &c.bn2);
  c.pre = p.projection ? affine_forward(*p.projection, x) : x;
  for (std::size_t i = 0; i < c.pre.size(); ++i) c.pre.flat()[i] += c.b2.flat()[i];
  return relu(c.pre);
}

inline Matrix residual_block_backward(const ResidualBlockParams& p, const ResidualCache& c,
                                      const Matrix& dy, ResidualBlockParams& g) {
  const Matrix dpre = relu_backward(c.pre, dy);
  // residual path
  const Matrix da2 = batchnorm_backward(p.bn2, c.bn2, dpre, g.bn2);
  const Matrix dr1 = affine_backward(p.affine2, c.r1, da2, g.affine2);
  const Matrix db1 = relu_backward(c.b1, dr1);
  const Matrix da1 = batchnorm_backward(p.bn1, c.bn1, db1, g.bn1);
  Matrix dx = affine_backward(p.affine1, c.x, da1, g.affine1);
  // shortcut
  if (p.projection) {
    const Matrix ds = affine_backward(*p.projection, c.x, dpre, *g.projection);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.flat()[i] += ds.flat()[i];
  } else {
    for (std::size_t i = 0; i < dx.size(); ++i) dx.flat()[i] += dpre.flat()[i];
  }
  return dx;
}

}  // namespace ddosnet::nn
