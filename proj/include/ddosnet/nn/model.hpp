#pragma once

// The attention-augmented residual classifier:
//   stem affine -> residual blocks -> feature attention -> affine to one logit.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ddosnet/error.hpp"
#include "ddosnet/matrix.hpp"
#include "ddosnet/nn/layers.hpp"
#include "ddosnet/random.hpp"

namespace ddosnet::nn {

struct ArchConfig {
  std::size_t stem_width = 64;
  std::vector<std::size_t> block_widths{64, 64, 64};
  bool attention_every_block = false;  // default: one attention layer after the last block
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;
  std::uint64_t init_seed = 42;

  void validate() const {
    if (stem_width == 0) throw ConfigError("model.stem_width must be >= 1");
    for (auto w : block_widths)
      if (w == 0) throw ConfigError("model.block_widths entries must be >= 1");
    if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) throw ConfigError("model.bn_momentum must lie in [0,1)");
    if (!(bn_eps > 0.0)) throw ConfigError("model.bn_eps must be > 0");
  }

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct ModelParams {
  AffineParams input_affine;
  std::vector<ResidualBlockParams> blocks;
  std::vector<AttentionParams> attention;  // one per block, or a single trailing layer
  AffineParams output_affine;
  bool attention_every_block = false;

  std::size_t input_width() const { return input_affine.in(); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// A named view of one parameter tensor.
template <class T>
struct TensorRef {
  std::string name;
  std::span<T> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

namespace detail {

template <class T, class M>
void push_matrix(std::vector<TensorRef<T>>& out, std::string name, M& m) {
  out.push_back({std::move(name), m.flat(), m.rows(), m.cols()});
}

template <class T, class V>
void push_vector(std::vector<TensorRef<T>>& out, std::string name, V& v) {
  out.push_back({std::move(name), std::span<T>(v), 1, v.size()});
}

template <class T, class Model>
std::vector<TensorRef<T>> collect(Model& m, bool buffers) {
  std::vector<TensorRef<T>> out;
  auto affine = [&](const std::string& prefix, auto& a) {
    push_matrix<T>(out, prefix + ".W", a.W);
    push_vector<T>(out, prefix + ".b", a.b);
  };
  auto bn = [&](const std::string& prefix, auto& b) {
    if (buffers) {
      push_vector<T>(out, prefix + ".running_mean", b.running_mean);
      push_vector<T>(out, prefix + ".running_var", b.running_var);
    } else {
      push_vector<T>(out, prefix + ".gamma", b.gamma);
      push_vector<T>(out, prefix + ".beta", b.beta);
    }
  };
  auto att = [&](const std::string& prefix, auto& a) {
    push_matrix<T>(out, prefix + ".W_a", a.W_a);
    push_vector<T>(out, prefix + ".b_a", a.b_a);
  };
  if (!buffers) affine("input", m.input_affine);
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    auto& blk = m.blocks[i];
    const std::string p = "block" + std::to_string(i);
    if (!buffers) affine(p + ".affine1", blk.affine1);
    bn(p + ".bn1", blk.bn1);
    if (!buffers) affine(p + ".affine2", blk.affine2);
    bn(p + ".bn2", blk.bn2);
    if (!buffers && blk.projection) affine(p + ".projection", *blk.projection);
  }
  if (!buffers) {
    for (std::size_t i = 0; i < m.attention.size(); ++i) att("attention" + std::to_string(i), m.attention[i]);
    affine("output", m.output_affine);
  }
  return out;
}

}  // namespace detail

/// Trainable tensors in a fixed order; names are stable for a given architecture.
inline std::vector<TensorRef<double>> parameters(ModelParams& m) { return detail::collect<double>(m, false); }
inline std::vector<TensorRef<const double>> parameters(const ModelParams& m) {
  return detail::collect<const double>(m, false);
}
/// Batch-norm running statistics (persisted, not trained).
inline std::vector<TensorRef<double>> buffers(ModelParams& m) { return detail::collect<double>(m, true); }
inline std::vector<TensorRef<const double>> buffers(const ModelParams& m) {
  return detail::collect<const double>(m, true);
}

inline std::size_t parameter_count(const ModelParams& m) {
  std::size_t n = 0;
  for (const auto& t : parameters(m)) n += t.values.size();
  return n;
}

/// Same architecture with every trainable tensor zeroed; used for gradients
/// and optimizer accumulators.
inline ModelParams zeros_like(const ModelParams& m) {
  ModelParams z = m;
  for (auto& t : parameters(z)) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

/// Builds the network for `input_width` features. Weights are He-uniform,
/// U(-sqrt(6/fan_in), sqrt(6/fan_in)), drawn in parameter order from the
/// init seed; biases 0, gamma 1, beta 0.
inline ModelParams make_model(std::size_t input_width, const ArchConfig& arch) {
  arch.validate();
  if (input_width == 0) throw ShapeError("make_model: input width must be >= 1");
  ModelParams m;
  m.attention_every_block = arch.attention_every_block;
  m.input_affine = AffineParams(input_width, arch.stem_width);
  std::size_t width = arch.stem_width;
  for (auto w : arch.block_widths) {
    m.blocks.emplace_back(width, w, arch.bn_momentum, arch.bn_eps);
    width = w;
    if (arch.attention_every_block) m.attention.emplace_back(w);
  }
  if (!arch.attention_every_block || arch.block_widths.empty()) m.attention.emplace_back(width);
  m.output_affine = AffineParams(width, 1);

  Rng rng(derive_seed(arch.init_seed, 0x1417));
  for (auto& t : parameters(m)) {
    const bool is_matrix = t.name.ends_with(".W") || t.name.ends_with(".W_a");
    if (!is_matrix) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(t.cols));
    for (auto& v : t.values) v = rng.uniform(-limit, limit);
  }
  return m;
}

struct ForwardCache {
  Mode mode = Mode::infer;
  Matrix input;
  std::vector<ResidualCache> blocks;
  std::vector<AttentionCache> attention;
  Matrix head_input;
  std::vector<double> logits;
  bool valid = false;
};

/// One logit per row.
inline std::vector<double> forward(const ModelParams& m, const Matrix& x, Mode mode,
                                   ForwardCache* cache = nullptr) {
  if (x.cols() != m.input_width())
    throw ShapeError("model expects " + std::to_string(m.input_width()) + " features, got " +
                     std::to_string(x.cols()));
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.valid = false;
  c.mode = mode;
  c.input = x;
  c.blocks.assign(m.blocks.size(), {});
  c.attention.assign(m.attention.size(), {});

  Matrix h = affine_forward(m.input_affine, x);
  std::size_t next_att = 0;
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    h = residual_block_forward(m.blocks[i], h, mode, &c.blocks[i]);
    if (m.attention_every_block) {
      h = attention_forward(m.attention[next_att], h, &c.attention[next_att]);
      ++next_att;
    }
  }
  if (next_att < m.attention.size()) h = attention_forward(m.attention[next_att], h, &c.attention[next_att]);
  c.head_input = h;
  const Matrix out = affine_forward(m.output_affine, h);
  c.logits = out.storage();
  c.valid = true;
  return c.logits;
}

/// Folds the batch statistics recorded by a train-mode forward pass into
/// the running statistics of every batch-norm layer.
inline void update_running_stats(ModelParams& m, const ForwardCache& c) {
  if (!c.valid || c.mode != Mode::train) return;
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    update_running_stats(m.blocks[i].bn1, c.blocks[i].bn1);
    update_running_stats(m.blocks[i].bn2, c.blocks[i].bn2);
  }
}

/// Gradient of the loss w.r.t. every trainable tensor, given dL/dlogits for
/// the batch cached by the preceding forward pass.
inline ModelParams backward(const ModelParams& m, const ForwardCache& c,
                            std::span<const double> dlogits) {
  if (!c.valid) throw std::logic_error("backward called without a forward pass");
  if (dlogits.size() != c.logits.size()) throw ShapeError("backward: dlogits length mismatch");
  ModelParams g = zeros_like(m);
  Matrix dh = affine_backward(m.output_affine, c.head_input,
                              Matrix(dlogits.size(), 1, std::vector<double>(dlogits.begin(), dlogits.end())),
                              g.output_affine);
  std::size_t att = m.attention.size();
  if (!m.attention_every_block && att > 0) {
    --att;
    dh = attention_backward(m.attention[att], c.attention[att], dh, g.attention[att]);
  }
  for (std::size_t i = m.blocks.size(); i-- > 0;) {
    if (m.attention_every_block) {
      --att;
      dh = attention_backward(m.attention[att], c.attention[att], dh, g.attention[att]);
    }
    dh = residual_block_backward(m.blocks[i], c.blocks[i], dh, g.blocks[i]);
  }
  if (m.attention_every_block && att > 0) {  // no blocks: the lone attention layer sits on the stem
    --att;
    dh = attention_backward(m.attention[att], c.attention[att], dh, g.attention[att]);
  }
  affine_backward(m.input_affine, c.input, dh, g.input_affine);
  return g;
}

/// sigmoid(logit) per row, inference mode.
inline std::vector<double> predict_proba(const ModelParams& m, const Matrix& x) {
  auto z = forward(m, x, Mode::infer);
  for (auto& v : z) v = sigmoid(v);
  return z;
}

}  // namespace ddosnet::nn
