#pragma once

#include <cmath>

#include "ddosnet/error.hpp"
#include "ddosnet/nn/model.hpp"

namespace ddosnet::nn {

/// Adagrad: G += g^2, then w -= eta * g / sqrt(G + eps), with G already
/// including the current gradient.
struct OptimizerState {
  double eta = 0.01;
  double eps_opt = 1e-10;
  ModelParams accum;  // same layout as the model; only trainable tensors are used
  std::size_t steps = 0;
};

inline OptimizerState make_optimizer(const ModelParams& m, double eta = 0.01, double eps_opt = 1e-10) {
  if (!(eta > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(eps_opt >= 0.0)) throw ConfigError("eps_opt must be >= 0");
  return OptimizerState{eta, eps_opt, zeros_like(m), 0};
}

inline void adagrad_step(std::span<double> w, std::span<double> accum, std::span<const double> g,
                         double eta, double eps_opt) {
  if (w.size() != g.size() || w.size() != accum.size()) throw ShapeError("adagrad_step: size mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) {
    accum[i] += g[i] * g[i];
    if (g[i] == 0.0) continue;
    w[i] -= eta * g[i] / std::sqrt(accum[i] + eps_opt);
  }
}

inline void adagrad_step(OptimizerState& state, ModelParams& params, const ModelParams& grads) {
  auto w = parameters(params);
  auto acc = parameters(state.accum);
  const auto g = parameters(grads);
  if (w.size() != g.size() || w.size() != acc.size())
    throw ShapeError("adagrad_step: parameter layout mismatch");
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (w[t].name != g[t].name) throw ShapeError("adagrad_step: tensor order mismatch at " + w[t].name);
    adagrad_step(w[t].values, acc[t].values, g[t].values, state.eta, state.eps_opt);
  }
  ++state.steps;
}

}  // namespace ddosnet::nn
