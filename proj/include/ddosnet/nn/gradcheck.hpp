#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ddosnet/nn/losses.hpp"
#include "ddosnet/nn/model.hpp"

namespace ddosnet::nn {

struct TensorCheck {
  std::string name;
  std::size_t size = 0;
  double worst_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double tolerance = 0.0;

  double worst() const {
    double w = 0.0;
    for (const auto& t : tensors) w = std::max(w, t.worst_rel_error);
    return w;
  }
  bool passed() const {
    return std::all_of(tensors.begin(), tensors.end(),
                       [&](const TensorCheck& t) { return t.worst_rel_error < tolerance; });
  }
};

inline double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

/// Compares backward() against central differences (L(w+h) - L(w-h)) / 2h
/// for every scalar parameter. Running statistics are never updated, so
/// train mode differentiates through the batch statistics themselves.
inline GradCheckReport gradient_check(const ModelParams& model, const Matrix& x,
                                      std::span<const int> labels, const Objective& objective,
                                      std::span<const double> anchors = {}, Mode mode = Mode::infer,
                                      double h = 1e-5, double tol = 1e-4) {
  ForwardCache cache;
  const auto logits = forward(model, x, mode, &cache);
  const auto loss = objective(logits, labels, anchors);
  const ModelParams grads = backward(model, cache, loss.grad);

  ModelParams probe = model;
  auto loss_at = [&]() { return objective(forward(probe, x, mode), labels, anchors).value; };

  GradCheckReport report;
  report.tolerance = tol;
  auto params = parameters(probe);
  const auto analytic = parameters(grads);
  for (std::size_t t = 0; t < params.size(); ++t) {
    TensorCheck tc;
    tc.name = params[t].name;
    tc.size = params[t].values.size();
    for (std::size_t i = 0; i < tc.size; ++i) {
      double& w = params[t].values[i];
      const double saved = w;
      w = saved + h;
      const double up = loss_at();
      w = saved - h;
      const double down = loss_at();
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[t].values[i];
      const double err = relative_error(a, numeric);
      if (err > tc.worst_rel_error || i == 0) {
        tc.worst_rel_error = err;
        tc.worst_index = i;
        tc.analytic = a;
        tc.numeric = numeric;
      }
    }
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

}  // namespace ddosnet::nn
