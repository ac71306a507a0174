#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ddosnet/error.hpp"
#include "ddosnet/nn/layers.hpp"

namespace ddosnet::nn {

inline constexpr double kProbClamp = 1e-12;

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // w.r.t. the loss input (probabilities or logits, see each function)
};

enum class LossKind { bce, dice };

inline std::string_view to_string(LossKind k) { return k == LossKind::bce ? "bce" : "dice"; }

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "bce") return LossKind::bce;
  if (s == "dice") return LossKind::dice;
  throw ConfigError("unknown loss '" + std::string(s) + "' (expected bce or dice)");
}

namespace detail {
template <class A, class B>
void require_same_length(const A& a, const B& b, const char* what) {
  if (a.size() != b.size())
    throw ShapeError(std::string(what) + ": length " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
}
}  // namespace detail

/// Mean binary cross-entropy on probabilities clamped to [1e-12, 1 - 1e-12].
/// Gradient is w.r.t. the (clamped) probabilities.
inline LossResult bce_loss(std::span<const double> y_hat, std::span<const int> y) {
  detail::require_same_length(y_hat, y, "bce_loss");
  LossResult res;
  res.grad.resize(y_hat.size());
  const auto n = static_cast<double>(y_hat.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    const double p = std::clamp(y_hat[i], kProbClamp, 1.0 - kProbClamp);
    const double t = y[i];
    sum += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    res.grad[i] = (-t / p + (1.0 - t) / (1.0 - p)) / n;
  }
  res.value = y_hat.empty() ? 0.0 : -sum / n;
  return res;
}

/// BCE of sigmoid(logits) with the gradient taken w.r.t. the logits,
/// (sigmoid(z) - y) / n, which stays informative when the clamp is active.
inline LossResult bce_with_logits(std::span<const double> logits, std::span<const int> y) {
  detail::require_same_length(logits, y, "bce_with_logits");
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(logits[i]);
  LossResult res = bce_loss(p, y);
  const auto n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) res.grad[i] = (p[i] - y[i]) / n;
  return res;
}

/// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps) with p = sigmoid(logits).
/// Gradient is w.r.t. the logits.
inline LossResult dice_loss(std::span<const double> logits, std::span<const int> targets,
                            double eps_dice = 1.0) {
  detail::require_same_length(logits, targets, "dice_loss");
  if (!(eps_dice > 0.0)) throw ConfigError("dice_loss: eps_dice must be > 0");
  std::vector<double> p(logits.size());
  double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = sigmoid(logits[i]);
    inter += p[i] * targets[i];
    sum_p += p[i];
    sum_t += targets[i];
  }
  const double num = 2.0 * inter + eps_dice;
  const double den = sum_p + sum_t + eps_dice;
  LossResult res;
  res.value = 1.0 - num / den;
  res.grad.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d_coef_dp = (2.0 * targets[i] * den - num) / (den * den);
    res.grad[i] = -d_coef_dp * p[i] * (1.0 - p[i]);
  }
  return res;
}

/// sum_i (anchor_i - y_hat_i)^2
inline double anchor_penalty(std::span<const double> y_hat2, std::span<const double> anchors) {
  detail::require_same_length(y_hat2, anchors, "anchor_penalty");
  double s = 0.0;
  for (std::size_t i = 0; i < y_hat2.size(); ++i) {
    const double d = anchors[i] - y_hat2[i];
    s += d * d;
  }
  return s;
}

inline LossResult base_loss(LossKind kind, std::span<const double> logits, std::span<const int> y,
                            double eps_dice) {
  return kind == LossKind::bce ? bce_with_logits(logits, y) : dice_loss(logits, y, eps_dice);
}

/// base(sigmoid(logits), y) + lambda * sum (anchor - sigmoid(logits))^2.
/// The penalty is a plain sum over the rows passed in. Gradient is w.r.t. the logits.
inline LossResult anchored_loss(std::span<const double> logits, std::span<const int> y,
                                std::span<const double> anchors, double lambda_anchor,
                                LossKind base, double eps_dice = 1.0) {
  detail::require_same_length(logits, y, "anchored_loss");
  detail::require_same_length(logits, anchors, "anchored_loss");
  if (lambda_anchor < 0.0) throw ConfigError("anchored_loss: lambda_anchor must be >= 0");
  LossResult res = base_loss(base, logits, y, eps_dice);
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(logits[i]);
  res.value = res.value + lambda_anchor * anchor_penalty(p, anchors);
  if (lambda_anchor == 0.0) return res;
  for (std::size_t i = 0; i < p.size(); ++i)
    res.grad[i] += lambda_anchor * 2.0 * (p[i] - anchors[i]) * p[i] * (1.0 - p[i]);
  return res;
}

/// What a training step minimises: a base loss, optionally anchored.
struct Objective {
  LossKind base = LossKind::bce;
  double eps_dice = 1.0;
  double lambda_anchor = 0.0;
  bool anchored = false;

  LossResult operator()(std::span<const double> logits, std::span<const int> y,
                        std::span<const double> anchors = {}) const {
    if (anchored) return anchored_loss(logits, y, anchors, lambda_anchor, base, eps_dice);
    return base_loss(base, logits, y, eps_dice);
  }
};

}  // namespace ddosnet::nn
