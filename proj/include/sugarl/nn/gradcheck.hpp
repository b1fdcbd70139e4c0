#pragma once

#include "sugarl/nn/net.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace sugarl::nn {

struct GradCheckOptions {
  std::size_t samples = 100;
  double epsilon = 1e-4;
  double tolerance = 1e-3;
  // Denominator floor so that parameters with vanishing gradients compare
  // on an absolute scale.
  double floor = 1e-6;
  std::uint64_t seed = 0;
  // Optional rectifier on/off state after the latest loss evaluation. When
  // set, a perturbation that flips any rectifier is a kink crossing where
  // central differences are invalid; that parameter is skipped and another
  // one drawn.
  std::function<std::vector<bool>()> pattern;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kink_skips = 0;
  double tolerance = 0.0;
  bool passed = false;
  std::string worst_param;
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Compares analytic gradients against central differences on randomly
/// chosen scalar parameters. `loss_fn(bool with_grad)` must return the loss
/// and, when asked, accumulate gradients into `params[*].grad`.
template <typename T, typename LossFn>
GradCheckReport grad_check(const std::vector<ParamRef<T>>& params, LossFn&& loss_fn, const GradCheckOptions& opt) {
  for (const auto& p : params) std::fill(p.grad.begin(), p.grad.end(), T{0});
  loss_fn(true);
  std::vector<std::vector<T>> analytic;
  std::size_t total = 0;
  for (const auto& p : params) {
    analytic.emplace_back(p.grad.begin(), p.grad.end());
    total += p.value.size();
  }
  GradCheckReport report;
  report.tolerance = opt.tolerance;
  if (total == 0) return report;

  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::vector<bool> base;
  if (opt.pattern) base = opt.pattern();
  const std::size_t max_draws = opt.pattern ? 50 * opt.samples : opt.samples;
  for (std::size_t draw = 0; report.checked < opt.samples && draw < max_draws; ++draw) {
    std::size_t flat = pick(rng);
    std::size_t k = 0;
    while (flat >= params[k].value.size()) flat -= params[k++].value.size();
    T& w = params[k].value[flat];
    const T saved = w;
    w = saved + static_cast<T>(opt.epsilon);
    const double up = static_cast<double>(loss_fn(false));
    const bool kink_up = opt.pattern && opt.pattern() != base;
    w = saved - static_cast<T>(opt.epsilon);
    const double down = static_cast<double>(loss_fn(false));
    const bool kink_down = opt.pattern && opt.pattern() != base;
    w = saved;
    if (kink_up || kink_down) {
      ++report.kink_skips;
      continue;
    }
    const double numeric = (up - down) / (2.0 * opt.epsilon);
    const double err = relative_error(static_cast<double>(analytic[k][flat]), numeric, opt.floor);
    if (err >= report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_param = params[k].name + "[" + std::to_string(flat) + "]";
    }
    ++report.checked;
  }
  report.passed = report.checked == opt.samples && report.max_rel_error < opt.tolerance;
  return report;
}

/// Gradient check of a whole headed network under the loss
/// 0.5 * sum (output - target)^2 on a fixed random input batch.
template <typename T>
GradCheckReport grad_check(HeadedNet<T>& net, int batch, const GradCheckOptions& opt) {
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<T> input(static_cast<std::size_t>(batch) * net.input_length());
  for (auto& v : input) v = static_cast<T>(unit(rng));
  std::vector<std::vector<T>> targets;
  for (int n : net.head_sizes()) {
    std::vector<T> t(static_cast<std::size_t>(batch) * n);
    for (auto& v : t) v = static_cast<T>(normal(rng));
    targets.push_back(std::move(t));
  }
  auto loss_fn = [&](bool with_grad) {
    const auto& out = net.forward(input, batch);
    T loss{0};
    std::vector<std::vector<T>> grads(out.size());
    for (std::size_t h = 0; h < out.size(); ++h) {
      grads[h].resize(out[h].size());
      for (std::size_t i = 0; i < out[h].size(); ++i) {
        const T d = out[h][i] - targets[h][i];
        loss += T{0.5} * d * d;
        grads[h][i] = d;
      }
    }
    if (with_grad) net.backward(grads);
    return loss;
  };
  GradCheckOptions with_pattern = opt;
  if (!with_pattern.pattern) with_pattern.pattern = [&net] { return net.activation_pattern(); };
  return grad_check(net.params(), loss_fn, with_pattern);
}

}  // namespace sugarl::nn
