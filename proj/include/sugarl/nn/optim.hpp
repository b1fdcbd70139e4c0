#pragma once

#include "sugarl/nn/layers.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sugarl::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators for one parameter list. Value type: copying it gives
/// an independent snapshot.
template <typename T>
struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<std::vector<T>> first;
  std::vector<std::vector<T>> second;

  AdamState() = default;
  AdamState(const std::vector<ParamRef<T>>& params, AdamOptions opts) : options(opts) {
    for (const auto& p : params) {
      first.emplace_back(p.value.size(), T{0});
      second.emplace_back(p.value.size(), T{0});
    }
  }
};

/// One bias-corrected Adam update using the gradients stored in `params`.
template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, AdamState<T>& state) {
  if (params.size() != state.first.size()) throw std::invalid_argument("adam_step: parameter count mismatch");
  state.step += 1;
  const auto& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  const T step_size = static_cast<T>(o.lr / c1);
  const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(c2));
  const T eps = static_cast<T>(o.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first[k];
    auto& v = state.second[k];
    const auto& p = params[k];
    if (m.size() != p.value.size() || p.grad.size() != p.value.size())
      throw std::invalid_argument("adam_step: shape mismatch at " + p.name);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const T g = p.grad[i];
      m[i] = b1 * m[i] + (T{1} - b1) * g;
      v[i] = b2 * v[i] + (T{1} - b2) * g * g;
      p.value[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_c2 + eps);
    }
  }
}

}  // namespace sugarl::nn
