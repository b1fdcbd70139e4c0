#pragma once

#include "sugarl/agent/config.hpp"

#include <span>
#include <stdexcept>
#include <string>

namespace sugarl::agent {

/// Sensorimotor reward from the probability the inverse-dynamics module
/// assigns to the executed motor action: -(1 - p) by default, p for the
/// positive ablation, 0 when disabled.
inline double sensorimotor_reward(double p, RewardSign sign) {
  switch (sign) {
    case RewardSign::negative: return -(1.0 - p);
    case RewardSign::positive: return p;
    case RewardSign::off: return 0.0;
  }
  return 0.0;
}

/// r_env + beta * r_sugarl; an unbalanced combination uses beta = 1.
inline double combine_reward(double r_env, double r_sugarl, double beta, bool balance) {
  return r_env + (balance ? beta : 1.0) * r_sugarl;
}

/// Mean over reference trajectories of return / length.
inline double estimate_beta(std::span<const double> returns, std::span<const double> lengths) {
  if (returns.empty()) throw std::invalid_argument("estimate_beta: no reference trajectories");
  if (returns.size() != lengths.size()) throw std::invalid_argument("estimate_beta: returns/lengths size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    if (!(lengths[i] > 0.0)) throw std::invalid_argument("estimate_beta: zero-length trajectory");
    sum += returns[i] / lengths[i];
  }
  return sum / static_cast<double>(returns.size());
}

/// Maximum possible return of one episode over its length.
inline double estimate_beta_max(double max_return, double max_length) {
  if (!(max_length > 0.0)) throw std::invalid_argument("estimate_beta_max: zero-length trajectory");
  return max_return / max_length;
}

}  // namespace sugarl::agent
