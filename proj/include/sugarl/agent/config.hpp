#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace sugarl::agent {

enum class RewardSign { negative, positive, off };
enum class JointLearning { shared, separate };
enum class PolicyKind { dual, single };
enum class SensorySource { learned, random_view, raster_scan, fixed };

struct SugarlConfig {
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.01;
  long min_eps_step = 20'000;
  long learn_start = 5'000;
  int train_freq = 4;
  int target_update = 1'000;
  int batch = 32;
  int reward_train_freq = 4;
  std::size_t buffer = 100'000;
  double lr = 1e-4;
  double reward_lr = 1e-4;
  long total_steps = 200'000;
  int input_size = 84;

  RewardSign reward_sign = RewardSign::negative;
  JointLearning joint = JointLearning::shared;
  bool balance = true;
  // NaN: derive from the environment's reference return.
  double beta = std::numeric_limits<double>::quiet_NaN();

  PolicyKind policy = PolicyKind::dual;
  SensorySource sensory = SensorySource::learned;
  int fixed_anchor = 5;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0, 1)");
    if (!(eps_end >= 0.0 && eps_end <= eps_start && eps_start <= 1.0))
      throw std::invalid_argument("epsilon schedule must satisfy 0 <= eps_end <= eps_start <= 1");
    if (min_eps_step <= 0) throw std::invalid_argument("min_eps_step must be positive");
    if (learn_start < 0) throw std::invalid_argument("learn_start must be >= 0");
    if (train_freq <= 0 || reward_train_freq <= 0 || target_update <= 0)
      throw std::invalid_argument("update frequencies must be positive");
    if (batch <= 0) throw std::invalid_argument("batch must be positive");
    if (buffer < static_cast<std::size_t>(batch)) throw std::invalid_argument("buffer must hold at least one batch");
    if (lr <= 0.0 || reward_lr <= 0.0) throw std::invalid_argument("learning rates must be positive");
    if (total_steps < 0) throw std::invalid_argument("total_steps must be >= 0");
    if (input_size < 1) throw std::invalid_argument("input_size must be positive");
    if (!std::isnan(beta) && !(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (fixed_anchor < 0 || fixed_anchor > 15) throw std::invalid_argument("fixed_anchor must be in [0, 15]");
  }

  /// Whether an inverse-dynamics reward module is trained and used.
  bool uses_reward_module() const {
    return reward_sign != RewardSign::off && policy == PolicyKind::dual && sensory == SensorySource::learned;
  }
  bool learns_sensory_head() const { return policy == PolicyKind::dual && sensory == SensorySource::learned; }
};

/// Linear decay from eps_start to eps_end over min_eps_step steps.
inline double epsilon_at(const SugarlConfig& c, long step) {
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(c.min_eps_step));
  return c.eps_start + frac * (c.eps_end - c.eps_start);
}

inline RewardSign parse_reward_sign(const std::string& s) {
  if (s == "negative") return RewardSign::negative;
  if (s == "positive") return RewardSign::positive;
  if (s == "off") return RewardSign::off;
  throw std::invalid_argument("expected negative, positive or off, got '" + s + "'");
}
inline std::string to_string(RewardSign v) {
  return v == RewardSign::negative ? "negative" : v == RewardSign::positive ? "positive" : "off";
}

inline JointLearning parse_joint(const std::string& s) {
  if (s == "shared") return JointLearning::shared;
  if (s == "separate") return JointLearning::separate;
  throw std::invalid_argument("expected shared or separate, got '" + s + "'");
}
inline std::string to_string(JointLearning v) { return v == JointLearning::shared ? "shared" : "separate"; }

inline PolicyKind parse_policy(const std::string& s) {
  if (s == "dual") return PolicyKind::dual;
  if (s == "single") return PolicyKind::single;
  throw std::invalid_argument("expected dual or single, got '" + s + "'");
}
inline std::string to_string(PolicyKind v) { return v == PolicyKind::dual ? "dual" : "single"; }

inline SensorySource parse_sensory(const std::string& s) {
  if (s == "learned") return SensorySource::learned;
  if (s == "random") return SensorySource::random_view;
  if (s == "raster") return SensorySource::raster_scan;
  if (s == "fixed") return SensorySource::fixed;
  throw std::invalid_argument("expected learned, random, raster or fixed, got '" + s + "'");
}
inline std::string to_string(SensorySource v) {
  switch (v) {
    case SensorySource::learned: return "learned";
    case SensorySource::random_view: return "random";
    case SensorySource::raster_scan: return "raster";
    case SensorySource::fixed: return "fixed";
  }
  return "?";
}

}  // namespace sugarl::agent
