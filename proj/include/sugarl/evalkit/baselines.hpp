#pragma once

#include "sugarl/envkit/sensory.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace sugarl::evalkit {

enum class BaselineKind { random_view, raster_scan, fixed };

inline constexpr int kCenterAnchor = 5;
inline constexpr int kUpperLeftAnchor = 0;
inline constexpr int kBottomRightAnchor = 15;

/// Hand-designed sensory policies over the 16 absolute anchors.
class BaselinePolicy {
 public:
  BaselinePolicy(BaselineKind kind, std::uint64_t seed, int fixed_anchor = kCenterAnchor)
      : kind_(kind), anchor_(fixed_anchor), rng_(seed) {
    if (fixed_anchor < 0 || fixed_anchor >= envkit::kAbsoluteActions)
      throw std::invalid_argument("BaselinePolicy: anchor out of range");
  }

  BaselineKind kind() const { return kind_; }

  /// `step` is the agent step within the episode; raster scanning visits
  /// anchors row-major, left to right and top to bottom.
  int action(long step) {
    switch (kind_) {
      case BaselineKind::random_view:
        return std::uniform_int_distribution<int>(0, envkit::kAbsoluteActions - 1)(rng_);
      case BaselineKind::raster_scan:
        return static_cast<int>(step % envkit::kAbsoluteActions);
      case BaselineKind::fixed:
        return anchor_;
    }
    return 0;
  }

 private:
  BaselineKind kind_;
  int anchor_;
  std::mt19937_64 rng_;
};

inline int baseline_sensory_action(BaselinePolicy& policy, long step) { return policy.action(step); }

}  // namespace sugarl::evalkit
