#pragma once

#include "sugarl/envkit/image.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

namespace sugarl::envkit {

enum class ControlMode { absolute, relative };

inline constexpr int kAnchorGrid = 4;
inline constexpr int kAbsoluteActions = kAnchorGrid * kAnchorGrid;
inline constexpr int kRelativeActions = 5;

enum RelativeMove : int { stay = 0, up = 1, down = 2, left = 3, right = 4 };

inline int sensory_action_count(ControlMode mode) {
  return mode == ControlMode::absolute ? kAbsoluteActions : kRelativeActions;
}

inline ControlMode parse_control_mode(const std::string& s) {
  if (s == "absolute") return ControlMode::absolute;
  if (s == "relative") return ControlMode::relative;
  throw std::invalid_argument("expected absolute or relative, got '" + s + "'");
}
inline std::string to_string(ControlMode m) { return m == ControlMode::absolute ? "absolute" : "relative"; }

/// Anchor coordinate k (0..3) along an axis of length `frame` for a window of
/// length `window`: floor((frame - window) * k / 3). Evenly spaced, first and
/// last anchors touch the frame border.
inline int anchor_coord(int frame, int window, int k) { return (frame - window) * k / (kAnchorGrid - 1); }

struct Resolution {
  int h = 0;
  int w = 0;
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

/// The agent's "eye": where the observable area is and how it is rendered.
struct SensoryState {
  int frame_h = 84;
  int frame_w = 84;
  int x = 0;  // top-left row
  int y = 0;  // top-left column
  int h = 50;
  int w = 50;
  Resolution foveal_res{50, 50};
  std::optional<Resolution> peripheral_res;
  ControlMode control = ControlMode::absolute;

  Rect rect() const { return {x, y, h, w}; }

  void validate() const {
    if (h <= 0 || w <= 0 || h > frame_h || w > frame_w)
      throw std::invalid_argument("SensoryState: fovea " + std::to_string(h) + "x" + std::to_string(w) +
                                  " does not fit a " + std::to_string(frame_h) + "x" + std::to_string(frame_w) +
                                  " frame");
    if (x < 0 || y < 0 || x > frame_h - h || y > frame_w - w)
      throw std::invalid_argument("SensoryState: fovea location out of bounds");
    if (foveal_res.h <= 0 || foveal_res.w <= 0) throw std::invalid_argument("SensoryState: bad foveal resolution");
    if (peripheral_res && (peripheral_res->h <= 0 || peripheral_res->w <= 0))
      throw std::invalid_argument("SensoryState: bad peripheral resolution");
  }

  /// Anchor (row, col) grid indices of the current location; locations are
  /// always anchors when driven by apply_sensory_action.
  std::pair<int, int> anchor_indices() const {
    auto nearest = [](int frame, int window, int v) {
      int best = 0;
      for (int k = 1; k < kAnchorGrid; ++k)
        if (std::abs(anchor_coord(frame, window, k) - v) < std::abs(anchor_coord(frame, window, best) - v)) best = k;
      return best;
    };
    return {nearest(frame_h, h, x), nearest(frame_w, w, y)};
  }
};

/// Top-left corner of absolute anchor `index` (row-major over the 4x4 grid).
inline std::pair<int, int> anchor_location(const SensoryState& s, int index) {
  if (index < 0 || index >= kAbsoluteActions) throw std::invalid_argument("anchor index out of range");
  return {anchor_coord(s.frame_h, s.h, index / kAnchorGrid), anchor_coord(s.frame_w, s.w, index % kAnchorGrid)};
}

inline SensoryState apply_sensory_action(SensoryState s, int action) {
  if (action < 0 || action >= sensory_action_count(s.control))
    throw std::invalid_argument("apply_sensory_action: invalid action " + std::to_string(action) + " for " +
                                (s.control == ControlMode::absolute ? "absolute" : "relative") + " control");
  if (s.control == ControlMode::absolute) {
    std::tie(s.x, s.y) = anchor_location(s, action);
    return s;
  }
  auto [row, col] = s.anchor_indices();
  switch (action) {
    case up: row = std::max(row - 1, 0); break;
    case down: row = std::min(row + 1, kAnchorGrid - 1); break;
    case left: col = std::max(col - 1, 0); break;
    case right: col = std::min(col + 1, kAnchorGrid - 1); break;
    default: return s;
  }
  s.x = anchor_coord(s.frame_h, s.h, row);
  s.y = anchor_coord(s.frame_w, s.w, col);
  return s;
}

/// Absolute anchor index equivalent to the current location.
inline int current_anchor(const SensoryState& s) {
  auto [row, col] = s.anchor_indices();
  return row * kAnchorGrid + col;
}

}  // namespace sugarl::envkit
