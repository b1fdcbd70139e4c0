#pragma once

#include "sugarl/envkit/image.hpp"
#include "sugarl/envkit/sensory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace sugarl::evalkit {

/// Interquartile mean: sort, drop floor(n/4) values from each end, average
/// the rest.
inline double iqm(std::span<const double> values) {
  if (values.size() < 4) throw std::invalid_argument("iqm: need at least 4 values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t cut = v.size() / 4;
  const double sum = std::accumulate(v.begin() + cut, v.end() - cut, 0.0);
  return sum / static_cast<double>(v.size() - 2 * cut);
}

/// iqm(returns) / iqm(reference). The reference must be strictly positive;
/// a zero or negative reference IQM makes the ratio meaningless.
inline double normalized_score(std::span<const double> returns, std::span<const double> reference) {
  const double ref = iqm(reference);
  if (!(ref > 0.0)) throw std::invalid_argument("normalized_score: reference IQM must be positive");
  return iqm(returns) / ref;
}

/// Per-step fovea rectangles and sensory actions of one or more episodes.
struct SensoryTrace {
  int frame_h = 84;
  int frame_w = 84;
  int n_actions = envkit::kAbsoluteActions;
  std::vector<envkit::Rect> rects;
  std::vector<int> actions;

  void add(const envkit::Rect& r, int action) {
    rects.push_back(r);
    actions.push_back(action);
  }
  std::size_t steps() const { return rects.size(); }
};

/// count[p] = number of steps whose fovea covers pixel p. Row-major H x W.
struct CountMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  std::uint32_t at(int i, int j) const { return counts[static_cast<std::size_t>(i) * width + j]; }
  std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
  std::uint32_t max() const { return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end()); }
};

inline CountMap sensory_heatmap(const SensoryTrace& trace) {
  if (trace.rects.empty()) throw std::invalid_argument("sensory_heatmap: empty trace");
  CountMap m{trace.frame_h, trace.frame_w, std::vector<std::uint32_t>(static_cast<std::size_t>(trace.frame_h) * trace.frame_w)};
  for (const auto& r : trace.rects) {
    if (!r.inside(trace.frame_h, trace.frame_w)) throw std::invalid_argument("sensory_heatmap: rectangle outside frame");
    for (int i = r.x; i < r.x + r.h; ++i)
      for (int j = r.y; j < r.y + r.w; ++j) ++m.counts[static_cast<std::size_t>(i) * m.width + j];
  }
  return m;
}

inline std::vector<std::uint64_t> action_histogram(const SensoryTrace& trace) {
  std::vector<std::uint64_t> h(trace.n_actions, 0);
  for (int a : trace.actions) {
    if (a < 0 || a >= trace.n_actions) throw std::invalid_argument("action_histogram: action out of range");
    ++h[a];
  }
  return h;
}

/// KL(p || uniform) in nats, with 0 log 0 = 0.
inline double sensory_kl(std::span<const std::uint64_t> histogram) {
  const double total = static_cast<double>(std::accumulate(histogram.begin(), histogram.end(), std::uint64_t{0}));
  if (!(total > 0.0)) throw std::invalid_argument("sensory_kl: empty histogram");
  const double k = static_cast<double>(histogram.size());
  double kl = 0.0;
  for (auto c : histogram) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    kl += p * std::log(p * k);
  }
  return std::max(kl, 0.0);
}

inline double sensory_kl(std::span<const double> probabilities) {
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("sensory_kl: empty histogram");
  const double k = static_cast<double>(probabilities.size());
  double kl = 0.0;
  for (double c : probabilities) {
    if (c < 0.0) throw std::invalid_argument("sensory_kl: negative mass");
    if (c == 0.0) continue;
    const double p = c / total;
    kl += p * std::log(p * k);
  }
  return std::max(kl, 0.0);
}

}  // namespace sugarl::evalkit
