#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance runner. Nothing here calls the code path it is checking.

#include "sugarl/agent/agent.hpp"
#include "sugarl/envkit/image.hpp"
#include "sugarl/nn/gradcheck.hpp"
#include "sugarl/nn/net.hpp"

#include <array>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace oracles {

using sugarl::envkit::Image;
using sugarl::envkit::Rect;

// ---------------------------------------------------------------- gradients

/// Central-difference check of a standalone layer, input gradient included.
/// Loss is 0.5 * sum((y - t)^2) for a fixed random target t.
template <typename Layer, typename Forward, typename Backward>
sugarl::nn::GradCheckReport layer_grad_check(Layer& layer, std::vector<double> input, Forward&& forward,
                                             Backward&& backward, std::uint64_t seed) {
  std::vector<double> dx(input.size());
  std::vector<double> target;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto params = layer.params("layer");
  params.push_back({"input", input, dx});
  auto loss_fn = [&](bool with_grad) {
    const auto& y = forward(input);
    if (target.empty()) {
      target.resize(y.size());
      for (auto& v : target) v = normal(rng);
    }
    double loss = 0.0;
    std::vector<double> dy(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      dy[i] = y[i] - target[i];
      loss += 0.5 * dy[i] * dy[i];
    }
    if (with_grad) backward(dy, dx.data());
    return loss;
  };
  sugarl::nn::GradCheckOptions opt;
  opt.seed = seed + 1;
  opt.pattern = [&layer] {
    std::vector<bool> mask;
    layer.append_active(mask);
    return mask;
  };
  return sugarl::nn::grad_check(params, loss_fn, opt);
}

/// Gradient check of the full dual-head TD loss in double precision on a
/// random batch with random stored actions and fixed random targets.
inline sugarl::nn::GradCheckReport td_grad_check(bool shared, std::uint64_t seed) {
  using namespace sugarl;
  nn::EncoderSpec spec = nn::EncoderSpec::dqn(2, 36);
  spec.hidden = 24;
  const std::vector<int> sizes{3, 5};
  nn::HeadedNet<double> net(spec, sizes);
  std::mt19937_64 rng(seed);
  net.init(rng);
  const int batch = 3;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> input(static_cast<std::size_t>(batch) * net.input_length());
  for (auto& v : input) v = unit(rng);
  std::vector<std::vector<int>> actions(2);
  agent::Targets t;
  t.shared = shared;
  for (int n = 0; n < batch; ++n) {
    actions[0].push_back(std::uniform_int_distribution<int>(0, sizes[0] - 1)(rng));
    actions[1].push_back(std::uniform_int_distribution<int>(0, sizes[1] - 1)(rng));
    t.value.push_back(normal(rng));
    if (!shared) t.sensory.push_back(normal(rng));
  }
  auto loss_fn = [&](bool with_grad) {
    const auto& out = net.forward(input, batch);
    std::vector<std::vector<double>> grads;
    const double loss = agent::td_loss(out, actions, sizes, t, grads);
    if (with_grad) net.backward(grads);
    return loss;
  };
  nn::GradCheckOptions opt;
  opt.seed = seed + 1;
  opt.pattern = [&net] { return net.activation_pattern(); };
  return nn::grad_check(net.params(), loss_fn, opt);
}

// ---------------------------------------------------------------------- PVM

/// Per pixel, scan the history newest-first and take the first of the last
/// `capacity` observations that covers it.
inline Image recency_oracle(const std::vector<std::pair<Image, Rect>>& history, int capacity, int fh, int fw) {
  Image out(fh, fw, 0.0f);
  const int n = static_cast<int>(history.size());
  const int first = std::max(0, n - capacity);
  for (int i = 0; i < fh; ++i)
    for (int j = 0; j < fw; ++j)
      for (int k = n - 1; k >= first; --k) {
        const auto& [img, r] = history[k];
        if (i >= r.x && i < r.x + r.h && j >= r.y && j < r.y + r.w) {
          out.at(i, j) = img.at(i - r.x, j - r.y);
          break;
        }
      }
  return out;
}

// ------------------------------------------------------------------ targets

/// Textbook per-element target: y = r + beta*r_sug + gamma * (max Q_0' +
/// max Q_1') with the bootstrap dropped on terminal transitions; separate
/// mode splits the environment and sensorimotor parts across the two heads.
struct StraightTargets {
  std::vector<double> value, sensory;
};

inline StraightTargets straight_line_targets(const std::vector<std::vector<float>>& next_q, const std::vector<int>& sizes,
                                             const std::vector<float>& reward, const std::vector<std::uint8_t>& done,
                                             const std::vector<double>& r_sug, double gamma, double beta, bool shared) {
  StraightTargets out;
  for (std::size_t n = 0; n < reward.size(); ++n) {
    std::vector<double> maxes;
    for (std::size_t h = 0; h < sizes.size(); ++h) {
      double m = -1e300;
      for (int a = 0; a < sizes[h]; ++a) m = std::max(m, static_cast<double>(next_q[h][n * sizes[h] + a]));
      maxes.push_back(m);
    }
    const double g = done[n] ? 0.0 : gamma;
    if (shared) {
      double sum = 0.0;
      for (double m : maxes) sum += m;
      out.value.push_back(reward[n] + beta * r_sug[n] + g * sum);
    } else {
      out.value.push_back(reward[n] + g * maxes[0]);
      out.sensory.push_back(beta * r_sug[n] + g * maxes[1]);
    }
  }
  return out;
}

// ---------------------------------------------------------- tabular problem

/// Two states, two motor actions; action a moves to state a. Rewards
/// r(s, a) below; never terminates.
struct TwoStateMdp {
  static constexpr double reward[2][2] = {{0.0, 0.5}, {1.0, 0.0}};
  static constexpr int next(int /*s*/, int a) { return a; }
};

/// Optimal Q by value iteration to machine precision.
inline std::array<std::array<double, 2>, 2> two_state_q(double gamma) {
  std::array<std::array<double, 2>, 2> q{};
  for (int it = 0; it < 5000; ++it) {
    auto nq = q;
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const int s2 = TwoStateMdp::next(s, a);
        nq[s][a] = TwoStateMdp::reward[s][a] + gamma * std::max(q[s2][0], q[s2][1]);
      }
    q = nq;
  }
  return q;
}

// ------------------------------------------------------- inverse dynamics

/// Observation pair whose second frame draws the action index as a bright
/// vertical band (band a of n across the width) over background noise; the
/// first frame is noise only. One channel per frame, `side` x `side`.
template <typename Rng>
sugarl::agent::Batch action_revealing_batch(int batch, int n_actions, int side, Rng& rng, bool shuffle_labels = false) {
  sugarl::agent::Batch b;
  b.size = batch;
  b.input_length = side * side;
  b.obs.resize(static_cast<std::size_t>(batch) * side * side);
  b.next_obs.resize(b.obs.size());
  std::uniform_real_distribution<float> noise(0.0f, 0.3f);
  std::uniform_int_distribution<int> pick(0, n_actions - 1);
  const int band = side / n_actions;
  for (int n = 0; n < batch; ++n) {
    const int a = pick(rng);
    float* o = b.obs.data() + static_cast<std::size_t>(n) * side * side;
    float* o2 = b.next_obs.data() + static_cast<std::size_t>(n) * side * side;
    for (int i = 0; i < side * side; ++i) {
      o[i] = noise(rng);
      o2[i] = noise(rng);
    }
    for (int i = 0; i < side; ++i)
      for (int j = a * band; j < (a + 1) * band; ++j) o2[i * side + j] = 1.0f;
    b.motor.push_back(shuffle_labels ? pick(rng) : a);
    b.sensory.push_back(0);
    b.reward.push_back(0.0f);
    b.done.push_back(0);
  }
  return b;
}

}  // namespace oracles
