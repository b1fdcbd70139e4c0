#pragma once

#include "sugarl/agent/config.hpp"
#include "sugarl/agent/replay.hpp"
#include "sugarl/agent/reward.hpp"
#include "sugarl/nn/loss.hpp"
#include "sugarl/nn/net.hpp"
#include "sugarl/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sugarl::agent {

/// Network-facing dimensions of an agent.
struct AgentShape {
  int n_motor = 3;
  int n_sensory = 16;
  int in_channels = 4;
  int input_size = 84;
  bool identity_encoder = false;  // tabular stub: heads read the raw input
};

struct RewardModuleStats {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<double> probability;  // p(executed motor action) before the update
};

/// Bootstrapped regression targets. In shared mode `value` is the target of
/// Q^s + Q^o. In separate mode `value` targets the motor head and
/// `sensory` the sensory head.
struct Targets {
  bool shared = true;
  std::vector<double> value;
  std::vector<double> sensory;
};

inline int argmax(std::span<const float> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

/// Mean squared TD residual over a batch given per-head outputs, the
/// stored action index per head and sample, and the targets. Writes
/// d loss / d output into `grads`. Shared targets regress the sum of the
/// selected head values; separate targets regress head 0 and head 1 on
/// their own.
template <typename T>
double td_loss(const std::vector<std::vector<T>>& out, const std::vector<std::vector<int>>& actions,
               const std::vector<int>& sizes, const Targets& t, std::vector<std::vector<T>>& grads) {
  if (out.size() != sizes.size() || actions.size() != sizes.size())
    throw std::invalid_argument("td_loss: head count mismatch");
  const int batch = static_cast<int>(t.value.size());
  if (batch < 1) throw std::invalid_argument("td_loss: batch must not be empty");
  if (!t.shared && sizes.size() != 2) throw std::invalid_argument("td_loss: separate targets need two heads");
  grads.assign(out.size(), {});
  for (std::size_t h = 0; h < out.size(); ++h) grads[h].assign(out[h].size(), T{0});
  double loss = 0.0;
  const double inv_n = 1.0 / batch;
  for (int n = 0; n < batch; ++n) {
    auto at = [&](std::size_t h) { return static_cast<std::size_t>(n) * sizes[h] + actions[h][n]; };
    if (t.shared) {
      double q = 0.0;
      for (std::size_t h = 0; h < out.size(); ++h) q += static_cast<double>(out[h][at(h)]);
      const double residual = t.value[n] - q;
      loss += residual * residual * inv_n;
      for (std::size_t h = 0; h < out.size(); ++h) grads[h][at(h)] += static_cast<T>(-2.0 * residual * inv_n);
    } else {
      const double rm = t.value[n] - static_cast<double>(out[0][at(0)]);
      const double rs = t.sensory[n] - static_cast<double>(out[1][at(1)]);
      loss += (rm * rm + rs * rs) * inv_n;
      grads[0][at(0)] += static_cast<T>(-2.0 * rm * inv_n);
      grads[1][at(1)] += static_cast<T>(-2.0 * rs * inv_n);
    }
  }
  return loss;
}

/// Dual-head DQN with an inverse-dynamics reward module. Also covers the
/// single-policy variant (one head over the product action space) and
/// agents whose sensory actions come from a fixed baseline (motor head only).
class SugarlAgent {
 public:
  SugarlAgent(AgentShape shape, SugarlConfig config, std::uint64_t seed)
      : shape_(shape), config_(config), explore_rng_(seed * 2 + 1), replay_rng_(seed * 2 + 2) {
    config_.validate();
    if (shape_.n_motor <= 0 || shape_.n_sensory <= 0) throw std::invalid_argument("SugarlAgent: empty action space");
    if (config_.policy == PolicyKind::single) config_.reward_sign = RewardSign::off;
    std::mt19937_64 init_rng(seed);
    const auto encoder = shape_.identity_encoder
                             ? nn::EncoderSpec::passthrough(shape_.in_channels, shape_.input_size)
                             : nn::EncoderSpec::dqn(shape_.in_channels, shape_.input_size);
    online_ = nn::HeadedNet<float>(encoder, head_sizes());
    online_.init(init_rng);
    target_ = online_;
    q_opt_ = nn::AdamState<float>(online_.params(), {config_.lr});
    if (config_.uses_reward_module()) {
      const auto reward_encoder = shape_.identity_encoder
                                      ? nn::EncoderSpec::passthrough(2 * shape_.in_channels, shape_.input_size)
                                      : nn::EncoderSpec::dqn(2 * shape_.in_channels, shape_.input_size);
      reward_ = nn::HeadedNet<float>(reward_encoder, {shape_.n_motor});
      reward_.init(init_rng);
      reward_opt_ = nn::AdamState<float>(reward_.params(), {config_.reward_lr});
    }
    beta_ = std::isnan(config_.beta) ? 1.0 : config_.beta;
  }

  const AgentShape& shape() const { return shape_; }
  const SugarlConfig& config() const { return config_; }
  int input_length() const { return online_.input_length(); }
  bool has_reward_module() const { return config_.uses_reward_module(); }

  double beta() const { return beta_; }
  void set_beta(double b) {
    if (!(b >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    beta_ = b;
  }
  /// Scale applied to r_sugarl in the combined reward.
  double effective_beta() const { return config_.balance ? beta_ : 1.0; }

  std::vector<int> head_sizes() const {
    if (config_.policy == PolicyKind::single) return {shape_.n_motor * shape_.n_sensory};
    if (config_.learns_sensory_head()) return {shape_.n_motor, shape_.n_sensory};
    return {shape_.n_motor};
  }

  /// Per-head Q values for a single observation.
  std::vector<std::vector<float>> q_values(std::span<const float> obs) {
    const auto& out = online_.forward(obs, 1);
    return {out.begin(), out.end()};
  }

  /// Epsilon-greedy per head with independent draws; ties go to the lowest
  /// index. For agents without a sensory head the returned sensory action is
  /// -1 (the caller supplies one).
  std::pair<int, int> select_actions(std::span<const float> obs, double eps) {
    const auto q = q_values(obs);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (config_.policy == PolicyKind::single) {
      const int n = shape_.n_motor * shape_.n_sensory;
      const int k = unit(explore_rng_) < eps ? std::uniform_int_distribution<int>(0, n - 1)(explore_rng_) : argmax(q[0]);
      return decode_joint_action(k);
    }
    const int motor = unit(explore_rng_) < eps ? std::uniform_int_distribution<int>(0, shape_.n_motor - 1)(explore_rng_)
                                               : argmax(q[0]);
    if (!config_.learns_sensory_head()) return {motor, -1};
    const int sensory = unit(explore_rng_) < eps
                            ? std::uniform_int_distribution<int>(0, shape_.n_sensory - 1)(explore_rng_)
                            : argmax(q[1]);
    return {motor, sensory};
  }

  std::pair<int, int> decode_joint_action(int k) const { return {k / shape_.n_sensory, k % shape_.n_sensory}; }
  int encode_joint_action(int motor, int sensory) const { return motor * shape_.n_sensory + sensory; }

  /// p(executed motor action | o_t, o_{t+1}) under the current module.
  std::vector<double> reward_probabilities(const Batch& batch) {
    std::vector<double> p(batch.size, 1.0);
    if (!has_reward_module()) return p;
    const auto input = batch.pair_input();
    const auto& logits = reward_.forward(input, batch.size)[0];
    for (int n = 0; n < batch.size; ++n) {
      std::span<const float> row(logits.data() + static_cast<std::size_t>(n) * shape_.n_motor, shape_.n_motor);
      p[n] = nn::softmax_cross_entropy(row, batch.motor[n]).probability;
    }
    return p;
  }

  /// Sensorimotor rewards for a batch under the configured sign.
  std::vector<double> sensorimotor_rewards(std::span<const double> probabilities) const {
    std::vector<double> r(probabilities.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = sensorimotor_reward(probabilities[i], config_.reward_sign);
    return r;
  }

  /// One cross-entropy step on the reward module. Returns statistics and the
  /// pre-update probabilities of the executed actions.
  RewardModuleStats train_reward_module(const Batch& batch) {
    if (batch.size < 1) throw std::invalid_argument("train_reward_module: empty batch");
    if (!has_reward_module()) throw std::logic_error("train_reward_module: agent has no reward module");
    RewardModuleStats stats;
    const auto input = batch.pair_input();
    const auto& logits = reward_.forward(input, batch.size)[0];
    std::vector<std::vector<float>> grad(1, std::vector<float>(logits.size()));
    int correct = 0;
    for (int n = 0; n < batch.size; ++n) {
      std::span<const float> row(logits.data() + static_cast<std::size_t>(n) * shape_.n_motor, shape_.n_motor);
      const auto ce = nn::softmax_cross_entropy(row, batch.motor[n]);
      stats.loss += ce.loss;
      stats.probability.push_back(ce.probability);
      if (argmax(row) == batch.motor[n]) ++correct;
      for (int k = 0; k < shape_.n_motor; ++k)
        grad[0][static_cast<std::size_t>(n) * shape_.n_motor + k] = ce.grad[k] / static_cast<float>(batch.size);
    }
    stats.loss /= batch.size;
    stats.accuracy = static_cast<double>(correct) / batch.size;
    reward_.zero_grad();
    reward_.backward(grad);
    nn::adam_step(reward_.params(), reward_opt_);
    return stats;
  }

  /// Targets using r_sugarl evaluated now with the current reward module.
  Targets compute_targets(const Batch& batch) {
    const auto p = reward_probabilities(batch);
    return compute_targets(batch, sensorimotor_rewards(p));
  }

  Targets compute_targets(const Batch& batch, std::span<const double> r_sugarl) {
    if (static_cast<int>(r_sugarl.size()) != batch.size) throw std::invalid_argument("compute_targets: size mismatch");
    const auto& next = target_.forward(batch.next_obs, batch.size);
    const double gamma = config_.gamma;
    const double scale = effective_beta();
    Targets t;
    t.shared = config_.joint == JointLearning::shared || !config_.learns_sensory_head();
    t.value.resize(batch.size);
    if (!t.shared) t.sensory.resize(batch.size);
    for (int n = 0; n < batch.size; ++n) {
      std::vector<double> head_max(next.size());
      for (std::size_t h = 0; h < next.size(); ++h) {
        const int width = head_sizes()[h];
        std::span<const float> row(next[h].data() + static_cast<std::size_t>(n) * width, width);
        head_max[h] = *std::max_element(row.begin(), row.end());
      }
      const double cont = batch.done[n] ? 0.0 : gamma;
      if (t.shared) {
        double bootstrap = 0.0;
        for (double m : head_max) bootstrap += m;
        t.value[n] = batch.reward[n] + scale * r_sugarl[n] + cont * bootstrap;
      } else {
        t.value[n] = batch.reward[n] + cont * head_max[0];
        t.sensory[n] = scale * r_sugarl[n] + cont * head_max[1];
      }
    }
    return t;
  }

  /// Q value(s) of the stored actions: one column per head.
  std::vector<std::vector<int>> head_actions(const Batch& batch) const {
    std::vector<std::vector<int>> idx;
    if (config_.policy == PolicyKind::single) {
      idx.emplace_back();
      for (int n = 0; n < batch.size; ++n) idx[0].push_back(encode_joint_action(batch.motor[n], batch.sensory[n]));
      return idx;
    }
    idx.push_back(batch.motor);
    if (config_.learns_sensory_head()) idx.push_back(batch.sensory);
    return idx;
  }

  /// Mean squared TD residual and its gradient step on the Q network.
  double td_update(const Batch& batch, std::span<const double> r_sugarl) {
    if (batch.size < 1) throw std::invalid_argument("td_update: batch must not be empty");
    const Targets t = compute_targets(batch, r_sugarl);
    const double loss = td_loss_and_grad(batch, t);
    nn::adam_step(online_.params(), q_opt_);
    return loss;
  }

  double td_update(const Batch& batch) {
    const auto p = reward_probabilities(batch);
    return td_update(batch, sensorimotor_rewards(p));
  }

  /// Forward + backward of the TD loss without the optimizer step; leaves
  /// gradients in the online network. Exposed for gradient checking.
  double td_loss_and_grad(const Batch& batch, const Targets& t) {
    const auto& out = online_.forward(batch.obs, batch.size);
    std::vector<std::vector<float>> grads;
    const double loss = td_loss(out, head_actions(batch), head_sizes(), t, grads);
    online_.zero_grad();
    online_.backward(grads);
    return loss;
  }

  void sync_target() { target_.copy_parameters_from(online_); }

  nn::HeadedNet<float>& online() { return online_; }
  nn::HeadedNet<float>& target() { return target_; }
  nn::HeadedNet<float>& reward_net() {
    if (!has_reward_module()) throw std::logic_error("agent has no reward module");
    return reward_;
  }
  std::mt19937_64& replay_rng() { return replay_rng_; }

 private:
  AgentShape shape_;
  SugarlConfig config_;
  nn::HeadedNet<float> online_, target_, reward_;
  nn::AdamState<float> q_opt_, reward_opt_;
  double beta_ = 1.0;
  std::mt19937_64 explore_rng_;
  std::mt19937_64 replay_rng_;
};

}  // namespace sugarl::agent
