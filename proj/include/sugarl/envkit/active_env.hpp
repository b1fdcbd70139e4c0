#pragma once

#include "sugarl/envkit/image.hpp"
#include "sugarl/envkit/sensory.hpp"
#include "sugarl/envkit/toy_envs.hpp"

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace sugarl::envkit {

struct EnvConfig {
  std::string name = "catch";
  int frame_size = 84;
  std::uint64_t seed = 0;
  int fovea = 50;           // observable area is fovea x fovea
  int foveal_res = 0;       // 0: same as fovea
  bool peripheral = false;
  int peripheral_res = 20;
  ControlMode control = ControlMode::absolute;
  int max_episode_length = 10000;  // agent steps; truncation
  int action_repeat = 4;
  int frame_stack = 4;

  int effective_foveal_res() const { return foveal_res > 0 ? foveal_res : fovea; }

  void validate() const {
    bool known = false;
    for (const auto& n : toy_env_names()) known = known || n == name;
    if (!known) throw std::invalid_argument("unknown environment '" + name + "'");
    if (frame_size < 32) throw std::invalid_argument("frame_size must be >= 32");
    if (fovea <= 0 || fovea > frame_size)
      throw std::invalid_argument("fovea " + std::to_string(fovea) + " must be in [1, frame_size=" +
                                  std::to_string(frame_size) + "]");
    if (foveal_res < 0) throw std::invalid_argument("foveal_res must be >= 0");
    if (peripheral_res <= 0) throw std::invalid_argument("peripheral_res must be positive");
    if (max_episode_length <= 0) throw std::invalid_argument("max_episode_length must be positive");
    if (action_repeat <= 0) throw std::invalid_argument("action_repeat must be positive");
    if (frame_stack <= 0 || frame_stack > 8) throw std::invalid_argument("frame_stack must be in [1, 8]");
  }
};

/// What the agent receives each step. `peripheral` is all-zero when the
/// peripheral view is disabled.
struct ObservationPacket {
  Image foveal;
  Image peripheral;
  int x = 0;
  int y = 0;
  int h = 0;
  int w = 0;

  Rect rect() const { return {x, y, h, w}; }
  friend bool operator==(const ObservationPacket&, const ObservationPacket&) = default;
};

struct StepResult {
  ObservationPacket packet;
  double reward = 0.0;
  bool done = false;
};

inline Image crop_fovea(const Image& frame, const SensoryState& s) { return crop(frame, s.rect()); }

/// Full frame with the foveal rectangle zeroed, resampled to the peripheral
/// resolution.
inline Image build_peripheral(const Image& frame, const SensoryState& s) {
  if (!s.peripheral_res) throw std::invalid_argument("build_peripheral: peripheral view disabled");
  Image masked = frame;
  for (int i = s.x; i < s.x + s.h; ++i)
    for (int j = s.y; j < s.y + s.w; ++j) masked.at(i, j) = 0.0f;
  return interp(masked, s.peripheral_res->h, s.peripheral_res->w);
}

/// `disabled_peripheral` sets the size of the all-zero peripheral image used
/// when the state has no peripheral resolution.
inline ObservationPacket make_packet(const Image& frame, const SensoryState& s, Resolution disabled_peripheral = {1, 1}) {
  ObservationPacket p;
  p.foveal = crop_fovea(frame, s);
  if (s.foveal_res.h != s.h || s.foveal_res.w != s.w) p.foveal = interp(p.foveal, s.foveal_res.h, s.foveal_res.w);
  if (s.peripheral_res) {
    p.peripheral = build_peripheral(frame, s);
  } else {
    p.peripheral = Image(disabled_peripheral.h, disabled_peripheral.w, 0.0f);
  }
  p.x = s.x;
  p.y = s.y;
  p.h = s.h;
  p.w = s.w;
  return p;
}

/// Partial-observation wrapper: motor actions drive the toy environment with
/// action repeat; sensory actions move the observable area once per agent
/// step. The rendered full frame is kept private.
class ActiveEnv {
 public:
  explicit ActiveEnv(const EnvConfig& config) : config_(config) {
    config_.validate();
    env_ = make_toy_env(config_.name, config_.frame_size, config_.seed);
    initial_state_.frame_h = config_.frame_size;
    initial_state_.frame_w = config_.frame_size;
    initial_state_.h = config_.fovea;
    initial_state_.w = config_.fovea;
    initial_state_.foveal_res = {config_.effective_foveal_res(), config_.effective_foveal_res()};
    if (config_.peripheral) initial_state_.peripheral_res = Resolution{config_.peripheral_res, config_.peripheral_res};
    initial_state_.control = config_.control;
    initial_state_.validate();
    sensory_ = initial_state_;
    env_->render(frame_);
  }

  const EnvConfig& config() const { return config_; }
  int num_motor_actions() const { return env_->num_motor_actions(); }
  int num_sensory_actions() const { return sensory_action_count(config_.control); }
  std::vector<std::string> motor_actions() const { return env_->motor_actions(); }
  const SensoryState& sensory_state() const { return sensory_; }
  int episode_step() const { return step_; }
  bool done() const { return done_; }

  ObservationPacket reset() {
    env_->reset();
    sensory_ = initial_state_;
    step_ = 0;
    done_ = false;
    env_->render(frame_);
    return make_packet(frame_, sensory_, disabled_peripheral());
  }

  StepResult step(int motor_action, int sensory_action) {
    if (done_) throw std::logic_error("ActiveEnv::step called after episode end; call reset()");
    if (motor_action < 0 || motor_action >= num_motor_actions())
      throw std::invalid_argument("motor action " + std::to_string(motor_action) + " out of range");
    StepResult result;
    bool terminal = false;
    for (int r = 0; r < config_.action_repeat && !terminal; ++r) {
      const FrameStep fs = env_->step_frame(motor_action);
      result.reward += fs.reward;
      terminal = fs.terminal;
    }
    sensory_ = apply_sensory_action(sensory_, sensory_action);
    ++step_;
    done_ = terminal || step_ >= config_.max_episode_length;
    env_->render(frame_);
    result.packet = make_packet(frame_, sensory_, disabled_peripheral());
    result.done = done_;
    return result;
  }

  /// Reference per-step return for reward balancing: max_return / length
  /// in agent steps when known in closed form.
  std::optional<std::pair<double, int>> return_bound_steps() const {
    auto b = env_->return_bound();
    if (!b) return std::nullopt;
    const int steps = (b->episode_frames + config_.action_repeat - 1) / config_.action_repeat;
    return std::make_pair(b->max_return, std::min(steps, config_.max_episode_length));
  }

  /// Test and analysis access; agents only ever see packets.
  const Image& debug_full_frame() const { return frame_; }
  const ToyEnv& debug_game() const { return *env_; }
  int debug_oracle_action() const { return env_->oracle_action(); }

 private:
  Resolution disabled_peripheral() const { return {config_.peripheral_res, config_.peripheral_res}; }

  EnvConfig config_;
  std::unique_ptr<ToyEnv> env_;
  SensoryState initial_state_;
  SensoryState sensory_;
  Image frame_;
  int step_ = 0;
  bool done_ = false;
};

inline ActiveEnv make_env(const std::string& name, EnvConfig config) {
  config.name = name;
  return ActiveEnv(config);
}

}  // namespace sugarl::envkit
