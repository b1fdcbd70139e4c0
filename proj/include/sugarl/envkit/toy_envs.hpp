#pragma once

#include "sugarl/envkit/image.hpp"

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sugarl::envkit {

struct FrameStep {
  double reward = 0.0;
  bool terminal = false;
};

/// Best achievable return and the episode length (in frames) it is earned
/// over, for environments where both are known in closed form.
struct ReturnBound {
  double max_return;
  int episode_frames;
};

/// A fully observable pixel game advanced one frame at a time. The active
/// vision wrapper decides what part of the rendered frame the agent sees.
class ToyEnv {
 public:
  virtual ~ToyEnv() = default;

  virtual std::string_view name() const = 0;
  virtual std::vector<std::string> motor_actions() const = 0;
  int num_motor_actions() const { return static_cast<int>(motor_actions().size()); }

  /// Starts a new episode. The RNG stream continues across episodes, so a
  /// fixed construction seed yields a fixed sequence of episodes.
  virtual void reset() = 0;
  virtual FrameStep step_frame(int motor_action) = 0;
  virtual void render(Image& frame) const = 0;

  /// Motor action of a scripted full-information policy; used to compute
  /// reference returns, never by learning agents.
  virtual int oracle_action() const = 0;
  virtual std::optional<ReturnBound> return_bound() const { return std::nullopt; }

  int frame_size() const { return size_; }

 protected:
  ToyEnv(int frame_size, std::uint64_t seed) : size_(frame_size), rng_(seed) {
    if (frame_size < 32) throw std::invalid_argument("toy env frame size must be at least 32");
  }

  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  static void fill_rect(Image& img, int x, int y, int h, int w, float v) {
    for (int i = std::max(x, 0); i < std::min(x + h, img.height); ++i)
      for (int j = std::max(y, 0); j < std::min(y + w, img.width); ++j) img.at(i, j) = v;
  }

  int size_;
  std::mt19937_64 rng_;
};

inline constexpr float kBright = 255.0f / 255.0f;
inline constexpr float kMid = 160.0f / 255.0f;

/// A paddle on the bottom row catches balls dropped one at a time from the
/// top, each at a random column near the paddle. A ball hangs still for a
/// short delay, then falls one pixel per frame; +1 when it lands on the
/// paddle, -1 otherwise. An episode is a fixed number of balls.
class CatchEnv final : public ToyEnv {
 public:
  static constexpr int kBall = 4;
  static constexpr int kPaddleWidth = 16;
  static constexpr int kPaddleHeight = 3;
  static constexpr int kPaddleSpeed = 2;
  static constexpr int kDropDelay = 8;
  static constexpr int kBallsPerEpisode = 10;
  // Balls drop within this many pixels of the paddle centre, so the catch
  // can be made from views around the paddle.
  static constexpr int kSpawnSpread = 24;

  CatchEnv(int frame_size, std::uint64_t seed) : ToyEnv(frame_size, seed) { reset(); }

  std::string_view name() const override { return "catch"; }
  std::vector<std::string> motor_actions() const override { return {"left", "stay", "right"}; }

  void reset() override {
    paddle_col_ = (size_ - kPaddleWidth) / 2;
    balls_done_ = 0;
    spawn_ball();
  }

  FrameStep step_frame(int a) override {
    if (a < 0 || a > 2) throw std::invalid_argument("catch: motor action out of range");
    if (balls_done_ >= kBallsPerEpisode) throw std::logic_error("catch: step after episode end");
    paddle_col_ = std::clamp(paddle_col_ + (a - 1) * kPaddleSpeed, 0, size_ - kPaddleWidth);
    FrameStep out;
    if (delay_ > 0) {
      --delay_;
      return out;
    }
    ++ball_row_;
    if (ball_row_ + kBall >= paddle_row()) {
      const bool hit = ball_col_ + kBall > paddle_col_ && ball_col_ < paddle_col_ + kPaddleWidth;
      out.reward = hit ? 1.0 : -1.0;
      ++balls_done_;
      if (balls_done_ >= kBallsPerEpisode) {
        out.terminal = true;
      } else {
        spawn_ball();
      }
    }
    return out;
  }

  void render(Image& frame) const override {
    frame = Image(size_, size_, 0.0f);
    fill_rect(frame, ball_row_, ball_col_, kBall, kBall, kBright);
    fill_rect(frame, paddle_row(), paddle_col_, kPaddleHeight, kPaddleWidth, kMid);
  }

  int oracle_action() const override {
    const int target = std::clamp(ball_col_ + kBall / 2 - kPaddleWidth / 2, 0, size_ - kPaddleWidth);
    if (target < paddle_col_ - 1) return 0;
    if (target > paddle_col_ + 1) return 2;
    return 1;
  }

  std::optional<ReturnBound> return_bound() const override {
    return ReturnBound{static_cast<double>(kBallsPerEpisode), kBallsPerEpisode * frames_per_ball()};
  }

  int frames_per_ball() const { return kDropDelay + paddle_row() - kBall; }
  int paddle_row() const { return size_ - kPaddleHeight - 1; }
  int paddle_col() const { return paddle_col_; }
  int ball_row() const { return ball_row_; }
  int ball_col() const { return ball_col_; }

 private:
  void spawn_ball() {
    ball_row_ = 0;
    const int centre = paddle_col_ + (kPaddleWidth - kBall) / 2;
    ball_col_ = std::clamp(centre + uniform_int(-kSpawnSpread, kSpawnSpread), 0, size_ - kBall);
    delay_ = kDropDelay;
  }

  int paddle_col_ = 0;
  int ball_row_ = 0, ball_col_ = 0, delay_ = 0;
  int balls_done_ = 0;
};

/// The agent square chases a target that drifts with a slowly changing
/// velocity; +1 per contact, after which the target respawns away from the
/// agent. Fixed episode length.
class ChaseEnv final : public ToyEnv {
 public:
  static constexpr int kSide = 6;
  static constexpr int kAgentSpeed = 2;
  static constexpr int kEpisodeFrames = 800;
  static constexpr double kTurnProbability = 0.05;

  ChaseEnv(int frame_size, std::uint64_t seed) : ToyEnv(frame_size, seed) { reset(); }

  std::string_view name() const override { return "chase"; }
  std::vector<std::string> motor_actions() const override { return {"stay", "up", "down", "left", "right"}; }

  void reset() override {
    frame_ = 0;
    agent_row_ = (size_ - kSide) / 2;
    agent_col_ = (size_ - kSide) / 2;
    respawn_target();
  }

  FrameStep step_frame(int a) override {
    if (a < 0 || a > 4) throw std::invalid_argument("chase: motor action out of range");
    if (frame_ >= kEpisodeFrames) throw std::logic_error("chase: step after episode end");
    static constexpr int drow[5] = {0, -1, 1, 0, 0};
    static constexpr int dcol[5] = {0, 0, 0, -1, 1};
    agent_row_ = std::clamp(agent_row_ + drow[a] * kAgentSpeed, 0, size_ - kSide);
    agent_col_ = std::clamp(agent_col_ + dcol[a] * kAgentSpeed, 0, size_ - kSide);

    if (uniform() < kTurnProbability) pick_velocity();
    move_target_axis(target_row_, vel_row_);
    move_target_axis(target_col_, vel_col_);

    FrameStep out;
    if (overlaps()) {
      out.reward = 1.0;
      respawn_target();
    }
    ++frame_;
    out.terminal = frame_ >= kEpisodeFrames;
    return out;
  }

  void render(Image& frame) const override {
    frame = Image(size_, size_, 0.0f);
    fill_rect(frame, target_row_, target_col_, kSide, kSide, kMid);
    fill_rect(frame, agent_row_, agent_col_, kSide, kSide, kBright);
  }

  int oracle_action() const override {
    const int dr = target_row_ - agent_row_;
    const int dc = target_col_ - agent_col_;
    if (dr == 0 && dc == 0) return 0;
    if (std::abs(dr) >= std::abs(dc)) return dr < 0 ? 1 : 2;
    return dc < 0 ? 3 : 4;
  }

 private:
  bool overlaps() const {
    return agent_row_ < target_row_ + kSide && target_row_ < agent_row_ + kSide && agent_col_ < target_col_ + kSide &&
           target_col_ < agent_col_ + kSide;
  }

  void pick_velocity() {
    do {
      vel_row_ = uniform_int(-1, 1);
      vel_col_ = uniform_int(-1, 1);
    } while (vel_row_ == 0 && vel_col_ == 0);
  }

  void move_target_axis(int& pos, int& vel) {
    pos += vel;
    if (pos < 0) {
      pos = 0;
      vel = -vel;
    } else if (pos > size_ - kSide) {
      pos = size_ - kSide;
      vel = -vel;
    }
  }

  void respawn_target() {
    do {
      target_row_ = uniform_int(0, size_ - kSide);
      target_col_ = uniform_int(0, size_ - kSide);
    } while (std::abs(target_row_ - agent_row_) + std::abs(target_col_ - agent_col_) < size_ / 4);
    pick_velocity();
  }

  int frame_ = 0;
  int agent_row_ = 0, agent_col_ = 0;
  int target_row_ = 0, target_col_ = 0;
  int vel_row_ = 0, vel_col_ = 0;
};

/// Avoid blocks falling one at a time onto the bottom row. -1 per hit,
/// +0.0025 per frame survived (0.01 per agent step at action repeat 4).
/// Fixed episode length.
class DodgeEnv final : public ToyEnv {
 public:
  static constexpr int kBlock = 8;
  static constexpr int kAgentWidth = 8;
  static constexpr int kAgentHeight = 4;
  static constexpr int kAgentSpeed = 2;
  static constexpr int kBlockSpeed = 2;
  static constexpr int kEpisodeFrames = 800;
  static constexpr double kSurvivalReward = 0.0025;

  DodgeEnv(int frame_size, std::uint64_t seed) : ToyEnv(frame_size, seed) { reset(); }

  std::string_view name() const override { return "dodge"; }
  std::vector<std::string> motor_actions() const override { return {"left", "stay", "right"}; }

  void reset() override {
    frame_ = 0;
    agent_col_ = (size_ - kAgentWidth) / 2;
    spawn_block();
  }

  FrameStep step_frame(int a) override {
    if (a < 0 || a > 2) throw std::invalid_argument("dodge: motor action out of range");
    if (frame_ >= kEpisodeFrames) throw std::logic_error("dodge: step after episode end");
    agent_col_ = std::clamp(agent_col_ + (a - 1) * kAgentSpeed, 0, size_ - kAgentWidth);
    block_row_ += kBlockSpeed;
    FrameStep out;
    const bool col_overlap = block_col_ < agent_col_ + kAgentWidth && agent_col_ < block_col_ + kBlock;
    if (block_row_ + kBlock > agent_row() && col_overlap) {
      out.reward = -1.0;
      spawn_block();
    } else if (block_row_ >= size_) {
      spawn_block();
    }
    out.reward += kSurvivalReward;
    ++frame_;
    out.terminal = frame_ >= kEpisodeFrames;
    return out;
  }

  void render(Image& frame) const override {
    frame = Image(size_, size_, 0.0f);
    fill_rect(frame, block_row_, block_col_, kBlock, kBlock, kBright);
    fill_rect(frame, agent_row(), agent_col_, kAgentHeight, kAgentWidth, kMid);
  }

  int oracle_action() const override {
    const bool threat = block_col_ < agent_col_ + kAgentWidth + kAgentSpeed && agent_col_ < block_col_ + kBlock + kAgentSpeed;
    if (!threat) return 1;
    const int block_center = block_col_ + kBlock / 2;
    const int agent_center = agent_col_ + kAgentWidth / 2;
    if (agent_col_ == 0) return 2;
    if (agent_col_ == size_ - kAgentWidth) return 0;
    return agent_center < block_center ? 0 : 2;
  }

  std::optional<ReturnBound> return_bound() const override {
    return ReturnBound{kSurvivalReward * kEpisodeFrames, kEpisodeFrames};
  }

  int agent_row() const { return size_ - kAgentHeight; }

 private:
  void spawn_block() {
    block_row_ = -kBlock;
    block_col_ = uniform_int(0, size_ - kBlock);
  }

  int frame_ = 0;
  int agent_col_ = 0;
  int block_row_ = 0, block_col_ = 0;
};

inline const std::vector<std::string>& toy_env_names() {
  static const std::vector<std::string> names{"catch", "chase", "dodge"};
  return names;
}

inline std::unique_ptr<ToyEnv> make_toy_env(std::string_view name, int frame_size, std::uint64_t seed) {
  if (name == "catch") return std::make_unique<CatchEnv>(frame_size, seed);
  if (name == "chase") return std::make_unique<ChaseEnv>(frame_size, seed);
  if (name == "dodge") return std::make_unique<DodgeEnv>(frame_size, seed);
  throw std::invalid_argument("unknown environment '" + std::string(name) + "' (expected catch, chase or dodge)");
}

}  // namespace sugarl::envkit
