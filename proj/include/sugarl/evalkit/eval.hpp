#pragma once

#include "sugarl/agent/agent.hpp"
#include "sugarl/envkit/active_env.hpp"
#include "sugarl/evalkit/baselines.hpp"
#include "sugarl/evalkit/stats.hpp"
#include "sugarl/pvm/pvm.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sugarl::evalkit {

/// Chooses (motor, sensory) from the agent-facing observation.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual int motor_actions() const = 0;
  virtual int sensory_actions() const = 0;
  virtual void begin_episode() {}
  virtual std::pair<int, int> act(std::span<const float> obs, int episode_step) = 0;
};

/// Greedy (epsilon = 0) agent; agents trained with a baseline sensory
/// policy keep using it.
class AgentActor final : public Actor {
 public:
  AgentActor(agent::SugarlAgent& agent, std::optional<BaselinePolicy> sensory = std::nullopt)
      : agent_(agent), sensory_(std::move(sensory)) {
    if (!agent_.config().learns_sensory_head() && agent_.config().policy == agent::PolicyKind::dual && !sensory_)
      throw std::invalid_argument("AgentActor: agent without a sensory head needs a baseline sensory policy");
  }
  int motor_actions() const override { return agent_.shape().n_motor; }
  int sensory_actions() const override { return agent_.shape().n_sensory; }
  std::pair<int, int> act(std::span<const float> obs, int episode_step) override {
    auto [m, s] = agent_.select_actions(obs, 0.0);
    if (s < 0) s = sensory_->action(episode_step);
    return {m, s};
  }

 private:
  agent::SugarlAgent& agent_;
  std::optional<BaselinePolicy> sensory_;
};

/// Baseline sensory policy paired with uniformly random motor actions.
class BaselineActor final : public Actor {
 public:
  BaselineActor(BaselinePolicy sensory, int n_motor, std::uint64_t seed)
      : sensory_(std::move(sensory)), n_motor_(n_motor), rng_(seed) {}
  int motor_actions() const override { return n_motor_; }
  int sensory_actions() const override { return envkit::kAbsoluteActions; }
  std::pair<int, int> act(std::span<const float>, int episode_step) override {
    return {std::uniform_int_distribution<int>(0, n_motor_ - 1)(rng_), sensory_.action(episode_step)};
  }

 private:
  BaselinePolicy sensory_;
  int n_motor_;
  std::mt19937_64 rng_;
};

/// Frame-stacked float observation built from quantized pipeline output,
/// zero-padded at episode start; matches what the replay buffer feeds the
/// network during training.
class ObservationStack {
 public:
  ObservationStack(int stack, std::size_t frame_length) : stack_(stack), frame_length_(frame_length) { clear(); }

  void clear() {
    frames_.assign(stack_, std::vector<float>(frame_length_, 0.0f));
  }
  void push(std::span<const std::uint8_t> frame) {
    if (frame.size() != frame_length_) throw std::invalid_argument("ObservationStack: wrong frame length");
    frames_.pop_front();
    std::vector<float> f(frame_length_);
    for (std::size_t i = 0; i < frame_length_; ++i) f[i] = static_cast<float>(frame[i]) * (1.0f / 255.0f);
    frames_.push_back(std::move(f));
  }
  std::vector<float> input() const {
    std::vector<float> out;
    out.reserve(frame_length_ * stack_);
    for (const auto& f : frames_) out.insert(out.end(), f.begin(), f.end());
    return out;
  }

 private:
  int stack_;
  std::size_t frame_length_;
  std::deque<std::vector<float>> frames_;
};

struct EvalSetup {
  envkit::EnvConfig env;
  pvm::PvmKind pvm = pvm::PvmKind::stitch;
  int pvm_steps = 3;
  int input_size = 84;
  int episodes = 10;
  std::vector<std::uint64_t> seeds{0};
};

struct EvalReport {
  std::vector<std::uint64_t> seeds;     // per episode
  std::vector<int> episode_index;       // within its seed
  std::vector<double> returns;
  std::vector<long> lengths;
  std::optional<double> iqm_return;     // needs >= 4 episodes
  std::optional<double> normalized;     // set by the caller against a reference
  std::string config_hash;

  double mean_return() const {
    if (returns.empty()) throw std::invalid_argument("EvalReport: no episodes");
    double s = 0.0;
    for (double r : returns) s += r;
    return s / static_cast<double>(returns.size());
  }
};

struct EvalResult {
  EvalReport report;
  SensoryTrace trace;
};

/// Rolls out `episodes` episodes per seed. The environment for each seed is
/// constructed with that seed, so results are reproducible per seed.
inline EvalResult run_eval(Actor& actor, const EvalSetup& setup) {
  if (setup.episodes < 1) throw std::invalid_argument("run_eval: need at least one episode");
  if (setup.seeds.empty()) throw std::invalid_argument("run_eval: need at least one seed");
  EvalResult out;
  out.trace.frame_h = setup.env.frame_size;
  out.trace.frame_w = setup.env.frame_size;
  for (std::uint64_t seed : setup.seeds) {
    envkit::EnvConfig cfg = setup.env;
    cfg.seed = seed;
    envkit::ActiveEnv env(cfg);
    if (env.num_motor_actions() != actor.motor_actions() || env.num_sensory_actions() != actor.sensory_actions())
      throw std::invalid_argument("run_eval: actor action spaces do not match the environment");
    out.trace.n_actions = env.num_sensory_actions();
    pvm::ObservationPipeline pipeline(setup.pvm, setup.pvm_steps, cfg.frame_size, cfg.frame_size, setup.input_size,
                                      cfg.peripheral);
    ObservationStack stack(cfg.frame_stack, pipeline.frame_length());
    for (int e = 0; e < setup.episodes; ++e) {
      pipeline.reset();
      stack.clear();
      stack.push(pipeline.push(env.reset()));
      actor.begin_episode();
      double ret = 0.0;
      long len = 0;
      bool done = false;
      while (!done) {
        const auto obs = stack.input();
        const auto [m, s] = actor.act(obs, env.episode_step());
        const auto r = env.step(m, s);
        out.trace.add(r.packet.rect(), s);
        stack.push(pipeline.push(r.packet));
        ret += r.reward;
        ++len;
        done = r.done;
      }
      out.report.seeds.push_back(seed);
      out.report.episode_index.push_back(e);
      out.report.returns.push_back(ret);
      out.report.lengths.push_back(len);
    }
  }
  if (out.report.returns.size() >= 4) out.report.iqm_return = iqm(out.report.returns);
  return out;
}

}  // namespace sugarl::evalkit
