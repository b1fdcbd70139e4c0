#pragma once

#include "sugarl/agent/agent.hpp"
#include "sugarl/envkit/active_env.hpp"
#include "sugarl/evalkit/baselines.hpp"
#include "sugarl/nn/checkpoint.hpp"
#include "sugarl/pvm/pvm.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sugarl::agent {

struct TrainSetup {
  envkit::EnvConfig env;
  pvm::PvmKind pvm = pvm::PvmKind::stitch;
  int pvm_steps = 3;
  SugarlConfig agent;
  std::uint64_t seed = 0;
  int beta_reference_episodes = 5;  // oracle rollouts when no closed-form bound exists
};

struct EpisodeRecord {
  long step = 0;  // global agent step at episode end
  long episode = 0;
  double return_env = 0.0;
  double return_combined = 0.0;
  double epsilon = 0.0;
  double td_loss = 0.0;                 // mean over the episode's updates, 0 if none
  double reward_module_accuracy = 0.0;  // mean over the episode's module updates, 0 if none
};

struct TrainResult {
  std::vector<EpisodeRecord> episodes;
  long steps = 0;
  long td_updates = 0;
  long reward_updates = 0;
  long target_syncs = 0;
  double beta = 0.0;
  std::size_t replay_size = 0;
};

inline AgentShape agent_shape(const envkit::ActiveEnv& env, const pvm::ObservationPipeline& pipeline, int stack) {
  AgentShape s;
  s.n_motor = env.num_motor_actions();
  s.n_sensory = env.num_sensory_actions();
  s.in_channels = pipeline.planes() * stack;
  s.input_size = pipeline.input_size();
  return s;
}

inline pvm::ObservationPipeline make_pipeline(const TrainSetup& setup) {
  return pvm::ObservationPipeline(setup.pvm, setup.pvm_steps, setup.env.frame_size, setup.env.frame_size,
                                  setup.agent.input_size, setup.env.peripheral);
}

/// Mean per-step return of the scripted oracle; used for reward balancing in
/// environments without a closed-form bound.
inline double oracle_beta(const envkit::EnvConfig& config, int episodes, std::uint64_t seed) {
  std::vector<double> returns, lengths;
  for (int e = 0; e < episodes; ++e) {
    envkit::EnvConfig c = config;
    c.seed = seed + 7919u * static_cast<std::uint64_t>(e + 1);
    envkit::ActiveEnv env(c);
    env.reset();
    double ret = 0.0;
    long len = 0;
    bool done = false;
    while (!done) {
      const auto r = env.step(env.debug_oracle_action(), 0);
      ret += r.reward;
      ++len;
      done = r.done;
    }
    returns.push_back(ret);
    lengths.push_back(static_cast<double>(len));
  }
  return estimate_beta(returns, lengths);
}

/// β from the configured value, else the environment's return bound, else
/// oracle trajectories.
inline double resolve_beta(const TrainSetup& setup) {
  if (!std::isnan(setup.agent.beta)) return setup.agent.beta;
  envkit::ActiveEnv env(setup.env);
  if (const auto bound = env.return_bound_steps()) return estimate_beta_max(bound->first, bound->second);
  return oracle_beta(setup.env, setup.beta_reference_episodes, setup.seed);
}

inline std::optional<evalkit::BaselinePolicy> make_baseline(const SugarlConfig& c, std::uint64_t seed) {
  switch (c.sensory) {
    case SensorySource::learned: return std::nullopt;
    case SensorySource::random_view: return evalkit::BaselinePolicy(evalkit::BaselineKind::random_view, seed);
    case SensorySource::raster_scan: return evalkit::BaselinePolicy(evalkit::BaselineKind::raster_scan, seed);
    case SensorySource::fixed: return evalkit::BaselinePolicy(evalkit::BaselineKind::fixed, seed, c.fixed_anchor);
  }
  return std::nullopt;
}

/// Fills `out` with the float network input for a frame-id window.
inline void expand_window(const ReplayBuffer& replay, const std::int64_t* ids, std::vector<float>& out) {
  out.resize(replay.input_length());
  replay.expand(ids, out.data());
}

/// One training run. Acting, replay writes, Q and reward-module updates and
/// target syncs are interleaved on the global step counter. Deterministic
/// for a given setup.
class Trainer {
 public:
  explicit Trainer(TrainSetup setup)
      : setup_(std::move(setup)),
        env_(with_seed(setup_.env, setup_.seed)),
        pipeline_(make_pipeline(setup_)),
        agent_(agent_shape(env_, pipeline_, setup_.env.frame_stack), setup_.agent, setup_.seed),
        replay_(setup_.agent.buffer, pipeline_.frame_length(), setup_.env.frame_stack),
        history_(setup_.env.frame_stack),
        baseline_(make_baseline(setup_.agent, setup_.seed ^ 0x9e3779b97f4a7c15ULL)) {
    if (baseline_ && setup_.env.control != envkit::ControlMode::absolute)
      throw std::invalid_argument("baseline sensory policies require absolute control");
    agent_.set_beta(resolve_beta(setup_));
  }

  SugarlAgent& agent() { return agent_; }
  const ReplayBuffer& replay() const { return replay_; }
  const TrainSetup& setup() const { return setup_; }

  TrainResult run(long total_steps, const std::function<void(const EpisodeRecord&)>& on_episode = {}) {
    const SugarlConfig& c = agent_.config();
    TrainResult result;
    result.beta = agent_.beta();
    begin_episode();
    std::vector<float> obs, next_obs;
    EpisodeRecord ep;
    double loss_sum = 0.0, acc_sum = 0.0;
    long loss_n = 0, acc_n = 0;

    for (long step = 0; step < total_steps; ++step) {
      const double eps = epsilon_at(c, step);
      expand_window(replay_, history_.data(), obs);
      auto [motor, sensory] = agent_.select_actions(obs, eps);
      if (sensory < 0) sensory = baseline_->action(env_.episode_step());

      const auto r = env_.step(motor, sensory);
      const std::int64_t id = replay_.add_frame(pipeline_.push(r.packet));
      Transition t;
      for (int k = 0; k < history_.stack(); ++k) t.frames[k] = history_[k];
      t.frames[history_.stack()] = id;
      t.motor = motor;
      t.sensory = sensory;
      t.reward = static_cast<float>(r.reward);
      t.done = r.done;
      replay_.add(t);

      ep.return_env += r.reward;
      ep.return_combined += r.reward;
      if (agent_.has_reward_module()) {
        history_.push(id);
        expand_window(replay_, history_.data(), next_obs);
        ep.return_combined += agent_.effective_beta() * step_sugarl_reward(obs, next_obs, motor);
      } else {
        history_.push(id);
      }

      const long done_steps = step + 1;
      if (done_steps > c.learn_start) {
        const bool q_step = done_steps % c.train_freq == 0;
        const bool u_step = agent_.has_reward_module() && done_steps % c.reward_train_freq == 0;
        if (q_step || u_step) {
          const Batch batch = replay_.sample(c.batch, agent_.replay_rng());
          std::vector<double> p;
          if (u_step) {
            auto stats = agent_.train_reward_module(batch);
            p = std::move(stats.probability);
            acc_sum += stats.accuracy;
            ++acc_n;
            ++result.reward_updates;
          }
          if (q_step) {
            if (p.empty()) p = agent_.reward_probabilities(batch);
            loss_sum += agent_.td_update(batch, agent_.sensorimotor_rewards(p));
            ++loss_n;
            ++result.td_updates;
          }
        }
      }
      if (done_steps % c.target_update == 0) {
        agent_.sync_target();
        ++result.target_syncs;
      }

      if (r.done) {
        ep.step = done_steps;
        ep.episode = static_cast<long>(result.episodes.size());
        ep.epsilon = eps;
        ep.td_loss = loss_n ? loss_sum / loss_n : 0.0;
        ep.reward_module_accuracy = acc_n ? acc_sum / acc_n : 0.0;
        result.episodes.push_back(ep);
        if (on_episode) on_episode(ep);
        ep = EpisodeRecord{};
        loss_sum = acc_sum = 0.0;
        loss_n = acc_n = 0;
        begin_episode();
      }
      result.steps = done_steps;
    }
    result.replay_size = replay_.size();
    return result;
  }

 private:
  static envkit::EnvConfig with_seed(envkit::EnvConfig c, std::uint64_t seed) {
    c.seed = seed;
    return c;
  }

  void begin_episode() {
    const auto packet = env_.reset();
    pipeline_.reset();
    history_.clear();
    history_.push(replay_.add_frame(pipeline_.push(packet)));
  }

  double step_sugarl_reward(const std::vector<float>& obs, const std::vector<float>& next_obs, int motor) {
    Batch b;
    b.size = 1;
    b.input_length = static_cast<int>(obs.size());
    b.obs = obs;
    b.next_obs = next_obs;
    b.motor = {motor};
    return agent_.sensorimotor_rewards(agent_.reward_probabilities(b))[0];
  }

  TrainSetup setup_;
  envkit::ActiveEnv env_;
  pvm::ObservationPipeline pipeline_;
  SugarlAgent agent_;
  ReplayBuffer replay_;
  FrameHistory history_;
  std::optional<evalkit::BaselinePolicy> baseline_;
};

/// Mean env return of the last `n` episodes (all if fewer).
inline double final_return(const std::vector<EpisodeRecord>& episodes, std::size_t n = 10) {
  if (episodes.empty()) throw std::invalid_argument("final_return: no completed episodes");
  const std::size_t k = std::min(n, episodes.size());
  double s = 0.0;
  for (std::size_t i = episodes.size() - k; i < episodes.size(); ++i) s += episodes[i].return_env;
  return s / static_cast<double>(k);
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string training_log_csv(const std::vector<EpisodeRecord>& episodes) {
  std::ostringstream os;
  os << "step,episode,return_env,return_combined,epsilon,td_loss,reward_module_accuracy\n";
  for (const auto& e : episodes)
    os << e.step << ',' << e.episode << ',' << format_double(e.return_env) << ',' << format_double(e.return_combined)
       << ',' << format_double(e.epsilon) << ',' << format_double(e.td_loss) << ','
       << format_double(e.reward_module_accuracy) << '\n';
  return os.str();
}

/// Writes online.ckpt, target.ckpt and (if present) reward.ckpt into `dir`.
inline std::vector<std::filesystem::path> save_agent(SugarlAgent& agent, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out{dir / "online.ckpt", dir / "target.ckpt"};
  nn::save_checkpoint(out[0], agent.online());
  nn::save_checkpoint(out[1], agent.target());
  if (agent.has_reward_module()) {
    out.push_back(dir / "reward.ckpt");
    nn::save_checkpoint(out.back(), agent.reward_net());
  }
  return out;
}

}  // namespace sugarl::agent
