#pragma once

#include "sugarl/agent/train.hpp"
#include "sugarl/cli/config.hpp"
#include "sugarl/cli/manifest.hpp"
#include "sugarl/evalkit/eval.hpp"
#include "sugarl/evalkit/io.hpp"
#include "sugarl/nn/checkpoint.hpp"
#include "sugarl/nn/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace sugarl::cli {

namespace fs = std::filesystem;

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

struct TrainRunOutput {
  agent::TrainResult result;
  fs::path dir;
};

/// One seed: learning curve, checkpoints, config copy, then the manifest.
inline TrainRunOutput train_one(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(dir);
  agent::Trainer trainer(cfg.train_setup(seed));
  long last_report = 0;
  auto result = trainer.run(cfg.agent.total_steps, [&](const agent::EpisodeRecord& e) {
    if (log && e.step - last_report >= 10'000) {
      *log << "  seed " << seed << " step " << e.step << " episode " << e.episode << " return " << e.return_env
           << " eps " << e.epsilon << "\n";
      log->flush();
      last_report = e.step;
    }
  });
  RunManifest m;
  m.command = "train";
  m.config_hash = config_hash(cfg);
  m.seed = seed;
  nn::write_file_atomic(dir / "learning_curve.csv", agent::training_log_csv(result.episodes));
  m.artifacts.push_back("learning_curve.csv");
  RunConfig copy = cfg;
  copy.seeds = {seed};
  nn::write_file_atomic(dir / "config.ini", config_ini(copy));
  m.artifacts.push_back("config.ini");
  for (const auto& p : agent::save_agent(trainer.agent(), dir / "checkpoints"))
    m.artifacts.push_back(fs::relative(p, dir));
  m.wall_seconds = seconds_since(t0);
  m.finished_utc = utc_now();
  write_manifest(dir / "manifest.txt", m);
  return {std::move(result), dir};
}

inline int cmd_train(const RunConfig& cfg, std::ostream& log) {
  for (std::uint64_t seed : cfg.seeds) {
    const auto out = train_one(cfg, seed, fs::path(cfg.out) / seed_dir_name(seed), &log);
    const auto& eps = out.result.episodes;
    log << "seed " << seed << ": " << out.result.steps << " steps, " << eps.size() << " episodes";
    if (!eps.empty()) log << ", final-10 return " << agent::final_return(eps);
    log << " -> " << out.dir.string() << "\n";
  }
  return 0;
}

/// Builds an untrained agent with the network shapes the config implies.
inline agent::SugarlAgent agent_for(const RunConfig& cfg, std::uint64_t seed) {
  const auto setup = cfg.train_setup(seed);
  envkit::ActiveEnv env(setup.env);
  const auto pipeline = agent::make_pipeline(setup);
  return agent::SugarlAgent(agent::agent_shape(env, pipeline, setup.env.frame_stack), setup.agent, seed);
}

/// Evaluates the online network stored at `checkpoint` (a file, or a
/// directory holding online.ckpt). Loads before writing anything, so a
/// mismatched checkpoint leaves no output behind.
inline int cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path file = fs::is_directory(checkpoint) ? checkpoint / "online.ckpt" : checkpoint;
  auto agent = agent_for(cfg, cfg.seeds.front());
  nn::load_checkpoint(file, agent.online());
  agent.sync_target();
  evalkit::AgentActor actor(agent, agent::make_baseline(cfg.agent, cfg.seeds.front() ^ 0x5bd1e995ULL));
  auto result = evalkit::run_eval(actor, cfg.eval_setup());
  result.report.config_hash = config_hash(cfg);

  const fs::path dir = fs::path(cfg.out) / "eval";
  fs::create_directories(dir);
  RunManifest m;
  m.command = "eval";
  m.config_hash = result.report.config_hash;
  m.seed = cfg.seeds.front();
  nn::write_file_atomic(dir / "eval_report.csv", evalkit::eval_report_csv(result.report));
  nn::write_file_atomic(dir / "eval_summary.csv", evalkit::eval_summary_csv(result.report));
  nn::write_file_atomic(dir / "trace.csv", evalkit::trace_csv(result.trace));
  m.artifacts = {"eval_report.csv", "eval_summary.csv", "trace.csv"};
  m.wall_seconds = seconds_since(t0);
  m.finished_utc = utc_now();
  write_manifest(dir / "manifest.txt", m);
  log << "eval: " << result.report.returns.size() << " episodes, mean return " << result.report.mean_return();
  if (result.report.iqm_return) log << ", IQM " << *result.report.iqm_return;
  log << " -> " << dir.string() << "\n";
  return 0;
}

/// For each trace: a heatmap PGM, an anchor histogram CSV, and one row of
/// kl.csv.
inline int cmd_analyze(const std::vector<fs::path>& traces, const fs::path& out, std::ostream& log) {
  if (traces.empty()) throw std::invalid_argument("analyze: no trace files given");
  std::vector<evalkit::SensoryTrace> parsed;
  for (const auto& p : traces) parsed.push_back(evalkit::parse_trace_csv(nn::read_file_bytes(p)));
  const fs::path dir = out / "analysis";
  fs::create_directories(dir);
  std::string kl = "trace,steps,kl_to_uniform\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const std::string stem = "trace" + std::to_string(i);
    const auto heat = evalkit::sensory_heatmap(parsed[i]);
    const auto hist = evalkit::action_histogram(parsed[i]);
    nn::write_file_atomic(dir / (stem + "_heatmap.pgm"), evalkit::heatmap_pgm(heat));
    nn::write_file_atomic(dir / (stem + "_histogram.csv"), evalkit::histogram_csv(hist));
    const double v = evalkit::sensory_kl(std::span<const std::uint64_t>(hist));
    kl += evalkit::csv_field(traces[i].string()) + "," + std::to_string(parsed[i].steps()) + "," + evalkit::csv_number(v) + "\n";
    log << traces[i].string() << ": KL to uniform " << v << "\n";
  }
  nn::write_file_atomic(dir / "kl.csv", kl);
  return 0;
}

enum class AblationAxis { reward_sign, joint, pvm, balance };

inline AblationAxis parse_axis(const std::string& s) {
  if (s == "reward_sign") return AblationAxis::reward_sign;
  if (s == "joint") return AblationAxis::joint;
  if (s == "pvm") return AblationAxis::pvm;
  if (s == "balance") return AblationAxis::balance;
  throw std::invalid_argument("unknown ablation axis '" + s + "' (expected reward_sign, joint, pvm or balance)");
}

struct AblationRow {
  std::string model;
  agent::RewardSign reward_sign;
  agent::JointLearning joint;
  pvm::PvmKind pvm;
  bool balance;
  std::optional<AblationAxis> changed;  // axis this row changes relative to the previous one
};

/// Incremental ablation ladder: each row flips one flag relative to the
/// row above it.
inline std::vector<AblationRow> ablation_rows() {
  using agent::JointLearning;
  using agent::RewardSign;
  using pvm::PvmKind;
  return {
      {"base", RewardSign::off, JointLearning::separate, PvmKind::off, false, std::nullopt},
      {"+positive reward", RewardSign::positive, JointLearning::separate, PvmKind::off, false, AblationAxis::reward_sign},
      {"+joint learning", RewardSign::positive, JointLearning::shared, PvmKind::off, false, AblationAxis::joint},
      {"positive->negative", RewardSign::negative, JointLearning::shared, PvmKind::off, false, AblationAxis::reward_sign},
      {"+pvm", RewardSign::negative, JointLearning::shared, PvmKind::stitch, false, AblationAxis::pvm},
      {"+reward balance", RewardSign::negative, JointLearning::shared, PvmKind::stitch, true, AblationAxis::balance},
  };
}

/// Rows of the ladder that are the base or change one of the selected axes.
inline std::vector<AblationRow> select_ablation_rows(const std::vector<AblationAxis>& axes) {
  std::vector<AblationRow> out;
  for (const auto& r : ablation_rows()) {
    bool keep = !r.changed;
    for (auto a : axes) keep = keep || (r.changed && *r.changed == a);
    if (keep) out.push_back(r);
  }
  return out;
}

inline RunConfig apply_row(RunConfig cfg, const AblationRow& r) {
  cfg.agent.reward_sign = r.reward_sign;
  cfg.agent.joint = r.joint;
  cfg.pvm = r.pvm;
  cfg.agent.balance = r.balance;
  cfg.agent.policy = agent::PolicyKind::dual;
  cfg.agent.sensory = agent::SensorySource::learned;
  return cfg;
}

inline std::string row_slug(std::size_t i) { return "row" + std::to_string(i); }

inline int cmd_ablate(const RunConfig& cfg, const std::vector<AblationAxis>& axes, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = select_ablation_rows(axes);
  const fs::path dir = fs::path(cfg.out) / "ablate";
  fs::create_directories(dir);
  std::string table = "row,model,r_sugarl,joint_learning,pvm,reward_balance,seeds,mean_final_return,iqm_final_return\n";
  RunManifest m;
  m.command = "ablate";
  m.config_hash = config_hash(cfg);
  m.seed = cfg.seeds.front();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row_cfg = apply_row(cfg, rows[i]);
    std::vector<double> finals;
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path run_dir = dir / row_slug(i) / seed_dir_name(seed);
      const auto out = train_one(row_cfg, seed, run_dir, nullptr);
      finals.push_back(agent::final_return(out.result.episodes));
      m.artifacts.push_back(fs::relative(run_dir / "manifest.txt", dir));
      log << rows[i].model << " seed " << seed << ": final-10 return " << finals.back() << "\n";
    }
    double mean = 0.0;
    for (double f : finals) mean += f;
    mean /= static_cast<double>(finals.size());
    const auto& r = rows[i];
    table += std::to_string(i) + "," + evalkit::csv_field(r.model) + "," + agent::to_string(r.reward_sign) + "," +
             (r.joint == agent::JointLearning::shared ? "on" : "off") + "," + (r.pvm == pvm::PvmKind::off ? "off" : "on") +
             "," + (r.balance ? "on" : "off") + "," + std::to_string(finals.size()) + "," + evalkit::csv_number(mean) +
             "," + (finals.size() >= 4 ? evalkit::csv_number(evalkit::iqm(finals)) : "") + "\n";
  }
  nn::write_file_atomic(dir / "ablation.csv", table);
  m.artifacts.insert(m.artifacts.begin(), "ablation.csv");
  m.wall_seconds = seconds_since(t0);
  m.finished_utc = utc_now();
  write_manifest(dir / "manifest.txt", m);
  log << "ablation table -> " << (dir / "ablation.csv").string() << "\n";
  return 0;
}

/// Finite-difference check of the full encoder + two heads in double
/// precision on a small input. Exit status 0 iff within tolerance.
inline int cmd_gradcheck(std::uint64_t seed, std::ostream& log) {
  nn::EncoderSpec spec = nn::EncoderSpec::dqn(2, 36);
  spec.hidden = 16;
  nn::HeadedNet<double> net(spec, {3, 5});
  std::mt19937_64 rng(seed);
  net.init(rng);
  nn::GradCheckOptions opt;
  opt.seed = seed;
  const auto report = nn::grad_check(net, 2, opt);
  log << "gradcheck: " << report.checked << " parameters, max relative error " << report.max_rel_error << " (tolerance "
      << report.tolerance << ", worst " << report.worst_param << ", " << report.kink_skips << " kink crossings skipped) " << (report.passed ? "PASS" : "FAIL") << "\n";
  return report.passed ? 0 : 1;
}

/// Times acting and one training update at the configured input size.
inline int cmd_bench(const RunConfig& cfg, std::ostream& log) {
  auto agent = agent_for(cfg, cfg.seeds.front());
  const int len = agent.input_length();
  std::mt19937_64 rng(cfg.seeds.front());
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  agent::Batch b;
  b.size = cfg.agent.batch;
  b.input_length = len;
  b.obs.resize(static_cast<std::size_t>(b.size) * len);
  b.next_obs.resize(b.obs.size());
  for (auto& v : b.obs) v = u(rng);
  for (auto& v : b.next_obs) v = u(rng);
  for (int n = 0; n < b.size; ++n) {
    b.motor.push_back(n % agent.shape().n_motor);
    b.sensory.push_back(n % agent.shape().n_sensory);
    b.reward.push_back(0.0f);
    b.done.push_back(0);
  }
  std::vector<float> one(b.obs.begin(), b.obs.begin() + len);
  const int reps = 20;
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps * 10; ++i) agent.select_actions(one, 0.0);
  const double act_ms = seconds_since(t0) * 1e3 / (reps * 10);
  t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) {
    std::vector<double> p(b.size, 1.0);
    if (agent.has_reward_module()) p = agent.train_reward_module(b).probability;
    agent.td_update(b, agent.sensorimotor_rewards(p));
  }
  const double update_ms = seconds_since(t0) * 1e3 / reps;
  log << "bench: input " << cfg.agent.input_size << "x" << cfg.agent.input_size << "x" << agent.shape().in_channels
      << ", " << agent.online().parameter_count() << " Q parameters; act " << act_ms << " ms, update (batch "
      << b.size << ") " << update_ms << " ms\n";
  return 0;
}

}  // namespace sugarl::cli
