// Command-line entry point: train / eval / analyze / ablate / gradcheck / bench.

#include "sugarl/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string preset;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "run config (INI)");
  cmd->add_option("--seed", o.seeds, "seed; repeat for several runs")->take_all();
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--preset", o.preset, "schedule preset")->check(CLI::IsMember({"desk", "paper"}));
}

sugarl::cli::RunConfig load(const CommonOptions& o) {
  using namespace sugarl::cli;
  const std::string* preset = o.preset.empty() ? nullptr : &o.preset;
  RunConfig cfg = o.config.empty() ? parse_config_text("", preset) : parse_config(o.config, preset);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.out.empty()) cfg.out = o.out;
  validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sugarl::cli;
  CLI::App app{"Active-vision RL workbench: joint motor and sensory policy learning"};
  app.require_subcommand(1);

  CommonOptions train_o, eval_o, ablate_o, bench_o;
  auto* train = app.add_subcommand("train", "train agents, one run per seed");
  add_common(train, train_o);

  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  add_common(eval, eval_o);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "online checkpoint file or checkpoint directory")->required();

  auto* analyze = app.add_subcommand("analyze", "heatmaps and KL-to-uniform from sensory traces");
  std::vector<std::string> traces;
  std::string analyze_out = "runs";
  analyze->add_option("traces", traces, "trace CSV files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", analyze_out, "output directory");

  auto* ablate = app.add_subcommand("ablate", "incremental ablation ladder over the selected axes");
  add_common(ablate, ablate_o);
  std::vector<std::string> axes{"reward_sign", "joint", "pvm", "balance"};
  ablate->add_option("--axis", axes, "reward_sign, joint, pvm, balance (repeatable)")->take_all();

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check of the network");
  std::uint64_t gc_seed = 0;
  gradcheck->add_option("--seed", gc_seed, "parameter seed");

  auto* bench = app.add_subcommand("bench", "time acting and training updates");
  add_common(bench, bench_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(load(train_o), std::cout);
    if (*eval) return cmd_eval(load(eval_o), checkpoint, std::cout);
    if (*analyze) {
      std::vector<std::filesystem::path> paths(traces.begin(), traces.end());
      return cmd_analyze(paths, analyze_out, std::cout);
    }
    if (*ablate) {
      std::vector<AblationAxis> parsed;
      for (const auto& a : axes) parsed.push_back(parse_axis(a));
      return cmd_ablate(load(ablate_o), parsed, std::cout);
    }
    if (*gradcheck) return cmd_gradcheck(gc_seed, std::cout);
    if (*bench) return cmd_bench(load(bench_o), std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
