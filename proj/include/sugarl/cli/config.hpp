#pragma once

#include "sugarl/agent/config.hpp"
#include "sugarl/agent/train.hpp"
#include "sugarl/envkit/active_env.hpp"
#include "sugarl/evalkit/eval.hpp"
#include "sugarl/nn/net.hpp"
#include "sugarl/pvm/pvm.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sugarl::cli {

/// Error raised for a specific configuration key; the message starts with
/// the dotted key path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Preset { desk, paper };

inline Preset parse_preset(const std::string& s) {
  if (s == "desk") return Preset::desk;
  if (s == "paper") return Preset::paper;
  throw std::invalid_argument("expected desk or paper, got '" + s + "'");
}
inline std::string to_string(Preset p) { return p == Preset::desk ? "desk" : "paper"; }

struct EvalBlock {
  int episodes = 10;
  std::vector<std::uint64_t> seeds{100};
};

struct RunConfig {
  Preset preset = Preset::desk;
  std::vector<std::uint64_t> seeds{0};
  std::string out = "runs";
  envkit::EnvConfig env;
  pvm::PvmKind pvm = pvm::PvmKind::stitch;
  int pvm_steps = 3;
  agent::SugarlConfig agent;
  EvalBlock eval;

  agent::TrainSetup train_setup(std::uint64_t seed) const {
    agent::TrainSetup s;
    s.env = env;
    s.env.seed = seed;
    s.pvm = pvm;
    s.pvm_steps = pvm_steps;
    s.agent = agent;
    s.seed = seed;
    return s;
  }

  evalkit::EvalSetup eval_setup() const {
    evalkit::EvalSetup s;
    s.env = env;
    s.pvm = pvm;
    s.pvm_steps = pvm_steps;
    s.input_size = agent.input_size;
    s.episodes = eval.episodes;
    s.seeds = eval.seeds;
    return s;
  }
};

/// Schedule values that differ between presets. Desk scale suits the short
/// toy episodes; the `paper` preset carries the original Atari schedule.
inline void apply_preset(RunConfig& c, Preset p) {
  c.preset = p;
  if (p == Preset::desk) {
    c.agent.learn_start = 5'000;
    c.agent.min_eps_step = 20'000;
    c.agent.total_steps = 200'000;
  } else {
    c.agent.learn_start = 80'000;
    c.agent.min_eps_step = 100'000;
    c.agent.total_steps = 1'000'000;
  }
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T v{};
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  return v;
}

inline double parse_real(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  if (used != t.size() || !std::isfinite(v)) throw ConfigError(key, "expected a number, got '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "on" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "off" || t == "0" || t == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_integer<std::uint64_t>(key, cell));
  if (out.empty()) throw ConfigError(key, "expected at least one seed");
  return out;
}

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  return s;
}

/// Wraps an enum parser so its error carries the key path.
template <typename F>
auto parse_enum(const std::string& key, const std::string& text, F&& f) {
  try {
    return f(trim(text));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, Field>& fields() {
  using agent::SugarlConfig;
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    auto integer = [&t](const std::string& key, auto member) {
      t[key] = {[key, member](RunConfig& c, const std::string& v) {
                  auto& ref = member(c);
                  ref = parse_integer<std::remove_reference_t<decltype(ref)>>(key, v);
                },
                [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
    };
    auto real = [&t](const std::string& key, auto member) {
      t[key] = {[key, member](RunConfig& c, const std::string& v) { member(c) = parse_real(key, v); },
                [member](const RunConfig& c) { return format_real(member(const_cast<RunConfig&>(c))); }};
    };
    auto boolean = [&t](const std::string& key, auto member) {
      t[key] = {[key, member](RunConfig& c, const std::string& v) { member(c) = parse_bool(key, v); },
                [member](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
    };

    t["run.preset"] = {[](RunConfig& c, const std::string& v) { c.preset = parse_enum("run.preset", v, parse_preset); },
                       [](const RunConfig& c) { return to_string(c.preset); }};
    t["run.seeds"] = {[](RunConfig& c, const std::string& v) { c.seeds = parse_seed_list("run.seeds", v); },
                      [](const RunConfig& c) { return join_seeds(c.seeds); }};
    t["run.out"] = {[](RunConfig& c, const std::string& v) { c.out = trim(v); },
                    [](const RunConfig& c) { return c.out; }};

    t["env.name"] = {[](RunConfig& c, const std::string& v) { c.env.name = trim(v); },
                     [](const RunConfig& c) { return c.env.name; }};
    integer("env.frame_size", [](RunConfig& c) -> int& { return c.env.frame_size; });
    integer("env.fovea", [](RunConfig& c) -> int& { return c.env.fovea; });
    integer("env.foveal_res", [](RunConfig& c) -> int& { return c.env.foveal_res; });
    boolean("env.peripheral", [](RunConfig& c) -> bool& { return c.env.peripheral; });
    integer("env.peripheral_res", [](RunConfig& c) -> int& { return c.env.peripheral_res; });
    t["env.control"] = {[](RunConfig& c, const std::string& v) {
                          c.env.control = parse_enum("env.control", v, envkit::parse_control_mode);
                        },
                        [](const RunConfig& c) { return envkit::to_string(c.env.control); }};
    integer("env.max_episode_length", [](RunConfig& c) -> int& { return c.env.max_episode_length; });
    integer("env.action_repeat", [](RunConfig& c) -> int& { return c.env.action_repeat; });
    integer("env.frame_stack", [](RunConfig& c) -> int& { return c.env.frame_stack; });

    t["pvm.kind"] = {[](RunConfig& c, const std::string& v) { c.pvm = parse_enum("pvm.kind", v, pvm::parse_pvm_kind); },
                     [](const RunConfig& c) { return pvm::to_string(c.pvm); }};
    integer("pvm.steps", [](RunConfig& c) -> int& { return c.pvm_steps; });

    real("agent.gamma", [](RunConfig& c) -> double& { return c.agent.gamma; });
    real("agent.eps_start", [](RunConfig& c) -> double& { return c.agent.eps_start; });
    real("agent.eps_end", [](RunConfig& c) -> double& { return c.agent.eps_end; });
    integer("agent.min_eps_step", [](RunConfig& c) -> long& { return c.agent.min_eps_step; });
    integer("agent.learn_start", [](RunConfig& c) -> long& { return c.agent.learn_start; });
    integer("agent.train_freq", [](RunConfig& c) -> int& { return c.agent.train_freq; });
    integer("agent.target_update", [](RunConfig& c) -> int& { return c.agent.target_update; });
    integer("agent.batch", [](RunConfig& c) -> int& { return c.agent.batch; });
    integer("agent.reward_train_freq", [](RunConfig& c) -> int& { return c.agent.reward_train_freq; });
    integer("agent.buffer", [](RunConfig& c) -> std::size_t& { return c.agent.buffer; });
    real("agent.lr", [](RunConfig& c) -> double& { return c.agent.lr; });
    real("agent.reward_lr", [](RunConfig& c) -> double& { return c.agent.reward_lr; });
    integer("agent.total_steps", [](RunConfig& c) -> long& { return c.agent.total_steps; });
    integer("agent.input_size", [](RunConfig& c) -> int& { return c.agent.input_size; });
    t["agent.reward_sign"] = {[](RunConfig& c, const std::string& v) {
                                c.agent.reward_sign = parse_enum("agent.reward_sign", v, agent::parse_reward_sign);
                              },
                              [](const RunConfig& c) { return agent::to_string(c.agent.reward_sign); }};
    t["agent.joint"] = {[](RunConfig& c, const std::string& v) { c.agent.joint = parse_enum("agent.joint", v, agent::parse_joint); },
                        [](const RunConfig& c) { return agent::to_string(c.agent.joint); }};
    boolean("agent.balance", [](RunConfig& c) -> bool& { return c.agent.balance; });
    t["agent.beta"] = {[](RunConfig& c, const std::string& v) {
                         c.agent.beta = trim(v) == "auto" ? std::nan("") : parse_real("agent.beta", v);
                       },
                       [](const RunConfig& c) { return std::isnan(c.agent.beta) ? std::string("auto") : format_real(c.agent.beta); }};
    t["agent.policy"] = {[](RunConfig& c, const std::string& v) { c.agent.policy = parse_enum("agent.policy", v, agent::parse_policy); },
                         [](const RunConfig& c) { return agent::to_string(c.agent.policy); }};
    t["agent.sensory"] = {[](RunConfig& c, const std::string& v) {
                            c.agent.sensory = parse_enum("agent.sensory", v, agent::parse_sensory);
                          },
                          [](const RunConfig& c) { return agent::to_string(c.agent.sensory); }};
    integer("agent.fixed_anchor", [](RunConfig& c) -> int& { return c.agent.fixed_anchor; });

    integer("eval.episodes", [](RunConfig& c) -> int& { return c.eval.episodes; });
    t["eval.seeds"] = {[](RunConfig& c, const std::string& v) { c.eval.seeds = parse_seed_list("eval.seeds", v); },
                       [](const RunConfig& c) { return join_seeds(c.eval.seeds); }};
    return t;
  }();
  return table;
}

}  // namespace detail

/// Every constraint, reported against the key that violates it.
inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
  };
  if (c.seeds.empty()) throw ConfigError("run.seeds", "expected at least one seed");
  require(!c.out.empty(), "run.out", "must not be empty");
  bool known = false;
  for (const auto& n : envkit::toy_env_names()) known = known || n == c.env.name;
  require(known, "env.name", "unknown environment '" + c.env.name + "'");
  require(c.env.frame_size >= 32, "env.frame_size", "must be >= 32");
  require(c.env.fovea >= 1 && c.env.fovea <= c.env.frame_size, "env.fovea",
          "fovea " + std::to_string(c.env.fovea) + " does not fit in a " + std::to_string(c.env.frame_size) + "x" +
              std::to_string(c.env.frame_size) + " frame");
  require(c.env.foveal_res >= 0, "env.foveal_res", "must be >= 0 (0 = native)");
  require(c.env.peripheral_res >= 1, "env.peripheral_res", "must be positive");
  require(c.env.max_episode_length >= 1, "env.max_episode_length", "must be positive");
  require(c.env.action_repeat >= 1, "env.action_repeat", "must be positive");
  require(c.env.frame_stack >= 1 && c.env.frame_stack <= agent::kMaxFrameStack, "env.frame_stack", "must be in [1, 8]");
  require(c.pvm_steps >= 1, "pvm.steps", "must be positive");
  const auto& a = c.agent;
  require(a.gamma > 0.0 && a.gamma < 1.0, "agent.gamma", "must be in (0, 1)");
  require(a.eps_start >= 0.0 && a.eps_start <= 1.0, "agent.eps_start", "must be in [0, 1]");
  require(a.eps_end >= 0.0 && a.eps_end <= a.eps_start, "agent.eps_end", "must be in [0, eps_start]");
  require(a.min_eps_step >= 1, "agent.min_eps_step", "must be positive");
  require(a.learn_start >= 0, "agent.learn_start", "must be >= 0");
  require(a.train_freq >= 1, "agent.train_freq", "must be positive");
  require(a.target_update >= 1, "agent.target_update", "must be positive");
  require(a.batch >= 1, "agent.batch", "must be positive");
  require(a.reward_train_freq >= 1, "agent.reward_train_freq", "must be positive");
  require(a.buffer >= static_cast<std::size_t>(a.batch), "agent.buffer", "must hold at least one batch");
  require(a.lr > 0.0, "agent.lr", "must be positive");
  require(a.reward_lr > 0.0, "agent.reward_lr", "must be positive");
  require(a.total_steps >= 0, "agent.total_steps", "must be >= 0");
  require(a.input_size >= 1, "agent.input_size", "must be positive");
  try {
    nn::EncoderSpec::dqn(1, a.input_size).validate();
  } catch (const std::exception& e) {
    throw ConfigError("agent.input_size", e.what());
  }
  require(std::isnan(a.beta) || a.beta >= 0.0, "agent.beta", "must be auto or >= 0");
  require(a.fixed_anchor >= 0 && a.fixed_anchor < envkit::kAbsoluteActions, "agent.fixed_anchor", "must be in [0, 15]");
  require(a.sensory == agent::SensorySource::learned || c.env.control == envkit::ControlMode::absolute, "agent.sensory",
          "baseline sensory policies need env.control = absolute");
  require(c.eval.episodes >= 1, "eval.episodes", "must be positive");
  if (c.eval.seeds.empty()) throw ConfigError("eval.seeds", "expected at least one seed");
}

/// Parses INI text. Keys absent from the text keep the preset defaults;
/// `preset_override`, when given, replaces run.preset from the text.
inline RunConfig parse_config_text(const std::string& text, const std::string* preset_override = nullptr) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& [section, node] : tree) {
    if (node.empty()) throw ConfigError(section, "key outside of a section");
    for (const auto& [key, value] : node) entries.emplace_back(section + "." + key, value.data());
  }
  const auto& table = detail::fields();
  for (const auto& [key, value] : entries)
    if (!table.count(key)) throw ConfigError(key, "unknown key");

  RunConfig c;
  Preset preset = Preset::desk;
  for (const auto& [key, value] : entries)
    if (key == "run.preset") preset = detail::parse_enum(key, value, parse_preset);
  if (preset_override) preset = detail::parse_enum("run.preset", *preset_override, parse_preset);
  apply_preset(c, preset);
  for (const auto& [key, value] : entries)
    if (key != "run.preset") table.at(key).set(c, value);
  validate(c);
  return c;
}

inline RunConfig parse_config(const std::filesystem::path& path, const std::string* preset_override = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), preset_override);
}

/// Sorted "section.key = value" lines with LF endings; defines the hash.
/// Seeds and the output directory are run bookkeeping and are excluded so
/// that every seed of one configuration shares a hash.
inline std::string canonical_config(const RunConfig& c) {
  std::string out;
  for (const auto& [key, field] : detail::fields()) {
    if (key == "run.seeds" || key == "run.out") continue;
    out += key + " = " + field.get(c) + "\n";
  }
  return out;
}

/// INI rendering of the full config (including seeds and output) that
/// parses back to an identical RunConfig.
inline std::string config_ini(const RunConfig& c) {
  std::string out, section;
  for (const auto& [key, field] : detail::fields()) {
    const auto dot = key.find('.');
    const auto sec = key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + field.get(c) + "\n";
  }
  return out;
}

inline std::uint64_t config_hash_value(const RunConfig& c) { return nn::fnv1a(canonical_config(c)); }

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash_value(c)));
  return buf;
}

}  // namespace sugarl::cli
