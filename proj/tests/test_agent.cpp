#include "checks.hpp"
#include "oracles.hpp"
#include "sugarl/agent/train.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <catch_amalgamated.hpp>

#include <cstring>

using namespace sugarl;
using namespace sugarl::agent;
using Catch::Approx;

namespace {

AgentShape tiny_shape() { return AgentShape{3, 16, 1, 2, true}; }

std::vector<std::uint8_t> param_bytes(nn::HeadedNet<float>& net) {
  std::vector<std::uint8_t> out;
  for (const auto& p : net.params()) {
    const auto* b = reinterpret_cast<const std::uint8_t*>(p.value.data());
    out.insert(out.end(), b, b + p.value.size_bytes());
  }
  return out;
}

TrainSetup tiny_setup(std::uint64_t seed) {
  TrainSetup s;
  s.env.fovea = 20;
  s.env.max_episode_length = 60;
  s.pvm = pvm::PvmKind::stitch;
  s.agent.input_size = 36;
  s.agent.learn_start = 100;
  s.agent.batch = 4;
  s.agent.buffer = 1000;
  s.agent.min_eps_step = 200;
  s.agent.target_update = 50;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("sensorimotor reward", "[agent]") {
  CHECK(sensorimotor_reward(1.0, RewardSign::negative) == 0.0);
  CHECK(sensorimotor_reward(0.0, RewardSign::negative) == -1.0);
  CHECK(sensorimotor_reward(1.0 / 6.0, RewardSign::negative) == Approx(-5.0 / 6.0).margin(1e-12));
  CHECK(sensorimotor_reward(0.3, RewardSign::positive) == 0.3);
  CHECK(sensorimotor_reward(0.3, RewardSign::off) == 0.0);

  SECTION("bounded on random logits") {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> normal(0.0f, 5.0f);
    for (int t = 0; t < 10000; ++t) {
      const int n = std::uniform_int_distribution<int>(2, 18)(rng);
      std::vector<float> logits(n);
      for (auto& v : logits) v = normal(rng);
      const int label = std::uniform_int_distribution<int>(0, n - 1)(rng);
      const double r = sensorimotor_reward(nn::softmax_cross_entropy<float>(logits, label).probability,
                                           RewardSign::negative);
      REQUIRE(r >= -1.0);
      REQUIRE(r <= 0.0);
    }
  }
  SECTION("uniform predictor over six actions") {
    const std::vector<float> logits(6, 0.25f);
    const double p = nn::softmax_cross_entropy<float>(logits, 2).probability;
    CHECK(sensorimotor_reward(p, RewardSign::negative) == Approx(-0.8333333).margin(1e-6));
  }
}

TEST_CASE("combine_reward", "[agent]") {
  CHECK(combine_reward(1.0, -0.2, 0.5, true) == 1.0 + 0.5 * -0.2);
  CHECK(combine_reward(1.0, -0.2, 0.5, true) == Approx(0.9));
  CHECK(combine_reward(0.7, 0.0, 123.0, true) == 0.7);
  CHECK(combine_reward(0.0, -1.0, 0.25, true) == -0.25);
  CHECK(combine_reward(1.0, -0.2, 0.5, false) == 1.0 - 0.2);
}

TEST_CASE("estimate_beta", "[agent]") {
  const std::vector<double> r{10, 20}, l{100, 100};
  CHECK(estimate_beta(r, l) == Approx(0.15).margin(1e-15));
  const std::vector<double> z{0}, one{37};
  CHECK(estimate_beta(z, one) == 0.0);
  CHECK(estimate_beta_max(10.0, 210.0) == 10.0 / 210.0);
  const std::vector<double> bad{0};
  CHECK_THROWS_AS(estimate_beta(one, bad), std::invalid_argument);
  CHECK_THROWS_AS(estimate_beta(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);

  SECTION("random trajectories against a direct mean") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> ret(3.0, 10.0);
    std::uniform_int_distribution<int> len(1, 500);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> rs, ls;
      long double direct = 0.0L;
      const int n = 1 + t % 20;
      for (int i = 0; i < n; ++i) {
        rs.push_back(ret(rng));
        ls.push_back(len(rng));
        direct += static_cast<long double>(rs.back()) / ls.back();
      }
      REQUIRE(estimate_beta(rs, ls) == Approx(static_cast<double>(direct / n)).margin(1e-12));
    }
  }
  SECTION("catch bound") {
    TrainSetup s;
    CHECK(resolve_beta(s) == Approx(10.0 / 210.0).margin(1e-15));
    s.agent.beta = 0.3;
    CHECK(resolve_beta(s) == 0.3);
  }
  SECTION("oracle rollouts when no closed form exists") {
    TrainSetup s;
    s.env.name = "chase";
    s.beta_reference_episodes = 2;
    const double b = resolve_beta(s);
    CHECK(b > 0.0);
    CHECK(b == oracle_beta(s.env, 2, s.seed));
  }
}

TEST_CASE("select_actions", "[agent]") {
  SugarlAgent a(tiny_shape(), SugarlConfig{}, 1);
  const std::vector<float> obs{0.3f, 0.1f, 0.7f, 0.2f};
  const auto q = a.q_values(obs);
  const auto [m, s] = a.select_actions(obs, 0.0);
  CHECK(m == argmax(q[0]));
  CHECK(s == argmax(q[1]));

  SECTION("ties go to the lowest index") {
    const std::vector<float> v{1.0f, 3.0f, 3.0f, 0.0f};
    CHECK(argmax(v) == 1);
  }
  SECTION("epsilon = 1 is uniform per head") {
    std::vector<int> motor(3), sensory(16);
    const int n = 16000;
    for (int i = 0; i < n; ++i) {
      const auto [mm, ss] = a.select_actions(obs, 1.0);
      ++motor[mm];
      ++sensory[ss];
    }
    auto chi2_p = [](const std::vector<int>& counts, int total) {
      const double e = static_cast<double>(total) / counts.size();
      double x = 0.0;
      for (int c : counts) x += (c - e) * (c - e) / e;
      return boost::math::gamma_q((counts.size() - 1) / 2.0, x / 2.0);
    };
    CHECK(chi2_p(motor, n) > 0.001);
    CHECK(chi2_p(sensory, n) > 0.001);
  }
  SECTION("agents with a baseline sensory source leave the sensory action to the caller") {
    SugarlConfig c;
    c.sensory = SensorySource::random_view;
    SugarlAgent b(tiny_shape(), c, 1);
    CHECK(b.head_sizes() == std::vector<int>{3});
    CHECK_FALSE(b.has_reward_module());
    CHECK(b.select_actions(obs, 0.0).second == -1);
  }
}

TEST_CASE("single policy over the product action space", "[agent]") {
  SugarlConfig c;
  c.policy = PolicyKind::single;
  SugarlAgent a(AgentShape{3, 16, 1, 2, true}, c, 2);
  CHECK(a.head_sizes() == std::vector<int>{48});
  CHECK_FALSE(a.has_reward_module());
  CHECK(a.config().reward_sign == RewardSign::off);
  CHECK(a.decode_joint_action(17) == std::pair{1, 1});
  for (int k = 0; k < 48; ++k) {
    const auto [m, s] = a.decode_joint_action(k);
    REQUIRE(a.encode_joint_action(m, s) == k);
  }
  const std::vector<float> obs{0.5f, 0.9f, 0.1f, 0.4f};
  const auto q = a.q_values(obs);
  const auto [m, s] = a.select_actions(obs, 0.0);
  // Exhaustive search over all pairs.
  int best = 0;
  for (int k = 1; k < 48; ++k)
    if (q[0][k] > q[0][best]) best = k;
  CHECK(a.encode_joint_action(m, s) == best);
}

TEST_CASE("argmax is invariant to adding a constant", "[agent][property]") {
  std::mt19937_64 rng(8);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (int t = 0; t < 1000; ++t) {
    std::vector<float> v(1 + t % 20);
    for (auto& x : v) x = normal(rng);
    const int k = argmax(v);
    for (auto& x : v) x += 0.5f;
    REQUIRE(argmax(v) == k);
  }
}

TEST_CASE("compute_targets examples", "[agent]") {
  SugarlConfig c;
  c.beta = 0.5;
  SugarlAgent a(tiny_shape(), c, 3);
  std::mt19937_64 rng(3);
  auto b = checks::random_batch(tiny_shape(), 1, rng);

  SECTION("terminal transition keeps only the combined reward") {
    b.done[0] = 1;
    b.reward[0] = 1.0f;
    const std::vector<double> r{-0.2};
    CHECK(a.compute_targets(b, r).value[0] == Approx(0.9).margin(1e-7));
  }
  SECTION("1.485 from maxes (1.0, 0.5)") {
    // Zero the target heads so the maxes are exactly their biases.
    for (auto& p : a.target().params()) {
      if (p.name.rfind("head", 0) == 0) std::fill(p.value.begin(), p.value.end(), 0.0f);
      if (p.name == "head0.bias") std::fill(p.value.begin(), p.value.end(), 1.0f);
      if (p.name == "head1.bias") std::fill(p.value.begin(), p.value.end(), 0.5f);
    }
    b.done[0] = 0;
    b.reward[0] = 0.0f;
    const std::vector<double> r{0.0};
    CHECK(a.compute_targets(b, r).value[0] == Approx(1.485).margin(1e-6));
  }
  SECTION("separate mode splits the rewards") {
    SugarlConfig s = c;
    s.joint = JointLearning::separate;
    SugarlAgent sep(tiny_shape(), s, 3);
    b.done[0] = 1;
    b.reward[0] = 2.0f;
    const std::vector<double> r{-0.4};
    const auto t = sep.compute_targets(b, r);
    CHECK_FALSE(t.shared);
    CHECK(t.value[0] == 2.0);
    CHECK(t.sensory[0] == Approx(-0.2));
  }
}

TEST_CASE("compute_targets matches the straight-line target", "[agent][property]") {
  CHECK(checks::max_target_discrepancy(2000, 5) < 1e-6);
}

TEST_CASE("td_update at the fixed point has zero loss and gradient", "[agent]") {
  SugarlAgent a(tiny_shape(), SugarlConfig{}, 4);
  std::mt19937_64 rng(4);
  auto b = checks::random_batch(tiny_shape(), 6, rng);
  Targets t;
  t.shared = true;
  for (int n = 0; n < b.size; ++n) {
    const auto q = a.q_values(std::span<const float>(b.obs.data() + n * b.input_length, b.input_length));
    t.value.push_back(static_cast<double>(q[0][b.motor[n]]) + q[1][b.sensory[n]]);
  }
  CHECK(a.td_loss_and_grad(b, t) == Approx(0.0).margin(1e-10));
  for (const auto& p : a.online().params())
    for (float g : p.grad) REQUIRE(std::abs(g) < 1e-6f);
  b.size = 0;
  CHECK_THROWS_AS(a.td_update(b, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("dual-head TD loss gradient agrees with central differences", "[agent][gradcheck]") {
  for (bool shared : {true, false}) {
    const auto report = oracles::td_grad_check(shared, shared ? 31 : 32);
    INFO("shared " << shared << " worst " << report.worst_param << " err " << report.max_rel_error);
    CHECK(report.checked >= 100);
    CHECK(report.max_rel_error < 1e-3);
  }
}

TEST_CASE("sync_target", "[agent]") {
  SugarlAgent a(tiny_shape(), SugarlConfig{}, 5);
  std::mt19937_64 rng(5);
  const auto b = checks::random_batch(tiny_shape(), 8, rng);
  a.td_update(b);
  CHECK(param_bytes(a.online()) != param_bytes(a.target()));
  a.sync_target();
  CHECK(param_bytes(a.online()) == param_bytes(a.target()));
  const auto before = nn::parameter_checksum(a.target());
  a.sync_target();
  CHECK(nn::parameter_checksum(a.target()) == before);
  a.td_update(b);
  CHECK(nn::parameter_checksum(a.target()) == before);
  CHECK(param_bytes(a.online()) != param_bytes(a.target()));
}

TEST_CASE("reward module and Q network updates touch only their own parameters", "[agent]") {
  SugarlAgent a(tiny_shape(), SugarlConfig{}, 6);
  std::mt19937_64 rng(6);
  const auto b = checks::random_batch(tiny_shape(), 8, rng);
  const auto q0 = nn::parameter_checksum(a.online());
  const auto u0 = nn::parameter_checksum(a.reward_net());
  a.train_reward_module(b);
  CHECK(nn::parameter_checksum(a.online()) == q0);
  CHECK(nn::parameter_checksum(a.reward_net()) != u0);
  const auto u1 = nn::parameter_checksum(a.reward_net());
  a.td_update(b);
  CHECK(nn::parameter_checksum(a.reward_net()) == u1);
  CHECK(nn::parameter_checksum(a.online()) != q0);
  agent::Batch empty;
  CHECK_THROWS_AS(a.train_reward_module(empty), std::invalid_argument);
}

TEST_CASE("replay sampling is uniform", "[agent]") {
  ReplayBuffer rb(50, 4, 2);
  FrameHistory h(2);
  const std::vector<std::uint8_t> f{1, 2, 3, 4};
  h.push(rb.add_frame(f));
  for (int i = 0; i < 50; ++i) {
    Transition t;
    t.frames[0] = h[0];
    t.frames[1] = h[1];
    const auto id = rb.add_frame(f);
    t.frames[2] = id;
    t.motor = i % 3;
    rb.add(t);
    h.push(id);
  }
  REQUIRE(rb.size() == 50);
  std::mt19937_64 rng(7);
  std::vector<int> counts(50);
  const int draws = 50000;
  for (int i = 0; i < draws / 100; ++i)
    for (auto idx : rb.sample(100, rng).indices) ++counts[idx];
  const double e = static_cast<double>(draws) / 50;
  double x = 0.0;
  for (int c : counts) x += (c - e) * (c - e) / e;
  CHECK(boost::math::gamma_q(49 / 2.0, x / 2.0) > 0.01);
}

TEST_CASE("replay frame stacking and eviction", "[agent]") {
  ReplayBuffer rb(3, 2, 2);
  const std::vector<std::uint8_t> a{255, 0}, b{0, 255};
  const auto ia = rb.add_frame(a);
  const auto ib = rb.add_frame(b);
  Transition t;
  t.frames[0] = kZeroFrame;
  t.frames[1] = ia;
  t.frames[2] = ib;
  rb.add(t);
  std::vector<float> out(4);
  rb.expand(t.frames.data(), out.data());
  CHECK(out == std::vector<float>{0, 0, 1, 0});
  rb.expand(t.frames.data() + 1, out.data());
  CHECK(out == std::vector<float>{1, 0, 0, 1});
  for (int i = 0; i < 5; ++i) rb.add(t);
  CHECK(rb.size() == 3);
  CHECK_THROWS_AS(rb.add_frame(std::vector<std::uint8_t>{1}), std::invalid_argument);
  CHECK_THROWS_AS(ReplayBuffer(0, 2, 2), std::invalid_argument);
}

TEST_CASE("tabular two-state problem reaches the value-iteration fixed point", "[agent]") {
  const auto r = checks::tabular_convergence(0.5, 10000, 1e-3, 9);
  INFO("updates " << r.updates << " error " << r.max_error);
  CHECK(r.max_error < 1e-3);
  CHECK(r.updates <= 10000);
}

TEST_CASE("value iteration oracle", "[agent]") {
  // Closed form for gamma = 0.5: from state 1 taking a=0 gives 1 then
  // state 0; from state 0 taking a=1 gives 0.5 then state 1.
  const auto q = oracles::two_state_q(0.5);
  const double v1 = (1.0 + 0.5 * 0.5) / (1.0 - 0.25), v0 = 0.5 + 0.5 * v1;
  CHECK(q[1][0] == Approx(v1).margin(1e-12));
  CHECK(q[0][1] == Approx(v0).margin(1e-12));
}

TEST_CASE("inverse dynamics learns an action-revealing observation", "[agent]") {
  const auto r = checks::identifiability(6, 2000, 0.95, 10);
  INFO("updates " << r.updates_to_threshold << " acc " << r.final_accuracy);
  CHECK(r.updates_to_threshold > 0);
  CHECK(r.updates_to_threshold <= 2000);
}

TEST_CASE("shuffled labels leave the loss at the entropy floor", "[agent]") {
  const double loss = checks::shuffled_label_loss(6, 600, 200, 11);
  CHECK(std::abs(loss - std::log(6.0)) < 0.05 * std::log(6.0));
}

TEST_CASE("repeating one example never increases its loss", "[agent]") {
  auto a = checks::reward_module_agent(6, 36, 12);
  std::mt19937_64 rng(12);
  const auto b = oracles::action_revealing_batch(1, 6, 36, rng);
  double prev = a.train_reward_module(b).loss;
  for (int i = 0; i < 100; ++i) {
    const double l = a.train_reward_module(b).loss;
    REQUIRE(l <= prev + 1e-6);
    prev = l;
  }
}

TEST_CASE("training loop warmup and counters", "[agent][train]") {
  auto s = tiny_setup(1);
  Trainer t(s);
  auto r = t.run(100);
  CHECK(r.td_updates == 0);
  CHECK(r.reward_updates == 0);
  CHECK(r.target_syncs == 2);
  CHECK(r.beta == Approx(10.0 / 60.0));  // bound over the 60-step truncation

  Trainer t2(s);
  r = t2.run(300);
  CHECK(r.td_updates == 50);      // steps 104..300 divisible by 4
  CHECK(r.reward_updates == 50);
  CHECK(r.target_syncs == 6);
  CHECK(r.episodes.size() == 5);  // 60-step truncation
  for (const auto& e : r.episodes) CHECK(e.return_combined <= e.return_env + 1e-12);
}

TEST_CASE("training is deterministic for a fixed seed", "[agent][train]") {
  auto s = tiny_setup(2);
  Trainer a(s), b(s);
  const auto ra = a.run(400), rb = b.run(400);
  CHECK(training_log_csv(ra.episodes) == training_log_csv(rb.episodes));
  CHECK(param_bytes(a.agent().online()) == param_bytes(b.agent().online()));
  CHECK(param_bytes(a.agent().reward_net()) == param_bytes(b.agent().reward_net()));
  Trainer c(tiny_setup(3));
  CHECK(training_log_csv(c.run(400).episodes) != training_log_csv(ra.episodes));
}

TEST_CASE("baseline sensory sources need absolute control", "[agent][train]") {
  auto s = tiny_setup(1);
  s.agent.sensory = SensorySource::raster_scan;
  s.env.control = envkit::ControlMode::relative;
  CHECK_THROWS_AS(Trainer(s), std::invalid_argument);
}

TEST_CASE("final_return averages the last ten episodes", "[agent]") {
  std::vector<EpisodeRecord> eps;
  for (int i = 0; i < 15; ++i) eps.push_back({0, i, static_cast<double>(i)});
  CHECK(final_return(eps) == Approx(9.5));
  eps.resize(3);
  CHECK(final_return(eps) == Approx(1.0));
  CHECK_THROWS_AS(final_return({}), std::invalid_argument);
}
