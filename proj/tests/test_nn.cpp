#include "sugarl/nn/checkpoint.hpp"
#include "sugarl/nn/gradcheck.hpp"
#include "sugarl/nn/loss.hpp"
#include "sugarl/nn/net.hpp"
#include "sugarl/nn/optim.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

using namespace sugarl::nn;
using Catch::Approx;

namespace {

int stride_oracle(int n, int k, int s) { return (n - k) / s + 1; }

// Conv and dense parameter counts written out from the layer shapes.
std::size_t dqn_param_oracle(int in_channels, int side, std::vector<int> heads) {
  const int s1 = stride_oracle(side, 8, 4), s2 = stride_oracle(s1, 4, 2), s3 = stride_oracle(s2, 3, 1);
  std::size_t n = 0;
  n += 32u * in_channels * 64 + 32;
  n += 64u * 32 * 16 + 64;
  n += 64u * 64 * 9 + 64;
  n += static_cast<std::size_t>(64 * s3 * s3) * 512 + 512;
  for (int h : heads) n += 512u * h + h;
  return n;
}

template <typename T>
std::vector<T> random_input(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(u(rng));
  return v;
}

}  // namespace

TEST_CASE("stride arithmetic of the standard encoder", "[diffnet]") {
  const auto spec = EncoderSpec::dqn(4, 84);
  const auto sizes = spec.spatial_sizes();
  REQUIRE(sizes == std::vector<int>{stride_oracle(84, 8, 4), stride_oracle(20, 4, 2), stride_oracle(9, 3, 1)});
  CHECK(sizes == std::vector<int>{20, 9, 7});
  CHECK(EncoderSpec::dqn(4, 42).spatial_sizes() == std::vector<int>{9, 3, 1});
  CHECK(EncoderSpec::dqn(4, 36).spatial_sizes() == std::vector<int>{8, 3, 1});
  CHECK_THROWS_AS(EncoderSpec::dqn(4, 16).validate(), std::invalid_argument);
}

TEST_CASE("parameter count of the 84x84 dual-head net", "[diffnet]") {
  HeadedNet<float> net(EncoderSpec::dqn(4, 84), {3, 16});
  CHECK(net.parameter_count() == dqn_param_oracle(4, 84, {3, 16}));
  CHECK(net.parameter_count() == 1'693'875u);
  HeadedNet<float> reward(EncoderSpec::dqn(8, 84), {3});
  CHECK(reward.parameter_count() == dqn_param_oracle(8, 84, {3}));
}

TEST_CASE("forward shapes on a random 84x84x4 batch", "[diffnet]") {
  HeadedNet<float> net(EncoderSpec::dqn(4, 84), {3, 16});
  std::mt19937_64 rng(1);
  net.init(rng);
  const int batch = 5;
  const auto x = random_input<float>(static_cast<std::size_t>(batch) * net.input_length(), 2);
  const auto& out = net.forward(x, batch);
  REQUIRE(out.size() == 2);
  CHECK(out[0].size() == batch * 3u);
  CHECK(out[1].size() == batch * 16u);
  CHECK_THROWS_AS(net.forward(std::span<const float>(x.data(), x.size() - 1), batch), std::invalid_argument);
}

TEST_CASE("zero weights propagate the biases through rectifiers", "[diffnet]") {
  EncoderSpec spec = EncoderSpec::dqn(1, 36);
  spec.hidden = 8;
  HeadedNet<double> net(spec, {2});
  auto params = net.params();
  // biases: conv0 0.5, conv1 -1 (killed by the rectifier), conv2 0.25, dense 0.7, head 0.3/-0.2
  for (auto& p : params) std::fill(p.value.begin(), p.value.end(), 0.0);
  auto set_bias = [&](const std::string& name, std::vector<double> b) {
    for (auto& p : params)
      if (p.name == name) std::copy(b.begin(), b.end(), p.value.begin());
  };
  std::fill(params[1].value.begin(), params[1].value.end(), 0.5);
  std::fill(params[3].value.begin(), params[3].value.end(), -1.0);
  std::fill(params[5].value.begin(), params[5].value.end(), 0.25);
  std::fill(params[7].value.begin(), params[7].value.end(), 0.7);
  set_bias("head0.bias", {0.3, -0.2});
  const std::vector<double> x(net.input_length(), 0.0);
  const auto& out = net.forward(x, 1);
  CHECK(out[0][0] == 0.3);
  CHECK(out[0][1] == -0.2);
}

TEST_CASE("scalar 1x1 convolution", "[diffnet]") {
  Conv2d<double> conv(1, 1, 1, 1, false);
  conv.weight()[0] = 2.0;
  const double x = 3.0;
  const auto& y = conv.forward(&x, ActivationLayout::nchw(1, 1, 1), 1, 1, 1);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == 6.0);
}

TEST_CASE("convolution matches a direct-summation oracle", "[diffnet]") {
  const int cin = 3, cout = 4, k = 3, s = 2, h = 9, batch = 2;
  Conv2d<double> conv(cin, cout, k, s, false);
  std::mt19937_64 rng(3);
  conv.init(rng);
  for (auto& b : conv.bias()) b = std::uniform_real_distribution<double>(-1, 1)(rng);
  const auto x = random_input<double>(static_cast<std::size_t>(batch) * cin * h * h, 4);
  const auto& y = conv.forward(x.data(), ActivationLayout::nchw(cin, h, h), batch, h, h);
  const int o = conv.out_h();
  REQUIRE(o == stride_oracle(h, k, s));
  for (int oc = 0; oc < cout; ++oc)
    for (int n = 0; n < batch; ++n)
      for (int i = 0; i < o; ++i)
        for (int j = 0; j < o; ++j) {
          double acc = conv.bias()[oc];
          for (int c = 0; c < cin; ++c)
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj)
                acc += conv.weight()[((oc * cin + c) * k + ki) * k + kj] *
                       x[((static_cast<std::size_t>(n) * cin + c) * h + i * s + ki) * h + j * s + kj];
          CHECK(y[((static_cast<std::size_t>(oc) * batch + n) * o + i) * o + j] == Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("dense layer gradient equals the closed form 2(Wx - y)x^T", "[diffnet]") {
  Dense<double> layer(4, 3, false);
  std::mt19937_64 rng(5);
  layer.init(rng);
  const std::vector<double> x{0.5, -1.0, 2.0, 0.25};
  const std::vector<double> target{1.0, -0.5, 0.0};
  const auto out = layer.forward(x.data(), 1);
  std::vector<double> dy(3);
  for (int i = 0; i < 3; ++i) dy[i] = 2.0 * (out[i] - target[i]);
  const auto expected = dy;
  layer.backward(dy, nullptr);
  auto params = layer.params("d");
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      double wx = layer.bias()[i];
      for (int k = 0; k < 4; ++k) wx += layer.weight()[i * 4 + k] * x[k];
      CHECK(params[0].grad[i * 4 + j] == Approx(2.0 * (wx - target[i]) * x[j]).epsilon(1e-12));
    }
  for (int i = 0; i < 3; ++i) CHECK(params[1].grad[i] == Approx(expected[i]));
}

TEST_CASE("a weight behind a dead rectifier gets zero gradient", "[diffnet]") {
  Dense<double> hidden(2, 2, true);
  hidden.weight() = {1.0, 1.0, -1.0, -1.0};  // unit 1 is dead for positive inputs
  const std::vector<double> x{0.5, 0.5};
  hidden.forward(x.data(), 1);
  std::vector<double> dy{1.0, 1.0};
  hidden.backward(dy, nullptr);
  const auto p = hidden.params("h");
  CHECK(p[0].grad[2] == 0.0);
  CHECK(p[0].grad[3] == 0.0);
  CHECK(p[0].grad[0] == 0.5);
}

TEST_CASE("backward without a forward cache is an error", "[diffnet]") {
  Dense<float> d(2, 2, false);
  std::vector<float> dy(2, 1.0f);
  CHECK_THROWS_AS(d.backward(dy, nullptr), std::logic_error);
  Conv2d<float> c(1, 1, 1, 1);
  CHECK_THROWS_AS(c.backward(dy, nullptr), std::logic_error);
  HeadedNet<float> net(EncoderSpec::passthrough(1, 2), {2});
  std::vector<std::vector<float>> g(1, std::vector<float>(2));
  CHECK_THROWS_AS(net.backward(g), std::logic_error);
}

TEST_CASE("full network gradient agrees with central differences", "[diffnet][gradcheck]") {
  EncoderSpec spec = EncoderSpec::dqn(2, 36);
  spec.hidden = 32;
  HeadedNet<double> net(spec, {3, 5});
  std::mt19937_64 rng(11);
  net.init(rng);
  GradCheckOptions opt;
  opt.seed = 12;
  const auto report = grad_check(net, 2, opt);
  INFO("worst " << report.worst_param << " err " << report.max_rel_error);
  CHECK(report.checked >= 100);
  CHECK(report.max_rel_error < 1e-3);
  CHECK(report.passed);
}

TEST_CASE("linear net gradient is exact to 1e-6", "[diffnet][gradcheck]") {
  HeadedNet<double> net(EncoderSpec::passthrough(1, 6), {4});
  std::mt19937_64 rng(13);
  net.init(rng);
  GradCheckOptions opt;
  opt.tolerance = 1e-6;
  const auto report = grad_check(net, 3, opt);
  CHECK(report.max_rel_error < 1e-6);
  CHECK(report.passed);
}

TEST_CASE("corrupted backward is caught by the gradient check", "[diffnet][gradcheck]") {
  Dense<double> layer(5, 3, false);
  std::mt19937_64 rng(17);
  layer.init(rng);
  const auto x = random_input<double>(10, 18);
  auto params = layer.params("d");
  auto loss_fn = [&](bool with_grad) {
    const auto& y = layer.forward(x.data(), 2);
    double loss = 0.0;
    std::vector<double> dy(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      loss += 0.5 * y[i] * y[i];
      dy[i] = 1.5 * y[i];  // wrong by 50%
    }
    if (with_grad) layer.backward(dy, nullptr);
    return loss;
  };
  const auto report = grad_check(params, loss_fn, GradCheckOptions{});
  CHECK(report.max_rel_error > 1e-3);
  CHECK_FALSE(report.passed);
}

TEST_CASE("kink crossings are skipped, not scored", "[diffnet][gradcheck]") {
  // A rectifier sitting exactly at zero: any bias perturbation flips it.
  Dense<double> layer(1, 1, true);
  layer.weight()[0] = 1.0;
  const std::vector<double> x{0.0};
  auto params = layer.params("d");
  params.pop_back();
  auto bias = layer.params("d").back();
  auto loss_fn = [&](bool with_grad) {
    const auto& y = layer.forward(x.data(), 1);
    std::vector<double> dy{y[0]};
    if (with_grad) layer.backward(dy, nullptr);
    return 0.5 * y[0] * y[0];
  };
  GradCheckOptions opt;
  opt.samples = 5;
  opt.pattern = [&] {
    std::vector<bool> m;
    layer.append_active(m);
    return m;
  };
  const auto report = grad_check(std::vector<ParamRef<double>>{bias}, loss_fn, opt);
  CHECK(report.checked == 0);
  CHECK(report.kink_skips == 250);
  CHECK_FALSE(report.passed);
  // Away from the kink the same layer checks normally.
  const auto smooth = grad_check(params, loss_fn, opt);
  CHECK(smooth.checked == 5);
  CHECK(smooth.kink_skips == 0);
}

TEST_CASE("softmax cross-entropy", "[diffnet]") {
  SECTION("uniform logits") {
    const std::vector<double> z(6, 0.3);
    const auto r = softmax_cross_entropy<double>(z, 2);
    CHECK(r.probability == Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(r.loss == Approx(std::log(6.0)).epsilon(1e-12));
    CHECK(r.loss == Approx(1.7918).margin(1e-4));
  }
  SECTION("dominant label logit") {
    const std::vector<double> z{0.0, 200.0, 0.0};
    const auto r = softmax_cross_entropy<double>(z, 1);
    CHECK(r.loss < 1e-12);
    CHECK(r.probability == Approx(1.0));
  }
  SECTION("logits [1,2,3], label 2") {
    const std::vector<double> z{1.0, 2.0, 3.0};
    const auto r = softmax_cross_entropy<double>(z, 2);
    const double oracle = std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
    CHECK(r.probability == Approx(oracle).epsilon(1e-12));
    CHECK(r.probability == Approx(0.6652).margin(1e-4));
    CHECK(r.loss == Approx(-std::log(oracle)).epsilon(1e-12));
  }
  SECTION("invalid label") {
    const std::vector<double> z{1.0, 2.0};
    CHECK_THROWS_AS(softmax_cross_entropy<double>(z, 2), std::invalid_argument);
    CHECK_THROWS_AS(softmax_cross_entropy<double>(z, -1), std::invalid_argument);
  }
  SECTION("softmax sums to one") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> n(0.0, 5.0);
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> z(7);
      for (auto& v : z) v = n(rng);
      const auto p = softmax<double>(z);
      double s = 0.0;
      for (double v : p) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("Adam", "[diffnet]") {
  std::vector<double> value{0.5, -0.25}, grad{0.0, 0.0};
  std::vector<ParamRef<double>> params{{"p", value, grad}};
  SECTION("zero gradient leaves parameters unchanged") {
    AdamState<double> st(params, {});
    adam_step(params, st);
    CHECK(value == std::vector<double>{0.5, -0.25});
  }
  SECTION("first step moves by lr against the gradient sign") {
    AdamState<double> st(params, {1e-4});
    grad = {3.0, -0.01};
    adam_step(params, st);
    // m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
    CHECK(value[0] == Approx(0.5 - 1e-4 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
    CHECK(value[1] == Approx(-0.25 + 1e-4 * 0.01 / (0.01 + 1e-8)).epsilon(1e-12));
  }
  SECTION("pure given a state snapshot") {
    grad = {0.7, -0.3};
    AdamState<double> st(params, {});
    adam_step(params, st);
    const auto snapshot = st;
    const auto v0 = value;
    adam_step(params, st);
    const auto after_a = value;
    value = v0;
    AdamState<double> st2 = snapshot;
    adam_step(params, st2);
    CHECK(value == after_a);
    CHECK(st2.first == st.first);
    CHECK(st2.second == st.second);
  }
  SECTION("shape mismatch") {
    AdamState<double> st(params, {});
    std::vector<double> v2{1.0}, g2{1.0};
    std::vector<ParamRef<double>> other{{"p", value, grad}, {"q", v2, g2}};
    CHECK_THROWS_AS(adam_step(other, st), std::invalid_argument);
  }
}

TEST_CASE("forward is deterministic", "[diffnet]") {
  HeadedNet<float> a(EncoderSpec::dqn(4, 42), {3, 16});
  std::mt19937_64 rng(23);
  a.init(rng);
  const auto x = random_input<float>(3u * a.input_length(), 24);
  const auto y1 = a.forward(x, 3);
  const auto y2 = a.forward(x, 3);
  CHECK(y1 == y2);
}

TEST_CASE("checkpoint round trip", "[diffnet][checkpoint]") {
  HeadedNet<float> a(EncoderSpec::dqn(4, 42), {3, 16}), b(EncoderSpec::dqn(4, 42), {3, 16});
  std::mt19937_64 r1(29), r2(30);
  a.init(r1);
  b.init(r2);
  const auto dir = std::filesystem::temp_directory_path() / "sugarl_test_ckpt";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "a.ckpt", a);
  load_checkpoint(dir / "a.ckpt", b);
  CHECK(parameter_checksum(a) == parameter_checksum(b));
  save_checkpoint(dir / "b.ckpt", b);
  CHECK(read_file_bytes(dir / "a.ckpt") == read_file_bytes(dir / "b.ckpt"));

  const auto bytes = read_file_bytes(dir / "a.ckpt");
  CHECK(bytes.substr(0, 8) == "SUGARLCK");
  CHECK(bytes.size() == 8 + 4 + 8 + 4 + a.params().size() * 8 + a.parameter_count() * 4);

  HeadedNet<float> other(EncoderSpec::dqn(4, 42), {3, 5});
  CHECK_THROWS_AS(load_checkpoint(dir / "a.ckpt", other), std::runtime_error);
  CHECK_THROWS(load_checkpoint(dir / "missing.ckpt", other));
  std::filesystem::remove_all(dir);
}
