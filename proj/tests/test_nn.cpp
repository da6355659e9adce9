#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "specloc/nn.hpp"
#include "test_util.hpp"

using namespace specloc;

TEST_SUITE("nn") {

TEST_CASE("init is deterministic and zeroes biases") {
  const DenseNet a = init_net({11, 32, 2}, Activation::relu,
                              Activation::identity, 0.1, 42);
  const DenseNet b = init_net({11, 32, 2}, Activation::relu,
                              Activation::identity, 0.1, 42);
  CHECK(a == b);
  for (const auto& bias : a.biases) {
    for (double v : bias) CHECK(v == 0.0);
  }
  const DenseNet c = init_net({11, 32, 2}, Activation::relu,
                              Activation::identity, 0.1, 43);
  CHECK(a.weights[0].data != c.weights[0].data);
}

TEST_CASE("He bound for fan-in 128") {
  const double bound = std::sqrt(6.0 / 128.0);
  CHECK(bound == doctest::Approx(0.2165).epsilon(1e-3));
  const DenseNet net = init_net({128, 8, 1}, Activation::relu,
                                Activation::identity, 0.0, 3);
  double max_abs = 0.0;
  for (double v : net.weights[0].data) {
    CHECK(std::abs(v) <= bound);
    max_abs = std::max(max_abs, std::abs(v));
  }
  CHECK(max_abs > 0.9 * bound);  // the draw actually fills the range
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(init_net({11}, Activation::relu, Activation::identity, 0.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(init_net({11, 0, 2}, Activation::relu, Activation::identity,
                           0.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(init_net({11, 4, 2}, Activation::identity,
                           Activation::identity, 0.0, 1),
                  std::invalid_argument);
}

TEST_CASE("zero-weight single layer returns the bias") {
  DenseNet net = init_net({3, 2}, Activation::relu, Activation::identity,
                          std::vector<double>{}, 1);
  for (auto& w : net.weights) {
    for (double& v : w.data) v = 0.0;
  }
  const auto out = forward_eval(net, {5.0, -2.0, 7.0}).output;
  CHECK(out == std::vector<double>{0.0, 0.0});
}

TEST_CASE("dropout 0 makes train and eval identical") {
  const DenseNet net = init_net({4, 8, 8, 2}, Activation::relu,
                                Activation::tanh, 0.0, 9);
  const std::vector<double> x{0.3, -0.2, 0.9, 0.1};
  Rng rng(5);
  CHECK(forward_train(net, x, rng).output == forward_eval(net, x).output);
}

TEST_CASE("inverted dropout is unbiased") {
  const DenseNet net = init_net({4, 16, 2}, Activation::relu,
                                Activation::identity, 0.5, 13);
  const std::vector<double> x{0.5, 1.0, -0.7, 0.25};
  const auto eval = forward_eval(net, x).output;
  Rng rng(99);
  const int n = 10000;
  std::vector<double> mean(2, 0.0), m2(2, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto out = forward_train(net, x, rng).output;
    for (int k = 0; k < 2; ++k) {
      const double delta = out[k] - mean[k];
      mean[k] += delta / (i + 1);
      m2[k] += delta * (out[k] - mean[k]);
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double se = std::sqrt(m2[k] / (n - 1) / n);
    CHECK(std::abs(mean[k] - eval[k]) < 3.0 * se + 1e-12);
  }
}

TEST_CASE("identity net weight gradient matches hand differentiation") {
  DenseNet net = init_net({3, 2}, Activation::relu, Activation::identity,
                          std::vector<double>{}, 21);
  const std::vector<double> u{0.4, -1.2, 2.0};
  const std::vector<double> t{1.0, -1.0};
  const ForwardCache cache = forward_eval(net, u);
  const auto loss = mse_loss(cache.output, t);
  const Gradients g = backward(net, cache, loss.grad);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double expected = (cache.output[r] - t[r]) * u[c] * (2.0 / 2.0);
      CHECK(g.dw[0].at(r, c) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(g.db[0][r] ==
          doctest::Approx((cache.output[r] - t[r]) * (2.0 / 2.0)));
  }
}

TEST_CASE("zero loss gradient produces zero parameter gradients") {
  const DenseNet net = init_net({5, 6, 3}, Activation::tanh,
                                Activation::sigmoid, 0.0, 8);
  const ForwardCache cache = forward_eval(net, {1, 2, 3, 4, 5});
  const Gradients g = backward(net, cache, {0.0, 0.0, 0.0});
  for (const auto& w : g.dw) {
    for (double v : w.data) CHECK(v == 0.0);
  }
  for (const auto& b : g.db) {
    for (double v : b) CHECK(v == 0.0);
  }
}

TEST_CASE("analytic gradients match finite differences over 20 seeds") {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DenseNet net = test::random_small_net(seed);
    Rng data_rng(seed ^ 0xABCDEF);
    std::vector<double> x(static_cast<std::size_t>(net.input_size()));
    std::vector<double> t(static_cast<std::size_t>(net.output_size()));
    for (double& v : x) v = data_rng.uniform(-2, 2);
    for (double& v : t) v = data_rng.uniform(-1, 1);
    Rng mask_rng(seed * 31);
    worst = std::max(
        worst, test::gradient_check_max_rel_err(net, x, t, mask_rng));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("mse basics") {
  const auto zero = mse_loss({1, 2, 3}, {1, 2, 3});
  CHECK(zero.value == 0.0);
  CHECK(zero.grad == std::vector<double>{0, 0, 0});
  const auto l = mse_loss({2, 0}, {0, 0});
  CHECK(l.value == doctest::Approx(2.0));  // (4 + 0) / 2
  CHECK(l.grad[0] == doctest::Approx(2.0));
}

TEST_CASE("mse gradient matches finite differences") {
  Rng rng(6);
  std::vector<double> pred(7), target(7);
  for (double& v : pred) v = rng.uniform(-3, 3);
  for (double& v : target) v = rng.uniform(-3, 3);
  const auto analytic = mse_loss(pred, target);
  const double h = 1e-6;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto up = pred, down = pred;
    up[i] += h;
    down[i] -= h;
    const double fd =
        (mse_loss(up, target).value - mse_loss(down, target).value) / (2 * h);
    CHECK(std::abs(fd - analytic.grad[i]) /
              std::max(1e-8, std::abs(analytic.grad[i])) <
          1e-8);
  }
}

TEST_CASE("bce at logit zero is ln 2") {
  const auto l = bce_loss_logits({0.0}, {1.0});
  CHECK(l.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(l.grad[0] == doctest::Approx(-0.5));
  const auto lp = bce_loss_prob({0.5}, {1.0});
  CHECK(lp.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bce is stable at extreme logits") {
  const auto big = bce_loss_logits({500.0}, {1.0});
  CHECK(big.value == doctest::Approx(0.0));
  const auto bad = bce_loss_logits({-500.0}, {1.0});
  CHECK(bad.value == doctest::Approx(500.0));
  CHECK(std::isfinite(bad.grad[0]));
  CHECK_THROWS_AS(bce_loss_prob({0.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("adam with zero gradients keeps parameters, advances the step") {
  DenseNet net = init_net({3, 4, 2}, Activation::relu, Activation::identity,
                          0.0, 77);
  const DenseNet before = net;
  AdamState st = AdamState::for_net(net);
  adam_step(net, Gradients::zeros_like(net), st);
  CHECK(net == before);
  CHECK(st.step == 1);
}

TEST_CASE("adam first step equals -lr for a unit gradient") {
  DenseNet net = init_net({1, 1}, Activation::relu, Activation::identity,
                          std::vector<double>{}, 1);
  const double w0 = net.weights[0].data[0];
  AdamState st = AdamState::for_net(net, 1e-3);
  Gradients g = Gradients::zeros_like(net);
  g.dw[0].data[0] = 1.0;
  adam_step(net, g, st);
  const double step = net.weights[0].data[0] - w0;
  CHECK(step == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adam updates are deterministic") {
  auto run = [] {
    DenseNet net = init_net({4, 5, 2}, Activation::tanh, Activation::identity,
                            0.0, 123);
    AdamState st = AdamState::for_net(net, 3e-3);
    Rng rng(55);
    for (int i = 0; i < 10; ++i) {
      Gradients g = Gradients::zeros_like(net);
      for (auto& w : g.dw) {
        for (double& v : w.data) v = rng.uniform(-1, 1);
      }
      adam_step(net, g, st);
    }
    return net;
  };
  CHECK(run() == run());
}

TEST_CASE("json artifact round trip is bit-exact") {
  const DenseNet net = test::random_small_net(5);
  const DenseNet back = net_from_json_text(net_to_json_text(net));
  CHECK(back == net);

  test::TempDir tmp;
  save_net(net, tmp.file("net.json"));
  CHECK(load_net(tmp.file("net.json")) == net);
}

TEST_CASE("forward keeps finite parameters finite") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const DenseNet net = test::random_small_net(seed);
    Rng rng(seed);
    std::vector<double> x(static_cast<std::size_t>(net.input_size()));
    for (double& v : x) v = rng.uniform(-100, 100);
    for (double v : forward_eval(net, x).output) {
      CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("forward rejects malformed input") {
  const DenseNet net = init_net({3, 2}, Activation::relu, Activation::identity,
                                std::vector<double>{}, 2);
  CHECK_THROWS_AS(forward_eval(net, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(forward_eval(net, {1.0, 2.0, std::nan("")}),
                  std::invalid_argument);
}

}  // TEST_SUITE
