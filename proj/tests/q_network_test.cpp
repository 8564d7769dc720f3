#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <vector>

#include "dualmem/q_network.hpp"

using namespace dualmem;

namespace {

// Plain nested-loop forward pass, ReLU on hidden layers only.
std::vector<double> reference_forward(const QNetwork& net, std::vector<double> x) {
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> y(layers[l].out);
    for (std::size_t r = 0; r < layers[l].out; ++r) {
      double s = layers[l].bias[r];
      for (std::size_t c = 0; c < layers[l].in; ++c) s += layers[l].weight[r * layers[l].in + c] * x[c];
      y[r] = (l + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
    x = std::move(y);
  }
  return x;
}

QNetwork random_net(std::vector<std::size_t> sizes, std::uint64_t seed) {
  QNetwork net(std::move(sizes));
  std::mt19937_64 rng(seed);
  net.initialize(rng);
  return net;
}

}  // namespace

TEST(QNetwork, ZeroParametersGiveZeroOutput) {
  QNetwork net({3, 5, 2});
  const auto q = net.forward(std::vector<double>{1.0, -2.0, 0.5});
  EXPECT_EQ(q, (std::vector<double>{0.0, 0.0}));
}

TEST(QNetwork, IdentityLayerReturnsInput) {
  QNetwork net({3, 3});
  for (std::size_t i = 0; i < 3; ++i) net.layers()[0].w(i, i) = 1.0;
  const std::vector<double> s{0.25, -4.0, 7.5};
  EXPECT_EQ(net.forward(s), s);
}

TEST(QNetwork, ParameterCount) {
  QNetwork net({4, 8, 8, 2});
  EXPECT_EQ(net.parameter_count(), 4u * 8 + 8 + 8 * 8 + 8 + 8 * 2 + 2);
}

TEST(QNetwork, InitializationStaysInFanInBound) {
  const auto net = random_net({10, 16, 3}, 1);
  for (const auto& layer : net.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (double w : layer.weight) ASSERT_LE(std::abs(w), bound);
    for (double b : layer.bias) ASSERT_LE(std::abs(b), bound);
  }
}

TEST(QNetwork, ForwardMatchesLoopReference) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> x(0.0, 1.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = random_net({4, 8, 8, 2}, seed);
    std::vector<double> s(4);
    for (double& v : s) v = x(rng);
    const auto got = net.forward(s);
    const auto want = reference_forward(net, s);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-10);
  }
}

TEST(QNetwork, RejectsWrongInputWidth) {
  QNetwork net({3, 2});
  EXPECT_THROW(net.forward(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

// Central differences of L = sum_k c_k * Q_k(x) against backward().
TEST(QNetwork, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> x(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto net = random_net({3, 6, 5, 2}, 100 + seed);
    std::vector<double> s(3);
    for (double& v : s) v = x(rng);
    const std::vector<double> c{0.7, -1.3};
    auto grads = net.zero_gradients();
    net.backward(net.trace(s), c, grads);

    auto objective = [&] {
      const auto q = net.forward(s);
      return c[0] * q[0] + c[1] * q[1];
    };
    constexpr double h = 1e-6;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto check = [&](double& p, double analytic) {
        const double saved = p;
        p = saved + h;
        const double up = objective();
        p = saved - h;
        const double down = objective();
        p = saved;
        const double numeric = (up - down) / (2 * h);
        EXPECT_NEAR(analytic, numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
      };
      auto& layer = net.layers()[l];
      for (std::size_t i = 0; i < layer.weight.size(); ++i) check(layer.weight[i], grads.weight[l][i]);
      for (std::size_t i = 0; i < layer.bias.size(); ++i) check(layer.bias[i], grads.bias[l][i]);
    }
  }
}

TEST(QNetwork, BackwardAccumulates) {
  const auto net = random_net({2, 4, 2}, 4);
  const std::vector<double> s{0.3, -0.2}, g{1.0, 0.5};
  auto once = net.zero_gradients();
  net.backward(net.trace(s), g, once);
  auto twice = net.zero_gradients();
  net.backward(net.trace(s), g, twice);
  net.backward(net.trace(s), g, twice);
  for (std::size_t l = 0; l < once.weight.size(); ++l)
    for (std::size_t i = 0; i < once.weight[l].size(); ++i) EXPECT_DOUBLE_EQ(twice.weight[l][i], 2 * once.weight[l][i]);
  EXPECT_NEAR(twice.squared_norm(), 4 * once.squared_norm(), 1e-12);
}

TEST(QNetwork, SupervisedRegressionReducesLoss) {
  auto net = random_net({2, 16, 1}, 5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> xs(64);
  std::vector<double> ys;
  for (auto& x : xs) {
    x = {u(rng), u(rng)};
    ys.push_back(0.5 * x[0] - 0.8 * x[1] + 0.1);
  }
  auto mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = net.forward(xs[i])[0] - ys[i];
      s += e * e;
    }
    return s / static_cast<double>(xs.size());
  };
  const double initial = mse();
  for (int step = 0; step < 500; ++step) {
    auto grads = net.zero_gradients();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto t = net.trace(xs[i]);
      const std::vector<double> g{2.0 * (t.output()[0] - ys[i]) / static_cast<double>(xs.size())};
      net.backward(t, g, grads);
    }
    net.apply(grads, 0.05);
  }
  EXPECT_LT(mse(), 0.1 * initial);
}

TEST(Snapshot, RoundTripIsExact) {
  const auto net = random_net({4, 8, 8, 2}, 7);
  std::stringstream buf;
  save_network(net, buf);
  const auto back = load_network(buf);
  EXPECT_TRUE(back == net);
}

TEST(Snapshot, ByteLayout) {
  QNetwork net({2, 1});
  net.layers()[0].w(0, 0) = 1.0;
  net.layers()[0].w(0, 1) = -2.0;
  net.layers()[0].bias[0] = 0.5;
  std::stringstream buf;
  save_network(net, buf);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 2 * 4 + 3 * 8);
  EXPECT_EQ(bytes.substr(0, 4), "DQNW");
  const std::string header = bytes.substr(4, 16);
  const std::string expected_header("\x01\x00\x00\x00\x02\x00\x00\x00\x02\x00\x00\x00\x01\x00\x00\x00", 16);
  EXPECT_EQ(header, expected_header);
  // 1.0 little-endian is 00 .. 00 f0 3f
  const std::string one("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8);
  EXPECT_EQ(bytes.substr(20, 8), one);
  // -2.0 then 0.5
  EXPECT_EQ(bytes.substr(28, 8), std::string("\x00\x00\x00\x00\x00\x00\x00\xc0", 8));
  EXPECT_EQ(bytes.substr(36, 8), std::string("\x00\x00\x00\x00\x00\x00\xe0\x3f", 8));
}

TEST(Snapshot, RejectsBadMagicVersionAndTruncation) {
  const auto net = random_net({3, 4, 2}, 8);
  std::stringstream buf;
  save_network(net, buf);
  std::string bytes = buf.str();

  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream a(bad);
  EXPECT_THROW(load_network(a), std::runtime_error);

  bad = bytes;
  bad[4] = 9;
  std::istringstream b(bad);
  EXPECT_THROW(load_network(b), std::runtime_error);

  std::istringstream c(bytes.substr(0, bytes.size() - 3));
  try {
    load_network(c);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "truncated network snapshot");
  }
}

TEST(Snapshot, FileRoundTrip) {
  const auto net = random_net({2, 3, 2}, 9);
  const std::string path = ::testing::TempDir() + "/net.dqnw";
  save_network(net, path);
  EXPECT_TRUE(load_network(path) == net);
  EXPECT_THROW(load_network(path + ".missing"), std::runtime_error);
}
