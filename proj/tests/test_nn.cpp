#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wmlab/nn.hpp"

using namespace wmlab::nn;
using wmlab::Rng;

namespace {

Tensor random_tensor(int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(c, h, w);
  for (double& v : t.v) v = rng.gaussian();
  return t;
}

// Scalar loss: weighted sum of the output, fixed random weights.
double weighted_sum(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  double s = 0.0;
  for (const double v : y.v) s += v * rng.gaussian();
  return s;
}

Tensor weight_tensor(int c, int h, int w, std::uint64_t seed) {
  return random_tensor(c, h, w, seed);
}

}  // namespace

TEST_CASE("conv forward/backward against finite differences") {
  for (const int stride : {1, 2}) {
    CAPTURE(stride);
    ConvLayer conv(2, 3, 3, stride);
    Rng init(41);
    conv.init(init);
    const Tensor x = random_tensor(2, 6, 6, 7);
    const Tensor y = conv.forward(x);
    REQUIRE(y.c == 3);
    REQUIRE(y.h == (stride == 1 ? 6 : 3));

    const Tensor dy = weight_tensor(y.c, y.h, y.w, 99);
    std::vector<double> dw(conv.w.size(), 0.0), db(conv.b.size(), 0.0);
    const Tensor dx = conv.backward(x, dy, dw, db);

    const auto loss = [&](const ConvLayer& layer, const Tensor& input) {
      const Tensor out = layer.forward(input);
      double s = 0.0;
      for (std::size_t i = 0; i < out.v.size(); ++i) s += out.v[i] * dy.v[i];
      return s;
    };

    const double h = 1e-6;
    Rng pick(3);
    for (int trial = 0; trial < 12; ++trial) {
      // Input gradient.
      const std::size_t i = pick.uniform_index(x.v.size());
      Tensor xp = x, xm = x;
      xp.v[i] += h;
      xm.v[i] -= h;
      const double fd = (loss(conv, xp) - loss(conv, xm)) / (2 * h);
      CHECK(dx.v[i] == doctest::Approx(fd).epsilon(1e-6));
      // Weight gradient.
      const std::size_t j = pick.uniform_index(conv.w.size());
      ConvLayer cp = conv, cm = conv;
      cp.w[j] += h;
      cm.w[j] -= h;
      const double fdw = (loss(cp, x) - loss(cm, x)) / (2 * h);
      CHECK(dw[j] == doctest::Approx(fdw).epsilon(1e-6));
    }
    // Bias gradient equals the per-channel sum of dy.
    for (int oc = 0; oc < 3; ++oc) {
      double expected = 0.0;
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx) expected += dy.at(oc, yy, xx);
      CHECK(db[oc] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("linear layer gradcheck") {
  LinearLayer lin(5, 4);
  Rng init(2);
  lin.init(init);
  Rng rng(8);
  std::vector<double> x(5), dy(4);
  for (double& v : x) v = rng.gaussian();
  for (double& v : dy) v = rng.gaussian();
  std::vector<double> dw(lin.w.size(), 0.0), db(lin.b.size(), 0.0);
  const std::vector<double> dx = lin.backward(x, dy, dw, db);

  const auto loss = [&](const LinearLayer& l, const std::vector<double>& in) {
    const auto out = l.forward(in);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += out[i] * dy[i];
    return s;
  };
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    CHECK(dx[i] == doctest::Approx((loss(lin, xp) - loss(lin, xm)) / (2 * h))
                       .epsilon(1e-7));
  }
  for (std::size_t j = 0; j < lin.w.size(); ++j) {
    LinearLayer lp = lin, lm = lin;
    lp.w[j] += h;
    lm.w[j] -= h;
    CHECK(dw[j] == doctest::Approx((loss(lp, x) - loss(lm, x)) / (2 * h))
                       .epsilon(1e-7));
  }
}

TEST_CASE("activations and their backward rules") {
  const Tensor x = random_tensor(1, 4, 4, 12);
  const Tensor r = relu(x);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    CHECK(r.v[i] == (x.v[i] > 0 ? x.v[i] : 0.0));
  const Tensor dy = random_tensor(1, 4, 4, 13);
  const Tensor dr = relu_backward(x, dy);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    CHECK(dr.v[i] == (x.v[i] > 0 ? dy.v[i] : 0.0));

  const Tensor t = tanh_t(x);
  const Tensor dt = tanh_backward_from_y(t, dy);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    CHECK(dt.v[i] ==
          doctest::Approx(dy.v[i] * (1 - t.v[i] * t.v[i])).epsilon(1e-12));

  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(30.0) == doctest::Approx(1.0));
}

TEST_CASE("global average pool and its adjoint") {
  const Tensor x = random_tensor(3, 4, 4, 14);
  const auto pooled = global_avg_pool(x);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (int y = 0; y < 4; ++y)
      for (int xx = 0; xx < 4; ++xx) s += x.at(c, y, xx);
    CHECK(pooled[c] == doctest::Approx(s / 16.0).epsilon(1e-12));
  }
  const std::vector<double> dy = {1.0, -2.0, 0.5};
  const Tensor dx = global_avg_pool_backward(3, 4, 4, dy);
  CHECK(dx.at(0, 0, 0) == doctest::Approx(1.0 / 16.0));
  CHECK(dx.at(1, 2, 3) == doctest::Approx(-2.0 / 16.0));
}

TEST_CASE("nearest upsample and its adjoint") {
  const Tensor x = random_tensor(1, 2, 2, 15);
  const Tensor up = upsample_nearest_2x(x);
  CHECK(up.at(0, 0, 0) == x.at(0, 0, 0));
  CHECK(up.at(0, 0, 1) == x.at(0, 0, 0));
  CHECK(up.at(0, 3, 3) == x.at(0, 1, 1));
  const Tensor dy = random_tensor(1, 4, 4, 16);
  const Tensor dx = upsample_nearest_2x_backward(dy);
  double expected = dy.at(0, 0, 0) + dy.at(0, 0, 1) + dy.at(0, 1, 0) + dy.at(0, 1, 1);
  CHECK(dx.at(0, 0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sinusoidal embedding shape and range") {
  const auto e = sinusoidal_embedding(0.37, 32);
  REQUIRE(e.size() == 32);
  for (const double v : e) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
  CHECK(sinusoidal_embedding(0.37, 32) == e);  // deterministic
  CHECK(sinusoidal_embedding(0.38, 32) != e);
  CHECK_THROWS_AS(sinusoidal_embedding(0.5, 7), std::invalid_argument);
}

TEST_CASE("optimizers are deterministic given identical inputs") {
  const auto run = [](auto opt) {
    std::vector<double> w = {1.0, -2.0, 0.5};
    std::vector<double> g = {0.1, 0.2, -0.3};
    std::vector<ParamRef> params{{&w, &g}};
    for (int i = 0; i < 5; ++i) opt.step(params);
    return w;
  };
  CHECK(run(SgdMomentum{0.1, 0.9, {}}) == run(SgdMomentum{0.1, 0.9, {}}));
  CHECK(run(Adam{}) == run(Adam{}));

  // SGD momentum matches the closed form for constant gradient:
  // v_k = sum mu^j g, w subtracts lr * sum v.
  SgdMomentum sgd{0.1, 0.5, {}};
  std::vector<double> w = {0.0};
  std::vector<double> g = {1.0};
  std::vector<ParamRef> params{{&w, &g}};
  sgd.step(params);  // v = 1, w = -0.1
  sgd.step(params);  // v = 1.5, w = -0.25
  CHECK(w[0] == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<int> hits(257, 0);
  parallel_for(257, 3, [&](int i) { hits[i] += 1; });
  for (const int h : hits) CHECK(h == 1);
}
