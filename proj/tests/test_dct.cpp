#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wmlab/dct.hpp"
#include "wmlab/rng.hpp"

using namespace wmlab;

TEST_CASE("2-D DCT round trips and preserves energy") {
  for (const int n : {8, 32}) {
    Rng rng(n);
    std::vector<double> img(static_cast<std::size_t>(n) * n);
    for (double& v : img) v = rng.uniform();
    const DctPlan& plan = DctPlan::cached(n);
    const auto coeffs = plan.forward_2d(img);
    const auto back = plan.inverse_2d(coeffs);

    double e_img = 0.0, e_coeff = 0.0, max_diff = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      e_img += img[i] * img[i];
      e_coeff += coeffs[i] * coeffs[i];
      max_diff = std::max(max_diff, std::abs(img[i] - back[i]));
    }
    CHECK(max_diff < 1e-12);                                  // orthonormal inverse
    CHECK(e_img == doctest::Approx(e_coeff).epsilon(1e-12));  // Parseval
  }
}

TEST_CASE("constant input concentrates at DC") {
  const int n = 32;
  const std::vector<double> img(static_cast<std::size_t>(n) * n, 0.5);
  const auto coeffs = DctPlan::cached(n).forward_2d(img);
  CHECK(coeffs[0] == doctest::Approx(0.5 * n).epsilon(1e-12));
  double off_dc = 0.0;
  for (std::size_t i = 1; i < coeffs.size(); ++i)
    off_dc = std::max(off_dc, std::abs(coeffs[i]));
  CHECK(off_dc < 1e-12);
}

TEST_CASE("single coefficient inverts to the matching cosine") {
  const int n = 16;
  std::vector<double> coeffs(static_cast<std::size_t>(n) * n, 0.0);
  const int u = 3, v = 5;
  coeffs[u * n + v] = 1.0;
  const auto img = DctPlan::cached(n).inverse_2d(coeffs);
  const double pi = 3.14159265358979323846;
  const double su = std::sqrt(2.0 / n), sv = std::sqrt(2.0 / n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double expected = su * std::cos(pi * (2 * y + 1) * u / (2.0 * n)) *
                              sv * std::cos(pi * (2 * x + 1) * v / (2.0 * n));
      CHECK(img[y * n + x] == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("forward equals the adjoint of inverse") {
  // <DCT(x), y> == <x, IDCT(y)> for random x, y.
  const int n = 8;
  Rng rng(77);
  std::vector<double> x(64), y(64);
  for (double& v : x) v = rng.gaussian();
  for (double& v : y) v = rng.gaussian();
  const DctPlan& plan = DctPlan::cached(n);
  const auto fx = plan.forward_2d(x);
  const auto iy = plan.inverse_2d(y);
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < 64; ++i) {
    lhs += fx[i] * y[i];
    rhs += x[i] * iy[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
