#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kcq/errors.hpp"
#include "kcq/numeric.hpp"
#include "kcq/randomfield.hpp"

using namespace kcq;
using namespace kcq::randomfield;

namespace {

constexpr double kA = 3.0;
constexpr double kC = 0.333;
constexpr double kSigma = 0.2;

// Pole-free forms of the two root equations, scanned on a fine grid and refined
// by bisection. Independent of the library's bracketing.
double scan_root(bool odd, double lo, double hi) {
  auto g = [odd](double w) {
    return odd ? w * std::sin(kA * w) - kC * std::cos(kA * w) : w * std::cos(kA * w) + kC * std::sin(kA * w);
  };
  const int n = 200000;
  double prev_w = lo, prev_g = g(lo);
  for (int s = 1; s <= n; ++s) {
    const double w = lo + (hi - lo) * s / n;
    const double gw = g(w);
    if ((prev_g < 0) != (gw < 0)) {
      double a = prev_w, b = w, ga = prev_g;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if ((gm < 0) == (ga < 0)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      return 0.5 * (a + b);
    }
    prev_w = w;
    prev_g = gw;
  }
  return NAN;
}

double trapezoid_product(const KLField& f, std::size_t i, std::size_t j, int points) {
  std::vector<double> x(points), y(points);
  for (int p = 0; p < points; ++p) {
    x[p] = -kA + 2.0 * kA * p / (points - 1);
    y[p] = eigenfunction_centered(f, i, x[p]) * eigenfunction_centered(f, j, x[p]);
  }
  return trapezoid(x, y);
}

}  // namespace

TEST_CASE("eigenvalue residuals at a=3, c=0.333") {
  const auto f = make_kl_field(2e11, kA, kC, kSigma, 10);
  for (std::size_t i = 1; i <= 10; ++i) {
    CHECK(std::abs(eigen_residual(f, i)) < 1e-10);
  }
  // Residual forms written out directly.
  for (std::size_t i = 1; i <= 10; ++i) {
    const double w = f.omegas[i - 1];
    const double r = i % 2 == 1 ? w * std::tan(kA * w) - kC : w + kC * std::tan(kA * w);
    CHECK(std::abs(r) < 1e-10);
  }
}

TEST_CASE("eigenvalues positive and strictly decreasing") {
  const auto p = kl_eigenpairs(kA, kC, kSigma, 10);
  REQUIRE(p.kappas.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(p.kappas[i] > 0.0);
    CHECK(p.kappas[i] == doctest::Approx(2 * kC * kSigma * kSigma / (p.omegas[i] * p.omegas[i] + kC * kC)));
    if (i > 0) CHECK(p.kappas[i] < p.kappas[i - 1]);
  }
  CHECK(p.kappas.back() < p.kappas.front());
}

TEST_CASE("roots agree with a grid-scan oracle") {
  const auto p = kl_eigenpairs(kA, kC, kSigma, 4);
  const double pi = kPi;
  CHECK(p.omegas[0] == doctest::Approx(scan_root(true, 1e-9, pi / (2 * kA))).epsilon(1e-12));
  CHECK(p.omegas[1] == doctest::Approx(scan_root(false, pi / (2 * kA) + 1e-9, pi / kA)).epsilon(1e-12));
  CHECK(p.omegas[2] == doctest::Approx(scan_root(true, pi / kA, 3 * pi / (2 * kA))).epsilon(1e-12));
  CHECK(p.omegas[3] == doctest::Approx(scan_root(false, 3 * pi / (2 * kA) + 1e-9, 2 * pi / kA)).epsilon(1e-12));
}

TEST_CASE("eigenfunction values at the centre") {
  const auto f = make_kl_field(1.0, kA, kC, kSigma, 4);
  const double w1 = f.omegas[0];
  CHECK(eigenfunction_centered(f, 1, 0.0) == doctest::Approx(1.0 / std::sqrt(kA + std::sin(2 * w1 * kA) / (2 * w1))));
  CHECK(eigenfunction_centered(f, 2, 0.0) == 0.0);
  // Structure coordinate x = a maps to the centre.
  CHECK(eigenfunction(f, 1, kA) == eigenfunction_centered(f, 1, 0.0));
  CHECK(eigenfunction(f, 3, 0.0) == eigenfunction_centered(f, 3, -kA));
  CHECK_THROWS_AS(eigenfunction(f, 0, 1.0), IndexError);
  CHECK_THROWS_AS(eigenfunction(f, 5, 1.0), IndexError);
}

TEST_CASE("eigenfunctions are orthonormal") {
  const auto f = make_kl_field(1.0, kA, kC, kSigma, 10);
  CHECK(trapezoid_product(f, 1, 1, 10000) == doctest::Approx(1.0).epsilon(1e-6));
  for (std::size_t i = 1; i <= 10; ++i) {
    for (std::size_t j = i; j <= 10; ++j) {
      const double ip = trapezoid_product(f, i, j, 10000);
      CHECK(std::abs(ip - (i == j ? 1.0 : 0.0)) < 1e-6);
    }
  }
}

TEST_CASE("field value") {
  auto rel = make_kl_field(2e11, kA, kC, kSigma, 10);
  std::vector<double> zero(10, 0.0);
  CHECK(field_value(rel, 1.2, zero) == 2e11);

  auto abs_field = make_kl_field(2e11, kA, kC, kSigma, 10, FluctuationScale::absolute);
  std::vector<double> e1(10, 0.0);
  e1[0] = 1.0;
  const double x = 0.7;
  CHECK(field_value(abs_field, x, e1) == doctest::Approx(2e11 + std::sqrt(abs_field.kappas[0]) * eigenfunction(abs_field, 1, x)));
  CHECK(field_value(rel, x, e1) ==
        doctest::Approx(2e11 * (1.0 + std::sqrt(rel.kappas[0]) * eigenfunction(rel, 1, x))).epsilon(1e-14));

  std::vector<double> short_eps(3, 0.0);
  CHECK_THROWS_AS(field_value(rel, x, short_eps), ShapeError);
}

TEST_CASE("field value is affine in eps") {
  const auto f = make_kl_field(2e11, kA, kC, kSigma, 10);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> eps(10), scaled(10);
  for (auto& e : eps) e = nd(rng);
  const double base = field_value(f, 2.0, eps) - f.E0;
  // Adding and removing E0 rounds at E0's scale, so exactness holds up to a few ulps of E0.
  const double ulp = std::nextafter(f.E0, 2 * f.E0) - f.E0;
  for (double a : {2.0, -0.5, 4.0, 3.0, -1.7}) {
    for (int i = 0; i < 10; ++i) scaled[i] = a * eps[i];
    CHECK(std::abs((field_value(f, 2.0, scaled) - f.E0) - a * base) <= 4.0 * (1.0 + std::abs(a)) * ulp);
  }
  auto abs_field = make_kl_field(0.0, kA, kC, kSigma, 10, FluctuationScale::absolute);
  const double b0 = field_value(abs_field, 2.0, eps);
  for (int i = 0; i < 10; ++i) scaled[i] = 2.0 * eps[i];
  CHECK(field_value(abs_field, 2.0, scaled) == 2.0 * b0);
}

TEST_CASE("Monte Carlo variance of the field matches the eigen sum") {
  const auto f = make_kl_field(1.0, kA, kC, kSigma, 10, FluctuationScale::absolute);
  const double x = 1.5;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  std::vector<double> eps(10);
  CompensatedSum s, s2;
  const int n = 100000;
  for (int d = 0; d < n; ++d) {
    for (auto& e : eps) e = nd(rng);
    const double v = field_value(f, x, eps) - f.E0;
    s.add(v);
    s2.add(v * v);
  }
  const double mean = s.value() / n;
  const double var = s2.value() / n - mean * mean;
  double expected = 0.0;
  for (std::size_t i = 1; i <= 10; ++i) expected += f.kappas[i - 1] * std::pow(eigenfunction(f, i, x), 2);
  CHECK(field_variance(f, x) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(var - expected) / expected < 0.02);
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(kl_eigenpairs(0.0, kC, kSigma, 3), DomainError);
  CHECK_THROWS_AS(kl_eigenpairs(kA, kC, kSigma, 0), DomainError);
}
