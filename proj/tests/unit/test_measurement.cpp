#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "kcq/errors.hpp"
#include "kcq/measurement.hpp"
#include "kcq/numeric.hpp"
#include "kcq/pipeline.hpp"

using namespace kcq;
using namespace kcq::measurement;
using kcq::test::rows;

namespace {

dynamics::LinearSystem resting_pair() {
  return dynamics::LinearSystem(Matrix::Identity(2, 2), Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                [](double, std::span<double> out) { out[0] = out[1] = 0.0; });
}

MeasurementModel displacement_sensors(double sd) {
  MeasurementModel m;
  for (std::size_t j = 0; j < 2; ++j) {
    m.points.push_back(dynamics::QoISpec::at_dof(dynamics::QoIKind::displacement, j));
    m.noise_mean.push_back(0.0);
    m.noise_sd.push_back(sd);
  }
  return m;
}

// Random database: 40 samples, 6 steps, two sensors correlated with the QoI.
ResponseDatabase random_db(std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const int n = 40, K = 6;
  RowMatrix q(n, K + 1), s0(n, K + 1), s1(n, K + 1);
  std::vector<double> w(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 + std::abs(nd(rng));
    total += w[i];
    for (int k = 0; k <= K; ++k) {
      q(i, k) = scale * nd(rng);
      s0(i, k) = 0.8 * q(i, k) + scale * 0.3 * nd(rng);
      s1(i, k) = scale * nd(rng);
    }
  }
  for (auto& x : w) x /= total;
  // Renormalise exactly.
  w.back() = 1.0 - (compensated_sum(w) - w.back());
  return test::toy_db(w, q, {s0, s1});
}

}  // namespace

TEST_CASE("noise off reproduces the true readings") {
  const auto sys = dynamics::make_sdof_system();
  std::vector<double> eps{0.0, 0.0};
  const auto traj = dynamics::integrate(*sys, eps, Vector::Zero(2), 0.05, 200);
  MeasurementModel m;
  m.points = {dynamics::QoISpec::at_dof(dynamics::QoIKind::velocity, 0)};
  m.noise_mean = {0.0};
  m.noise_sd = {kNoiseOffSd};
  const auto meas = simulate_measurements(traj, m, *sys, 5);
  for (std::size_t k = 1; k <= 200; ++k) CHECK(meas.at(k, 0) == traj.states(static_cast<Eigen::Index>(k), 1));
}

TEST_CASE("record for the SDOF example setup") {
  const auto cfg = pipeline::sdof_config();
  const auto traj = pipeline::simulate_truth(cfg, {0.0, 0.0});
  const auto sys = pipeline::make_system(cfg);
  const auto meas = simulate_measurements(traj, cfg.sensors, *sys, 2024);
  CHECK(meas.steps() == 200);
  CHECK(meas.values.cols() == 1);
  CHECK(meas.times.front() == 0.05);
  CHECK(meas.times.back() == doctest::Approx(10.0));
  CHECK(cfg.sensors.noise_sd[0] == 0.03);
  const auto again = simulate_measurements(traj, cfg.sensors, *sys, 2024);
  CHECK(again.values == meas.values);
  CHECK_FALSE(simulate_measurements(traj, cfg.sensors, *sys, 2025).values == meas.values);
}

TEST_CASE("pure noise has the model sd") {
  const auto sys = resting_pair();
  std::vector<double> alpha{0.0};
  const auto traj = dynamics::integrate(sys, alpha, Vector::Zero(4), 0.1, 5000);
  const auto m = displacement_sensors(0.03);
  const auto meas = simulate_measurements(traj, m, sys, 77);
  CompensatedSum s, s2;
  const double n = static_cast<double>(meas.values.size());
  for (Eigen::Index i = 0; i < meas.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      s.add(meas.values(i, j));
      s2.add(meas.values(i, j) * meas.values(i, j));
    }
  }
  const double mean = s.value() / n;
  const double sd = std::sqrt(s2.value() / n - mean * mean);
  CHECK(n >= 1e4);
  CHECK(std::abs(sd - 0.03) <= 0.05 * 0.03);
}

TEST_CASE("self-correlation is one and constant channels give zero") {
  const RowMatrix q = rows({{0, 1.0, 2.0}, {0, -1.0, 0.5}, {0, 0.3, -2.0}});
  const RowMatrix c = rows({{4, 4, 4}, {4, 4, 4}, {4, 4, 4}});
  const auto db = test::toy_db({0.2, 0.5, 0.3}, q, {q, c});
  const auto r = correlation_coefficients(db, test::kQoi, 2, test::toy_model(2, kNoiseOffSd));
  CHECK(std::abs(r(1, 0) - 1.0) <= 1e-10);
  CHECK(r(0, 1) == 0.0);
  CHECK(r(1, 1) == 0.0);
}

TEST_CASE("two-sample correlation by hand") {
  // w = (0.3, 0.7), sensor (1, 3), response (2, -1), noise sd 0.5:
  // var h = 0.84, var u = 1.89, cov = -1.26.
  const RowMatrix q = rows({{0, 2.0}, {0, -1.0}});
  const RowMatrix h = rows({{0, 1.0}, {0, 3.0}});
  const auto db = test::toy_db({0.3, 0.7}, q, {h});
  const auto r = correlation_coefficients(db, test::kQoi, 1, test::toy_model(1, 0.5));
  CHECK(r(0, 0) == doctest::Approx(-1.26 / std::sqrt((0.84 + 0.25) * 1.89)).epsilon(1e-14));
}

TEST_CASE("correlation properties") {
  const auto db = random_db(3);
  const auto quiet = correlation_coefficients(db, test::kQoi, 6, test::toy_model(2, kNoiseOffSd));
  const auto noisy = correlation_coefficients(db, test::kQoi, 6, test::toy_model(2, 0.4));
  for (Eigen::Index i = 0; i < quiet.rows(); ++i) {
    for (Eigen::Index j = 0; j < quiet.cols(); ++j) {
      CHECK(std::abs(quiet(i, j)) <= 1.0 + 1e-10);
      CHECK(std::abs(noisy(i, j)) <= std::abs(quiet(i, j)));
    }
  }
  const auto serial = correlation_coefficients(db, test::kQoi, 6, test::toy_model(2, 0.4), Exec::serial);
  CHECK(serial == noisy);
}

TEST_CASE("correlation errors") {
  const RowMatrix flat = rows({{0, 1.0}, {0, 1.0}});
  const auto db = test::toy_db({0.5, 0.5}, flat, {flat});
  CHECK_THROWS_AS(correlation_coefficients(db, test::kQoi, 1, test::toy_model(1, 0.1)), ZeroVarianceError);
  const auto rdb = random_db(1);
  CHECK_THROWS_AS(correlation_coefficients(rdb, test::kQoi, 7, test::toy_model(2, 0.1)), IndexError);
  CHECK_THROWS_AS(correlation_coefficients(rdb, test::kQoi, 2, test::toy_model(1, 0.1)), CoverageError);
  auto swapped = test::toy_model(2, 0.1);
  std::swap(swapped.points[0], swapped.points[1]);
  CHECK_THROWS_AS(correlation_coefficients(rdb, test::kQoi, 2, swapped), CoverageError);
}

TEST_CASE("selection ranks by |r|") {
  const RowMatrix r = rows({{0.9, 0.1}, {0.5, 0.7}});
  const auto model = test::toy_model(2, 0.2, 0.01);
  const auto meas = test::toy_meas(rows({{1.0, 2.0}, {3.0, 4.0}}), model);
  const auto sel = select_key_conditions(r, meas, 2, model);
  REQUIRE(sel.size() == 2);
  CHECK(sel.entries[0] == Cell{1, 0});
  CHECK(sel.entries[1] == Cell{2, 1});
  CHECK(sel.z(0) == 1.0);
  CHECK(sel.z(1) == 4.0);
  CHECK(sel.mu_beta(0) == 0.01);
  CHECK(sel.correlations[0] == 0.9);
  CHECK(sel.R_beta.isApprox(0.04 * Matrix::Identity(2, 2)));
  CHECK_THROWS_AS(select_key_conditions(r, meas, 5, model), SizeError);
  CHECK_THROWS_AS(select_key_conditions(r, meas, 0, model), SizeError);
}

TEST_CASE("ties go to the later step, then the lower sensor") {
  const RowMatrix r = rows({{0.5, -0.5}, {0.5, 0.5}, {0.2, -0.5}});
  const auto model = test::toy_model(2, 0.2);
  const auto meas = test::toy_meas(rows({{1, 2}, {3, 4}, {5, 6}}), model);
  const auto sel = select_key_conditions(r, meas, 3, model);
  CHECK(sel.entries[0] == Cell{3, 1});
  CHECK(sel.entries[1] == Cell{2, 0});
  CHECK(sel.entries[2] == Cell{2, 1});
}

TEST_CASE("full selection has covariance sigma^2 I") {
  const auto model = test::toy_model(2, 0.3);
  const auto meas = test::toy_meas(rows({{1, 2}, {3, 4}, {5, 6}}), model);
  const auto all = select_all_conditions(meas, 3, model);
  CHECK(all.size() == 6);
  CHECK(all.R_beta.isApprox(0.09 * Matrix::Identity(6, 6)));
  CHECK(all.mu_beta.isZero(0.0));
  CHECK_THROWS_AS(selection_from_cells({{1, 0}, {1, 0}}, meas, model), DomainError);
}

TEST_CASE("single key condition with the beam sensor noise") {
  const auto cfg = pipeline::beam_config(4, 100);
  REQUIRE(cfg.N_k == 1);
  const auto meas = test::toy_meas(rows({{0.1, 0.2}}), cfg.sensors);
  const RowMatrix r = rows({{0.3, 0.8}});
  const auto sel = select_key_conditions(r, meas, cfg.N_k, cfg.sensors);
  CHECK(sel.R_beta.rows() == 1);
  CHECK(sel.R_beta(0, 0) == doctest::Approx(0.005 * 0.005).epsilon(1e-15));
}

TEST_CASE("selection is invariant under positive rescaling") {
  const auto model = test::toy_model(2, kNoiseOffSd);
  const auto db = random_db(8);
  const auto big = random_db(8, 37.5);
  const auto meas = test::toy_meas(RowMatrix::Constant(6, 2, 1.0), model);
  for (std::size_t k = 1; k <= 6; ++k) {
    const auto a = select_key_conditions(correlation_coefficients(db, test::kQoi, k, model), meas, std::min<std::size_t>(3, 2 * k), model);
    const auto b = select_key_conditions(correlation_coefficients(big, test::kQoi, k, model), meas, std::min<std::size_t>(3, 2 * k), model);
    CHECK(a.entries == b.entries);
  }
}

TEST_CASE("Gaussian error log density") {
  KeyConditionSelection one;
  one.mu_beta = Vector::Constant(1, 0.2);
  one.R_beta = Matrix::Constant(1, 1, 0.03 * 0.03);
  CHECK(gaussian_error_logpdf(one.mu_beta, one) == doctest::Approx(std::log(1.0 / (std::sqrt(2 * kPi) * 0.03))));

  KeyConditionSelection two;
  two.mu_beta = Vector::Zero(2);
  two.R_beta = Matrix::Zero(2, 2);
  two.R_beta(0, 0) = 0.04;
  two.R_beta(1, 1) = 0.09;
  Vector beta(2);
  beta << 0.2, 0.0;
  const double expected = (-kLogSqrt2Pi - std::log(0.2) - 0.5) + (-kLogSqrt2Pi - std::log(0.3));
  CHECK(gaussian_error_logpdf(beta, two) == doctest::Approx(expected).epsilon(1e-14));

  // Scaling beta - mu by 10 adds 99/2 unit quadratic terms.
  const double base = gaussian_error_logpdf(beta, two);
  CHECK(gaussian_error_logpdf(10.0 * beta, two) == doctest::Approx(base - 99.0 / 2.0).epsilon(1e-14));

  KeyConditionSelection bad;
  bad.mu_beta = Vector::Zero(2);
  bad.R_beta = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(gaussian_error_logpdf(Vector::Zero(2), bad), NonPdCovarianceError);
}

TEST_CASE("Gaussian error density normalises") {
  KeyConditionSelection s;
  s.mu_beta = Vector::Constant(1, 0.1);
  s.R_beta = Matrix::Constant(1, 1, 0.25);
  const int n = 20001;
  std::vector<double> x(n), y(n);
  Vector b(1);
  for (int p = 0; p < n; ++p) {
    x[p] = 0.1 - 5.0 + 10.0 * p / (n - 1);
    b(0) = x[p];
    y[p] = std::exp(gaussian_error_logpdf(b, s));
  }
  CHECK(std::abs(trapezoid(x, y) - 1.0) <= 1e-8);
}

TEST_CASE("general symmetric covariance") {
  Matrix R(2, 2);
  R << 0.04, 0.01, 0.01, 0.09;
  GaussianErrorDensity d(Vector::Zero(2), R);
  Vector beta(2);
  beta << 0.1, -0.2;
  const double quad = beta.dot(R.inverse() * beta);
  CHECK(d.logpdf(beta) == doctest::Approx(-0.5 * (2 * std::log(2 * kPi) + std::log(R.determinant()) + quad)).epsilon(1e-13));
}
