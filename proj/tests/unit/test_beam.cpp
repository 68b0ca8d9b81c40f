#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kcq/dynamics.hpp"
#include "kcq/errors.hpp"

using namespace kcq;
using namespace kcq::dynamics;

namespace {

std::vector<double> zero_eps() { return std::vector<double>(10, 0.0); }

}  // namespace

TEST_CASE("mean field gives the nominal modulus everywhere") {
  const auto beam = make_beam_system(4, default_beam_field(10));
  for (double E : beam->element_moduli(zero_eps())) CHECK(E == 2e11);
  CHECK(beam->ndof() == 12);
  CHECK(beam->element_length() == 0.75);
}

TEST_CASE("construction checks") {
  CHECK_THROWS(make_beam_system(1, default_beam_field(10)));
  BeamParams long_beam;
  long_beam.length = 7.0;
  CHECK_THROWS(make_beam_system(4, default_beam_field(10), long_beam));
}

TEST_CASE("no pre-stress and symmetric positive definite mass") {
  const auto beam = make_beam_system(5, default_beam_field(10));
  std::vector<double> u(beam->ndof(), 0.0), f(beam->ndof(), 1.0);
  beam->restoring(u, zero_eps(), f);
  for (double v : f) CHECK(v == 0.0);
  const Matrix M = beam->mass(zero_eps());
  CHECK(M.isApprox(M.transpose(), 0.0));
  CHECK(M.llt().info() == Eigen::Success);
  CHECK(beam->damping(zero_eps()).isApprox(40.0 * M));
  CHECK_NOTHROW(beam->check_mass_positive_definite());
}

TEST_CASE("consistent mass integrates to the total mass") {
  // Rigid transverse translation w = 1 of the free nodes: the clamped node does
  // not move, so compare against the closed form for that shape instead.
  const auto beam = make_beam_system(4, default_beam_field(10));
  const Matrix M = beam->mass(zero_eps());
  Vector axial = Vector::Zero(12);
  for (std::size_t n = 1; n <= 4; ++n) axial(static_cast<Eigen::Index>(BeamSystem::dof_index(n, 0))) = 1.0;
  // Linear axial shapes: interior elements move rigidly, the first is a ramp 0->1.
  const double d = 100.0, h = 0.75;
  const double expected = d * (3 * h + h / 3.0);
  CHECK(axial.dot(M * axial) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("restoring force is the gradient of the strain energy") {
  const auto beam = make_beam_system(4, default_beam_field(10));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> eps(10);
  for (int trial = 0; trial < 10; ++trial) {
    for (auto& e : eps) e = nd(rng);
    std::vector<double> u(12);
    for (std::size_t n = 1; n <= 4; ++n) {
      u[BeamSystem::dof_index(n, 0)] = 1e-3 * nd(rng);
      u[BeamSystem::dof_index(n, 1)] = 0.1 * nd(rng);
      u[BeamSystem::dof_index(n, 2)] = 0.05 * nd(rng);
    }
    std::vector<double> F(12);
    beam->restoring(u, eps, F);
    // Fourth-order central differences.
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < 12; ++j) {
      const double h = 1e-5 * std::max(1e-2, std::abs(u[j]));
      auto E = [&](double delta) {
        auto v = u;
        v[j] += delta;
        return beam->strain_energy(v, eps);
      };
      const double grad = (-E(2 * h) + 8 * E(h) - 8 * E(-h) + E(-2 * h)) / (12 * h);
      worst = std::max(worst, std::abs(F[j] - grad));
      scale = std::max(scale, std::abs(F[j]));
    }
    CHECK(worst / scale < 1e-6);
  }
}

TEST_CASE("static linear limit matches the cantilever closed form") {
  BeamParams p;
  p.nonlinearity = 0.0;
  p.distributed_load = 5e4 * 1e-6;
  const auto beam = make_beam_system(10, default_beam_field(10), p);
  const auto eps = zero_eps();
  const std::size_t n = beam->ndof();
  // The linear restoring force is K u; recover K column by column.
  Matrix K(n, n);
  std::vector<double> e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    beam->restoring(e, eps, col);
    for (std::size_t i = 0; i < n; ++i) K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  std::vector<double> f(n);
  beam->load(0.0, {}, f);
  const Vector u = K.partialPivLu().solve(Eigen::Map<Vector>(f.data(), static_cast<Eigen::Index>(n)));
  const double q = p.distributed_load;
  const double EI = 2e11 * beam->inertia();
  const double L = 3.0;
  const double expected = -q * std::pow(L, 4) / (8.0 * EI);
  const double tip = u(static_cast<Eigen::Index>(BeamSystem::dof_index(10, 1)));
  MESSAGE("tip " << tip << " closed form " << expected);
  CHECK(std::abs(tip - expected) <= 0.01 * std::abs(expected));
}

TEST_CASE("load vector is the consistent distributed load") {
  const auto beam = make_beam_system(4, default_beam_field(10));
  std::vector<double> f(12);
  beam->load(0.0, {}, f);
  double total = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    CHECK(f[BeamSystem::dof_index(n, 0)] == 0.0);
    total += f[BeamSystem::dof_index(n, 1)];
  }
  // The clamped node takes half an element's share.
  CHECK(total == doctest::Approx(-5e4 * (3.0 - 0.75 / 2.0)));
  CHECK(f[BeamSystem::dof_index(4, 2)] == doctest::Approx(5e4 * 0.75 * 0.75 / 12.0));
}

TEST_CASE("interpolation reproduces nodes and matches an independent cubic") {
  const auto beam = make_beam_system(4, default_beam_field(10));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  Vector u(12);
  for (Eigen::Index i = 0; i < 12; ++i) u(i) = nd(rng);
  auto eval = [&](double x) {
    double v = 0.0;
    for (const auto& [dof, c] : beam->locate(x).terms) v += c * u(static_cast<Eigen::Index>(dof));
    return v;
  };
  CHECK(eval(1.5) == u(static_cast<Eigen::Index>(BeamSystem::dof_index(2, 1))));
  CHECK(eval(3.0) == u(static_cast<Eigen::Index>(BeamSystem::dof_index(4, 1))));
  CHECK(eval(0.0) == 0.0);

  // Element 2 spans [1.5, 2.25]: solve for the cubic a + b x + c x^2 + d x^3 matching
  // values and slopes at both ends, then evaluate it.
  const double x1 = 1.5, x2 = 2.25;
  Matrix A(4, 4);
  A << 1, x1, x1 * x1, x1 * x1 * x1, 0, 1, 2 * x1, 3 * x1 * x1, 1, x2, x2 * x2, x2 * x2 * x2, 0, 1, 2 * x2, 3 * x2 * x2;
  Vector rhs(4);
  rhs << u(static_cast<Eigen::Index>(BeamSystem::dof_index(2, 1))), u(static_cast<Eigen::Index>(BeamSystem::dof_index(2, 2))),
      u(static_cast<Eigen::Index>(BeamSystem::dof_index(3, 1))), u(static_cast<Eigen::Index>(BeamSystem::dof_index(3, 2)));
  const Vector c = A.fullPivLu().solve(rhs);
  for (double x : {1.6, 1.875, 2.2}) {
    const double poly = c(0) + c(1) * x + c(2) * x * x + c(3) * x * x * x;
    CHECK(eval(x) == doctest::Approx(poly).epsilon(1e-10));
  }
  CHECK_THROWS_AS(beam->locate(3.5), ResolutionError);
  CHECK_THROWS_AS(beam->locate(-0.1), ResolutionError);
}

TEST_CASE("tip responds downwards under the default load") {
  const auto beam = make_beam_system(4, default_beam_field(10));
  const auto eps = zero_eps();
  const auto traj = integrate(*beam, eps, Vector::Zero(24), 0.001, 100);
  const double tip = qoi_value(traj, QoISpec::at_x(QoIKind::displacement, 3.0), 100, *beam);
  CHECK(tip < 0.0);
  CHECK(std::isfinite(tip));
}
