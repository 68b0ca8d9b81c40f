#include <array>
#include <cmath>
#include <string>

#include "kcq/dynamics.hpp"
#include "kcq/errors.hpp"

namespace kcq::dynamics {

namespace {

// 3-point Gauss-Legendre on [0, 1].
constexpr double kGaussOffset = 0.38729833462074168852;  // sqrt(3/5) / 2
constexpr std::array<double, 3> kGaussS = {0.5 - kGaussOffset, 0.5, 0.5 + kGaussOffset};
constexpr std::array<double, 3> kGaussW = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

struct Hermite {
  std::array<double, 4> n, dn, ddn;  // values, d/dx, d2/dx2 for (w1, th1, w2, th2)
};

Hermite hermite(double s, double h) {
  Hermite out;
  const double s2 = s * s, s3 = s2 * s;
  out.n = {1.0 - 3.0 * s2 + 2.0 * s3, h * (s - 2.0 * s2 + s3), 3.0 * s2 - 2.0 * s3, h * (s3 - s2)};
  out.dn = {(-6.0 * s + 6.0 * s2) / h, 1.0 - 4.0 * s + 3.0 * s2, (6.0 * s - 6.0 * s2) / h, 3.0 * s2 - 2.0 * s};
  out.ddn = {(-6.0 + 12.0 * s) / (h * h), (-4.0 + 6.0 * s) / h, (6.0 - 12.0 * s) / (h * h), (-2.0 + 6.0 * s) / h};
  return out;
}

// Element dof vector ordering: u1, w1, th1, u2, w2, th2. Node 0 is clamped.
std::array<double, 6> gather(std::span<const double> u, std::size_t e) {
  std::array<double, 6> q{};
  for (std::size_t c = 0; c < 3; ++c) {
    if (e > 0) q[c] = u[BeamSystem::dof_index(e, c)];
    q[3 + c] = u[BeamSystem::dof_index(e + 1, c)];
  }
  return q;
}

void scatter(std::span<double> out, std::size_t e, const std::array<double, 6>& f) {
  for (std::size_t c = 0; c < 3; ++c) {
    if (e > 0) out[BeamSystem::dof_index(e, c)] += f[c];
    out[BeamSystem::dof_index(e + 1, c)] += f[3 + c];
  }
}

struct Strains {
  double ux, wx, wxx;
};

Strains strains(const std::array<double, 6>& q, const Hermite& H, double h) {
  Strains s;
  s.ux = (q[3] - q[0]) / h;
  s.wx = H.dn[0] * q[1] + H.dn[1] * q[2] + H.dn[2] * q[4] + H.dn[3] * q[5];
  s.wxx = H.ddn[0] * q[1] + H.ddn[1] * q[2] + H.ddn[2] * q[4] + H.ddn[3] * q[5];
  return s;
}

class BeamBound final : public BoundSystem {
 public:
  BeamBound(const BeamSystem& beam, std::vector<double> moduli, Matrix mass, Matrix damping, Vector load)
      : beam_(beam), moduli_(std::move(moduli)), mass_(std::move(mass)), damping_(std::move(damping)),
        load_(std::move(load)) {}

  std::size_t ndof() const override { return beam_.ndof(); }
  const Matrix& mass() const override { return mass_; }
  const Matrix& damping() const override { return damping_; }
  void restoring(std::span<const double> u, std::span<double> out) const override {
    beam_.restoring_with_moduli(u, moduli_, out);
  }
  void load(double, std::span<double> out) const override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = load_(static_cast<Eigen::Index>(i));
  }

 private:
  const BeamSystem& beam_;
  std::vector<double> moduli_;
  Matrix mass_;
  Matrix damping_;
  Vector load_;
};

sampling::ParameterSpace field_space(const randomfield::KLField& field) {
  return sampling::ParameterSpace(std::vector<sampling::Marginal>(field.M, sampling::Marginal::standard_normal()));
}

}  // namespace

BeamSystem::BeamSystem(std::size_t n_elements, randomfield::KLField field, BeamParams params)
    : DynamicalSystem("beam", 3 * n_elements, field_space(field), ParamLayout{{0, field.M}, {field.M, 0}, {}, {}}),
      n_elements_(n_elements),
      field_(std::move(field)),
      params_(params) {
  if (n_elements_ < 2) throw DomainError("beam needs at least 2 elements");
  if (!(params_.length > 0.0 && params_.width > 0.0 && params_.height > 0.0 && params_.line_density > 0.0)) {
    throw DomainError("beam geometry and density must be positive");
  }
  if (params_.length > 2.0 * field_.a_K * (1.0 + 1e-12)) {
    throw DomainError("beam is longer than the random-field domain");
  }
  const auto n = static_cast<Eigen::Index>(ndof());
  const double h = element_length();
  const double d = params_.line_density;
  mass_ = Matrix::Zero(n, n);
  load_vector_ = Vector::Zero(n);
  const double q = params_.load_direction * params_.distributed_load;
  Eigen::Matrix<double, 6, 6> me = Eigen::Matrix<double, 6, 6>::Zero();
  me(0, 0) = me(3, 3) = d * h / 3.0;
  me(0, 3) = me(3, 0) = d * h / 6.0;
  const double c = d * h / 420.0;
  const std::array<int, 4> wmap = {1, 2, 4, 5};
  const double hm[4][4] = {{156.0, 22.0 * h, 54.0, -13.0 * h},
                           {22.0 * h, 4.0 * h * h, 13.0 * h, -3.0 * h * h},
                           {54.0, 13.0 * h, 156.0, -22.0 * h},
                           {-13.0 * h, -3.0 * h * h, -22.0 * h, 4.0 * h * h}};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) me(wmap[a], wmap[b]) = c * hm[a][b];
  }
  const std::array<double, 6> fe = {0.0, q * h / 2.0, q * h * h / 12.0, 0.0, q * h / 2.0, -q * h * h / 12.0};
  for (std::size_t e = 0; e < n_elements_; ++e) {
    std::array<long, 6> idx{};
    for (std::size_t comp = 0; comp < 3; ++comp) {
      idx[comp] = e > 0 ? static_cast<long>(dof_index(e, comp)) : -1;
      idx[3 + comp] = static_cast<long>(dof_index(e + 1, comp));
    }
    for (int a = 0; a < 6; ++a) {
      if (idx[a] < 0) continue;
      load_vector_(idx[a]) += fe[a];
      for (int b = 0; b < 6; ++b) {
        if (idx[b] >= 0) mass_(idx[a], idx[b]) += me(a, b);
      }
    }
  }
}

std::vector<double> BeamSystem::element_moduli(std::span<const double> eps) const {
  if (eps.size() != field_.M) throw ShapeError("beam expects " + std::to_string(field_.M) + " field coordinates");
  std::vector<double> out(n_elements_);
  const double h = element_length();
  for (std::size_t e = 0; e < n_elements_; ++e) {
    out[e] = randomfield::field_value(field_, (static_cast<double>(e) + 0.5) * h, eps);
  }
  return out;
}

Matrix BeamSystem::mass(std::span<const double>) const { return mass_; }

Matrix BeamSystem::damping(std::span<const double>) const {
  return (params_.damping_per_length / params_.line_density) * mass_;
}

void BeamSystem::restoring(std::span<const double> u, std::span<const double> eps, std::span<double> out) const {
  restoring_with_moduli(u, element_moduli(eps), out);
}

void BeamSystem::restoring_with_moduli(std::span<const double> u, std::span<const double> moduli,
                                       std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const double h = element_length();
  const double A = area();
  const double I = inertia();
  const double nl = params_.nonlinearity;
  for (std::size_t e = 0; e < n_elements_; ++e) {
    const auto q = gather(u, e);
    std::array<double, 6> f{};
    for (std::size_t g = 0; g < 3; ++g) {
      const Hermite H = hermite(kGaussS[g], h);
      const Strains s = strains(q, H, h);
      const double jw = kGaussW[g] * h;
      const double N = moduli[e] * A * (s.ux + 0.5 * nl * s.wx * s.wx);
      const double Mb = moduli[e] * I * s.wxx;
      f[0] -= jw * N / h;
      f[3] += jw * N / h;
      const double a = jw * N * nl * s.wx;
      const double b = jw * Mb;
      f[1] += a * H.dn[0] + b * H.ddn[0];
      f[2] += a * H.dn[1] + b * H.ddn[1];
      f[4] += a * H.dn[2] + b * H.ddn[2];
      f[5] += a * H.dn[3] + b * H.ddn[3];
    }
    scatter(out, e, f);
  }
}

double BeamSystem::strain_energy(std::span<const double> u, std::span<const double> eps) const {
  const auto moduli = element_moduli(eps);
  const double h = element_length();
  const double nl = params_.nonlinearity;
  double energy = 0.0;
  for (std::size_t e = 0; e < n_elements_; ++e) {
    const auto q = gather(u, e);
    for (std::size_t g = 0; g < 3; ++g) {
      const Strains s = strains(q, hermite(kGaussS[g], h), h);
      const double axial = s.ux + 0.5 * nl * s.wx * s.wx;
      energy += kGaussW[g] * h * 0.5 * moduli[e] * (area() * axial * axial + inertia() * s.wxx * s.wxx);
    }
  }
  return energy;
}

void BeamSystem::load(double, std::span<const double>, std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = load_vector_(static_cast<Eigen::Index>(i));
}

Interpolant BeamSystem::locate(double x) const {
  const double L = params_.length;
  if (!(x >= -1e-12 * L && x <= L * (1.0 + 1e-12))) {
    throw ResolutionError("x=" + std::to_string(x) + " lies outside the beam [0, " + std::to_string(L) + "]");
  }
  const double h = element_length();
  auto e = static_cast<std::size_t>(std::floor(std::max(x, 0.0) / h));
  if (e >= n_elements_) e = n_elements_ - 1;
  const double s = std::clamp((x - static_cast<double>(e) * h) / h, 0.0, 1.0);
  const Hermite H = hermite(s, h);
  Interpolant out;
  if (e > 0) {
    out.terms.emplace_back(dof_index(e, 1), H.n[0]);
    out.terms.emplace_back(dof_index(e, 2), H.n[1]);
  }
  out.terms.emplace_back(dof_index(e + 1, 1), H.n[2]);
  out.terms.emplace_back(dof_index(e + 1, 2), H.n[3]);
  return out;
}

std::unique_ptr<BoundSystem> BeamSystem::bind(std::span<const double> alpha) const {
  if (alpha.size() != space().dim()) {
    throw ShapeError("alpha has length " + std::to_string(alpha.size()) + ", beam expects " +
                     std::to_string(space().dim()));
  }
  return std::make_unique<BeamBound>(*this, element_moduli(layout().eps.of(alpha)), mass_, damping({}),
                                     load_vector_);
}

std::unique_ptr<BeamSystem> make_beam_system(std::size_t n_elements, const randomfield::KLField& field,
                                             BeamParams params) {
  auto beam = std::make_unique<BeamSystem>(n_elements, field, params);
  beam->check_mass_positive_definite();
  return beam;
}

randomfield::KLField default_beam_field(std::size_t M) { return randomfield::make_kl_field(2e11, 3.0, 0.333, 0.2, M); }

}  // namespace kcq::dynamics
