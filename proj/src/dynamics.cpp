#include "kcq/dynamics.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "kcq/errors.hpp"

namespace kcq::dynamics {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw DomainError("cannot parse number '" + text + "' in " + context);
  return v;
}

class GenericBound final : public BoundSystem {
 public:
  GenericBound(const DynamicalSystem& system, std::span<const double> alpha)
      : system_(system),
        eps_(system.layout().eps.of(alpha).begin(), system.layout().eps.of(alpha).end()),
        theta_(system.layout().theta.of(alpha).begin(), system.layout().theta.of(alpha).end()),
        mass_(system.mass(eps_)),
        damping_(system.damping(eps_)) {}

  std::size_t ndof() const override { return system_.ndof(); }
  const Matrix& mass() const override { return mass_; }
  const Matrix& damping() const override { return damping_; }
  void restoring(std::span<const double> u, std::span<double> out) const override {
    system_.restoring(u, eps_, out);
  }
  void load(double t, std::span<double> out) const override { system_.load(t, theta_, out); }

 private:
  const DynamicalSystem& system_;
  std::vector<double> eps_;
  std::vector<double> theta_;
  Matrix mass_;
  Matrix damping_;
};

std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

std::string QoISpec::to_string() const {
  std::string out = kind == QoIKind::displacement ? "displacement" : "velocity";
  if (dof) return out + ":dof=" + std::to_string(*dof);
  return out + ":x=" + format_number(x.value_or(0.0));
}

std::string QoISpec::channel_name() const {
  std::string out = kind == QoIKind::displacement ? "displacement" : "velocity";
  if (dof) return out + "_dof" + std::to_string(*dof);
  std::string num = format_number(x.value_or(0.0));
  for (char& c : num) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
    if (c == '+') c = 'P';
  }
  return out + "_x" + num;
}

QoISpec QoISpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw DomainError("QoI '" + text + "' must look like displacement:dof=0 or velocity:x=3");
  }
  const std::string kind_text = text.substr(0, colon);
  QoISpec spec;
  if (kind_text == "displacement" || kind_text == "disp" || kind_text == "u") {
    spec.kind = QoIKind::displacement;
  } else if (kind_text == "velocity" || kind_text == "vel" || kind_text == "v") {
    spec.kind = QoIKind::velocity;
  } else {
    throw DomainError("unknown QoI kind '" + kind_text + "'");
  }
  const std::string loc = text.substr(colon + 1);
  if (loc.rfind("dof=", 0) == 0) {
    const double d = parse_double(loc.substr(4), text);
    if (d < 0 || d != std::floor(d)) throw DomainError("dof index must be a non-negative integer in '" + text + "'");
    spec.dof = static_cast<std::size_t>(d);
  } else if (loc.rfind("x=", 0) == 0) {
    spec.x = parse_double(loc.substr(2), text);
  } else {
    throw DomainError("QoI location in '" + text + "' must be dof=<index> or x=<metres>");
  }
  return spec;
}

Interpolant DynamicalSystem::locate(double x) const {
  throw ResolutionError("system '" + name_ + "' has no spatial mesh; cannot resolve x=" + format_number(x));
}

std::unique_ptr<BoundSystem> DynamicalSystem::bind(std::span<const double> alpha) const {
  if (alpha.size() != space_.dim()) {
    throw ShapeError("alpha has length " + std::to_string(alpha.size()) + ", system '" + name_ + "' expects " +
                     std::to_string(space_.dim()));
  }
  return std::make_unique<GenericBound>(*this, alpha);
}

Vector DynamicalSystem::initial_state(std::span<const double> alpha) const {
  Vector U = Vector::Zero(static_cast<Eigen::Index>(2 * ndof_));
  if (layout_.u0.count == ndof_) {
    for (std::size_t i = 0; i < ndof_; ++i) U(static_cast<Eigen::Index>(i)) = alpha[layout_.u0.offset + i];
  }
  if (layout_.s0.count == ndof_) {
    for (std::size_t i = 0; i < ndof_; ++i) U(static_cast<Eigen::Index>(ndof_ + i)) = alpha[layout_.s0.offset + i];
  }
  return U;
}

void DynamicalSystem::check_mass_positive_definite() const {
  std::vector<double> centre(space_.dim());
  for (std::size_t j = 0; j < space_.dim(); ++j) centre[j] = space_.marginal(j).mean();
  auto check = [&](const std::vector<double>& alpha) {
    const Matrix M = mass(layout_.eps.of(alpha));
    if (!M.isApprox(M.transpose(), 1e-12)) throw DomainError("mass matrix of '" + name_ + "' is not symmetric");
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) {
      throw DomainError("mass matrix of '" + name_ + "' is not positive definite");
    }
  };
  check(centre);
  for (std::size_t j = layout_.eps.offset; j < layout_.eps.offset + layout_.eps.count; ++j) {
    for (double sign : {-6.0, 6.0}) {
      auto alpha = centre;
      alpha[j] += sign * space_.marginal(j).sd();
      check(alpha);
    }
  }
}

LinearSystem::LinearSystem(Matrix M, Matrix C, Matrix K, LoadFn load)
    : DynamicalSystem("linear", static_cast<std::size_t>(M.rows()),
                      sampling::ParameterSpace({sampling::Marginal::standard_normal()}), ParamLayout{}),
      M_(std::move(M)),
      C_(std::move(C)),
      K_(std::move(K)),
      load_(std::move(load)) {
  if (M_.rows() != M_.cols() || C_.rows() != M_.rows() || K_.rows() != M_.rows() || C_.cols() != M_.cols() ||
      K_.cols() != M_.cols()) {
    throw ShapeError("linear system matrices must be square and of equal size");
  }
}

void LinearSystem::restoring(std::span<const double> u, std::span<const double>, std::span<double> out) const {
  Eigen::Map<const Vector> uv(u.data(), static_cast<Eigen::Index>(u.size()));
  Eigen::Map<Vector>(out.data(), static_cast<Eigen::Index>(out.size())) = K_ * uv;
}

void LinearSystem::load(double t, std::span<const double>, std::span<double> out) const {
  if (load_) {
    load_(t, out);
  } else {
    std::fill(out.begin(), out.end(), 0.0);
  }
}

Interpolant LinearSystem::locate(double x) const {
  throw ResolutionError("linear system has no spatial mesh; cannot resolve x=" + format_number(x));
}

SdofSystem::SdofSystem()
    : DynamicalSystem("sdof", 1,
                      sampling::ParameterSpace({sampling::Marginal::normal(0.0, kParameterSd),
                                                sampling::Marginal::normal(0.0, kParameterSd)}),
                      ParamLayout{{0, 2}, {2, 0}, {2, 0}, {2, 0}}) {}

Matrix SdofSystem::mass(std::span<const double>) const { return Matrix::Constant(1, 1, kMass); }

Matrix SdofSystem::damping(std::span<const double> eps) const {
  return Matrix::Constant(1, 1, kDamping * (1.0 + eps[0]));
}

void SdofSystem::restoring(std::span<const double> u, std::span<const double> eps, std::span<double> out) const {
  out[0] = stiffness(eps) * u[0];
}

void SdofSystem::load(double t, std::span<const double>, std::span<double> out) const {
  out[0] = 10.0 * std::sin(3.0 * t);
}

std::unique_ptr<DynamicalSystem> make_sdof_system() {
  auto system = std::make_unique<SdofSystem>();
  system->check_mass_positive_definite();
  return system;
}

double bridge_load(double t) {
  const double a = 20.0 - t;
  const double b = 20.0 + t;
  return -1.0e5 * (std::sin(0.02 * a * a) - std::sin(0.02 * b * b));
}

RayleighCoefficients rayleigh_damping(const Matrix& M, const Matrix& K_linearized, double zeta,
                                      std::pair<double, double> omegas) {
  const auto [w1, w2] = omegas;
  if (!(w1 > 0.0 && w2 > 0.0)) throw DomainError("rayleigh damping needs positive frequencies");
  if (std::abs(w1 - w2) <= 1e-12 * std::max(w1, w2)) {
    throw DegenerateFrequenciesError("rayleigh damping frequencies coincide (" + format_number(w1) + ")");
  }
  if (M.rows() != K_linearized.rows() || M.cols() != K_linearized.cols()) {
    throw ShapeError("rayleigh damping: M and K differ in shape");
  }
  Eigen::Matrix2d A;
  A << 0.5 / w1, 0.5 * w1, 0.5 / w2, 0.5 * w2;
  const Eigen::Vector2d ab = A.fullPivLu().solve(Eigen::Vector2d(zeta, zeta));
  RayleighCoefficients out;
  out.a = ab(0);
  out.b = ab(1);
  out.C = out.a * M + out.b * K_linearized;
  return out;
}

Matrix tangent_stiffness(const DynamicalSystem& system, std::span<const double> u, std::span<const double> eps) {
  const auto n = system.ndof();
  Matrix K(n, n);
  std::vector<double> up(u.begin(), u.end()), fp(n), fm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(u[j]));
    up[j] = u[j] + h;
    system.restoring(up, eps, fp);
    up[j] = u[j] - h;
    system.restoring(up, eps, fm);
    up[j] = u[j];
    for (std::size_t i = 0; i < n; ++i) {
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (fp[i] - fm[i]) / (2.0 * h);
    }
  }
  return K;
}

double default_step_tolerance(const Vector& U_prev) { return 1e-10 * (1.0 + U_prev.lpNorm<Eigen::Infinity>()); }

MidpointStepper::MidpointStepper(const DynamicalSystem& system, std::span<const double> alpha)
    : bound_(system.bind(alpha)), mass_factor_(bound_->mass()), ndof_(system.ndof()) {
  if (mass_factor_.info() != Eigen::Success) throw DomainError("mass matrix is not positive definite");
  const auto n = static_cast<Eigen::Index>(ndof_);
  force_.resize(n);
  load_.resize(n);
  accel_.resize(n);
  mid_.resize(2 * n);
  work_res_.resize(2 * n);
  work_pert_.resize(2 * n);
}

void MidpointStepper::rhs(double t, const Vector& U, Vector& out) const {
  bound_->load(t, as_span(load_));
  rhs_with_load(U, out);
}

void MidpointStepper::rhs_with_load(const Vector& U, Vector& out) const {
  const auto n = static_cast<Eigen::Index>(ndof_);
  out.resize(2 * n);
  bound_->restoring({U.data(), ndof_}, as_span(force_));
  accel_.noalias() = load_ - force_;
  accel_.noalias() -= bound_->damping() * U.tail(n);
  out.head(n) = U.tail(n);
  out.tail(n) = mass_factor_.solve(accel_);
}

void MidpointStepper::residual(const Vector& U, const Vector& U_prev, double dt, Vector& out) const {
  mid_ = 0.5 * (U + U_prev);
  rhs_with_load(mid_, out);
  out = U - U_prev - dt * out;
}

void MidpointStepper::refresh_jacobian(const Vector& U, const Vector& U_prev, double dt) {
  const auto m = U.size();
  Matrix J(m, m);
  residual(U, U_prev, dt, work_res_);
  work_pert_ = U;
  Vector r_pert(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double h = 1e-7 * std::max(1.0, std::abs(U(j)));
    work_pert_(j) = U(j) + h;
    residual(work_pert_, U_prev, dt, r_pert);
    work_pert_(j) = U(j);
    J.col(j) = (r_pert - work_res_) / h;
  }
  newton_.compute(J);
  has_newton_ = true;
  newton_dt_ = dt;
}

Vector MidpointStepper::step(const Vector& U_prev, double t_prev, double dt, double tol, int max_iter) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (U_prev.size() != static_cast<Eigen::Index>(2 * ndof_)) throw ShapeError("state has the wrong length");
  if (!U_prev.allFinite()) throw NonFiniteInputError("previous state is not finite");
  if (!(tol > 0.0)) tol = default_step_tolerance(U_prev);
  bound_->load(t_prev + 0.5 * dt, as_span(load_));

  Vector U = U_prev;
  Vector R(U.size());
  residual(U, U_prev, dt, R);
  double rn = R.lpNorm<Eigen::Infinity>();
  int iterations = 0;
  last_iterations_ = 0;
  if (rn <= tol) return U;

  if (!prefer_newton_) {
    // Damped fixed-point: U <- U - relax * R, halving relax when the residual grows.
    double relax = 1.0;
    Vector trial(U.size()), Rt(U.size());
    for (int fp = 0; fp < 10 && iterations < max_iter; ++fp) {
      trial = U - relax * R;
      residual(trial, U_prev, dt, Rt);
      ++iterations;
      const double tn = Rt.lpNorm<Eigen::Infinity>();
      if (!(tn <= rn)) {
        relax *= 0.5;
        continue;
      }
      U.swap(trial);
      R.swap(Rt);
      rn = tn;
      if (rn <= tol) {
        last_iterations_ = iterations;
        return U;
      }
    }
    prefer_newton_ = true;
  }

  bool fresh = false;
  if (!has_newton_ || newton_dt_ != dt) {
    refresh_jacobian(U, U_prev, dt);
    fresh = true;
  }
  Vector delta(U.size());
  while (iterations < max_iter) {
    delta = newton_.solve(R);
    const Vector U_next = U - delta;
    Vector R_next(U.size());
    residual(U_next, U_prev, dt, R_next);
    ++iterations;
    const double next = R_next.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(next) || next > 0.5 * rn) {
      if (!fresh) {
        // Stale matrix: rebuild at the current iterate and retry from there.
        refresh_jacobian(U, U_prev, dt);
        fresh = true;
        if (std::isfinite(next) && next < rn) {
          U = U_next;
          R = R_next;
          rn = next;
        }
        if (rn <= tol) break;
        continue;
      }
    }
    if (std::isfinite(next)) {
      U = U_next;
      R = R_next;
      rn = next;
    }
    fresh = false;
    if (rn <= tol) break;
  }
  last_iterations_ = iterations;
  if (!(rn <= tol)) {
    throw ConvergenceError("midpoint step did not converge in " + std::to_string(max_iter) +
                               " iterations (residual " + format_number(rn) + ")",
                           rn);
  }
  return U;
}

Vector midpoint_step(const DynamicalSystem& system, std::span<const double> alpha, const Vector& U_prev,
                     double t_prev, double dt, double tol, int max_iter) {
  MidpointStepper stepper(system, alpha);
  return stepper.step(U_prev, t_prev, dt, tol, max_iter);
}

StateTrajectory integrate(const DynamicalSystem& system, std::span<const double> alpha, const Vector& U0,
                          double dt, std::size_t n_steps, double tol, int max_iter) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (U0.size() != static_cast<Eigen::Index>(2 * system.ndof())) throw ShapeError("initial state has the wrong length");
  StateTrajectory traj;
  traj.times.resize(n_steps + 1);
  traj.states.resize(static_cast<Eigen::Index>(n_steps + 1), U0.size());
  traj.times[0] = 0.0;
  traj.states.row(0) = U0.transpose();
  if (n_steps == 0) return traj;
  MidpointStepper stepper(system, alpha);
  Vector U = U0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * dt;
    try {
      U = stepper.step(U, t_prev, dt, tol, max_iter);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string(e.what()) + " at step " + std::to_string(k), e.residual(),
                             static_cast<long>(k));
    }
    traj.times[k] = static_cast<double>(k) * dt;
    traj.states.row(static_cast<Eigen::Index>(k)) = U.transpose();
  }
  return traj;
}

QoIReader::QoIReader(const DynamicalSystem& system, const QoISpec& spec)
    : spec_(spec), offset_(spec.kind == QoIKind::displacement ? 0 : system.ndof()) {
  if (spec.dof) {
    if (*spec.dof >= system.ndof()) {
      throw ResolutionError("dof " + std::to_string(*spec.dof) + " outside system '" + system.name() + "' with " +
                            std::to_string(system.ndof()) + " dofs");
    }
    interp_.terms = {{*spec.dof, 1.0}};
  } else if (spec.x) {
    interp_ = system.locate(*spec.x);
  } else {
    throw ResolutionError("QoI has neither a dof nor a coordinate");
  }
}

double QoIReader::read(std::span<const double> state) const {
  double value = 0.0;
  for (const auto& [dof, coef] : interp_.terms) value += coef * state[offset_ + dof];
  return value;
}

double qoi_value(const StateTrajectory& traj, const QoISpec& spec, std::size_t k, const DynamicalSystem& system) {
  if (k >= static_cast<std::size_t>(traj.states.rows())) {
    throw IndexError("step " + std::to_string(k) + " outside trajectory of " + std::to_string(traj.states.rows()) +
                     " states");
  }
  QoIReader reader(system, spec);
  const auto row = traj.states.row(static_cast<Eigen::Index>(k));
  return reader.read({row.data(), static_cast<std::size_t>(row.size())});
}

}  // namespace kcq::dynamics
