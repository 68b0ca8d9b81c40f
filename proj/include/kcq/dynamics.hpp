#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kcq/randomfield.hpp"
#include "kcq/sampling.hpp"
#include "kcq/types.hpp"

namespace kcq::dynamics {

/// Contiguous slice of the parameter vector alpha.
struct ParamRange {
  std::size_t offset = 0;
  std::size_t count = 0;

  std::span<const double> of(std::span<const double> alpha) const { return alpha.subspan(offset, count); }
};

/// Which coordinates of alpha play the structural (eps), load (theta) and
/// initial-condition roles. Empty initial-condition ranges mean a zero state.
struct ParamLayout {
  ParamRange eps;
  ParamRange theta;
  ParamRange u0;
  ParamRange s0;
};

enum class QoIKind { displacement, velocity };

/// A scalar response: displacement or velocity at a dof or at a coordinate x (m).
struct QoISpec {
  QoIKind kind = QoIKind::displacement;
  std::optional<std::size_t> dof;
  std::optional<double> x;

  static QoISpec at_dof(QoIKind kind, std::size_t dof) { return {kind, dof, std::nullopt}; }
  static QoISpec at_x(QoIKind kind, double x) { return {kind, std::nullopt, x}; }

  /// Text form used in configs and file headers: "displacement:dof=0", "velocity:x=3".
  std::string to_string() const;
  /// File-name-safe form: "displacement_dof0", "velocity_x3".
  std::string channel_name() const;
  static QoISpec parse(const std::string& text);

  bool operator==(const QoISpec&) const = default;
};

/// Sparse shape-function row N(x): response = sum of coefficient * dof value.
struct Interpolant {
  std::vector<std::pair<std::size_t, double>> terms;
};

/// A system with its random parameters fixed. Mass and damping are evaluated
/// once; restoring force and load are called on every right-hand-side evaluation.
class BoundSystem {
 public:
  virtual ~BoundSystem() = default;

  virtual std::size_t ndof() const = 0;
  virtual const Matrix& mass() const = 0;
  virtual const Matrix& damping() const = 0;
  virtual void restoring(std::span<const double> u, std::span<double> out) const = 0;
  virtual void load(double t, std::span<double> out) const = 0;
};

/// M(eps) u'' + C(eps) u' + F(u, eps) = f(theta, t).
class DynamicalSystem {
 public:
  DynamicalSystem(std::string name, std::size_t ndof, sampling::ParameterSpace space, ParamLayout layout)
      : name_(std::move(name)), ndof_(ndof), space_(std::move(space)), layout_(layout) {}
  virtual ~DynamicalSystem() = default;

  const std::string& name() const noexcept { return name_; }
  std::size_t ndof() const noexcept { return ndof_; }
  const sampling::ParameterSpace& space() const noexcept { return space_; }
  const ParamLayout& layout() const noexcept { return layout_; }

  virtual Matrix mass(std::span<const double> eps) const = 0;
  virtual Matrix damping(std::span<const double> eps) const = 0;
  virtual void restoring(std::span<const double> u, std::span<const double> eps, std::span<double> out) const = 0;
  virtual void load(double t, std::span<const double> theta, std::span<double> out) const = 0;

  /// Shape-function row for a spatial coordinate. Systems without geometry throw ResolutionError.
  virtual Interpolant locate(double x) const;

  /// Binds alpha; the default caches M and C and forwards the rest.
  virtual std::unique_ptr<BoundSystem> bind(std::span<const double> alpha) const;

  /// Initial state [u0; s0] taken from alpha, zeros where the layout has no slice.
  Vector initial_state(std::span<const double> alpha) const;

  /// Throws if M(eps) is not symmetric positive definite at the centre and the
  /// +/-6 sd axis points of the parameter space.
  void check_mass_positive_definite() const;

 private:
  std::string name_;
  std::size_t ndof_;
  sampling::ParameterSpace space_;
  ParamLayout layout_;
};

/// Constant-coefficient linear system M u'' + C u' + K u = f(t).
class LinearSystem final : public DynamicalSystem {
 public:
  using LoadFn = std::function<void(double t, std::span<double> out)>;

  LinearSystem(Matrix M, Matrix C, Matrix K, LoadFn load);

  Matrix mass(std::span<const double>) const override { return M_; }
  Matrix damping(std::span<const double>) const override { return C_; }
  void restoring(std::span<const double> u, std::span<const double> eps, std::span<double> out) const override;
  void load(double t, std::span<const double> theta, std::span<double> out) const override;
  Interpolant locate(double x) const override;

 private:
  Matrix M_, C_, K_;
  LoadFn load_;
};

/// Single-degree-of-freedom mass-spring-damper with random damping and stiffness.
class SdofSystem final : public DynamicalSystem {
 public:
  SdofSystem();

  static constexpr double kMass = 5.0;
  static constexpr double kDamping = 5.0;
  static constexpr double kStiffness = 11.0;
  static constexpr double kParameterSd = 0.2;

  Matrix mass(std::span<const double> eps) const override;
  Matrix damping(std::span<const double> eps) const override;
  void restoring(std::span<const double> u, std::span<const double> eps, std::span<double> out) const override;
  void load(double t, std::span<const double> theta, std::span<double> out) const override;
  double stiffness(std::span<const double> eps) const { return kStiffness * (1.0 + eps[1]); }
};

std::unique_ptr<DynamicalSystem> make_sdof_system();

struct BeamParams {
  double length = 3.0;
  double width = 0.1;
  double height = 0.1;
  double line_density = 100.0;
  /// Viscous damping per unit length for both axial and transverse motion.
  double damping_per_length = 40.0 * 100.0;
  double distributed_load = 5e4;
  /// -1 applies the load in the negative transverse direction (downwards).
  double load_direction = -1.0;
  /// Scales the von Karman coupling terms; 0 gives the linear beam.
  double nonlinearity = 1.0;
};

/// Geometrically nonlinear cantilever (clamped at x = 0) with 2-node elements:
/// linear axial and cubic Hermite transverse interpolation. Element modulus is
/// the random field sampled at the element midpoint.
class BeamSystem final : public DynamicalSystem {
 public:
  BeamSystem(std::size_t n_elements, randomfield::KLField field, BeamParams params = {});

  std::size_t n_elements() const noexcept { return n_elements_; }
  const BeamParams& params() const noexcept { return params_; }
  const randomfield::KLField& field() const noexcept { return field_; }
  double element_length() const noexcept { return params_.length / static_cast<double>(n_elements_); }
  double area() const noexcept { return params_.width * params_.height; }
  double inertia() const noexcept { return params_.width * std::pow(params_.height, 3) / 12.0; }

  std::vector<double> element_moduli(std::span<const double> eps) const;

  Matrix mass(std::span<const double> eps) const override;
  Matrix damping(std::span<const double> eps) const override;
  void restoring(std::span<const double> u, std::span<const double> eps, std::span<double> out) const override;
  void load(double t, std::span<const double> theta, std::span<double> out) const override;
  Interpolant locate(double x) const override;
  std::unique_ptr<BoundSystem> bind(std::span<const double> alpha) const override;

  /// Discrete strain energy whose gradient is the restoring force.
  double strain_energy(std::span<const double> u, std::span<const double> eps) const;

  /// Free-dof index of (node, component) with component 0 = axial, 1 = w, 2 = rotation.
  static std::size_t dof_index(std::size_t node, std::size_t component) { return 3 * (node - 1) + component; }

  void restoring_with_moduli(std::span<const double> u, std::span<const double> moduli, std::span<double> out) const;

 private:
  std::size_t n_elements_;
  randomfield::KLField field_;
  BeamParams params_;
  Matrix mass_;
  Vector load_vector_;
};

std::unique_ptr<BeamSystem> make_beam_system(std::size_t n_elements, const randomfield::KLField& field,
                                             BeamParams params = {});

/// Paper-default modulus field: E0 = 2e11 Pa, a_K = 3, c_K = 0.333, sigma_E = 0.2.
randomfield::KLField default_beam_field(std::size_t M = 10);

/// Distributed load of the cable-stayed-bridge deck (N/m^2).
double bridge_load(double t);

struct RayleighCoefficients {
  double a = 0.0;
  double b = 0.0;
  Matrix C;
};

/// C = a M + b K with zeta = (a/omega + b omega)/2 at both frequencies.
RayleighCoefficients rayleigh_damping(const Matrix& M, const Matrix& K_linearized, double zeta,
                                      std::pair<double, double> omegas);

/// Central-difference tangent dF/du of the restoring force.
Matrix tangent_stiffness(const DynamicalSystem& system, std::span<const double> u, std::span<const double> eps);

struct StateTrajectory {
  std::vector<double> times;
  /// Row k is U_k = [u_k; s_k].
  RowMatrix states;

  std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
};

/// Default residual tolerance 1e-10 (1 + |U_prev|_inf).
double default_step_tolerance(const Vector& U_prev);

/// Implicit midpoint solver for one bound system. Keeps a cached Newton
/// matrix between steps once fixed-point iteration has proved too slow.
class MidpointStepper {
 public:
  MidpointStepper(const DynamicalSystem& system, std::span<const double> alpha);

  /// Solves U = U_prev + dt H((U + U_prev)/2) with the load at t_prev + dt/2.
  /// tol <= 0 selects default_step_tolerance. Throws ConvergenceError.
  Vector step(const Vector& U_prev, double t_prev, double dt, double tol, int max_iter);

  /// H(U) at time t.
  void rhs(double t, const Vector& U, Vector& out) const;

  int last_iterations() const noexcept { return last_iterations_; }

 private:
  // Both use the load cached by the last call to step() or rhs().
  void rhs_with_load(const Vector& U, Vector& out) const;
  void residual(const Vector& U, const Vector& U_prev, double dt, Vector& out) const;
  void refresh_jacobian(const Vector& U, const Vector& U_prev, double dt);

  std::unique_ptr<BoundSystem> bound_;
  Eigen::LLT<Matrix> mass_factor_;
  std::size_t ndof_;
  mutable Vector force_, load_, accel_, mid_;
  Vector work_res_, work_pert_;
  Eigen::PartialPivLU<Matrix> newton_;
  bool has_newton_ = false;
  bool prefer_newton_ = false;
  double newton_dt_ = 0.0;
  int last_iterations_ = 0;
};

Vector midpoint_step(const DynamicalSystem& system, std::span<const double> alpha, const Vector& U_prev,
                     double t_prev, double dt, double tol, int max_iter);

/// Applies midpoint steps n_steps times from t = 0. ConvergenceError carries the step index.
StateTrajectory integrate(const DynamicalSystem& system, std::span<const double> alpha, const Vector& U0,
                          double dt, std::size_t n_steps, double tol = 0.0, int max_iter = 50);

/// Precomputed reader for one QoI on one system.
class QoIReader {
 public:
  QoIReader(const DynamicalSystem& system, const QoISpec& spec);

  double read(std::span<const double> state) const;
  const QoISpec& spec() const noexcept { return spec_; }

 private:
  QoISpec spec_;
  std::size_t offset_;
  Interpolant interp_;
};

double qoi_value(const StateTrajectory& traj, const QoISpec& spec, std::size_t k, const DynamicalSystem& system);

}  // namespace kcq::dynamics
