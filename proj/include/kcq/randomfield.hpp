#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kcq::randomfield {

/// How the expansion's fluctuation term is scaled. `relative` treats sigma_E as
/// a coefficient of variation, so the fluctuation is multiplied by E0.
enum class FluctuationScale { relative, absolute };

/// Truncated Karhunen-Loeve expansion of a stationary field with exponential
/// covariance sigma^2 exp(-c|x1 - x2|) on the centred domain [-a, a].
struct KLField {
  double E0 = 0.0;
  double a_K = 0.0;
  double c_K = 0.0;
  double sigma_E = 0.0;
  std::size_t M = 0;
  std::vector<double> omegas;
  std::vector<double> kappas;
  FluctuationScale scale = FluctuationScale::relative;
};

struct Eigenpairs {
  std::vector<double> omegas;
  std::vector<double> kappas;
};

/// Roots of the odd/even transcendental equations, ordered so that kappa is
/// strictly decreasing. Throws RootBracketingError if a bracket has no sign change.
Eigenpairs kl_eigenpairs(double a_K, double c_K, double sigma_E, std::size_t M);

KLField make_kl_field(double E0, double a_K, double c_K, double sigma_E, std::size_t M,
                      FluctuationScale scale = FluctuationScale::relative);

/// Residual of the defining equation for term i (1-based).
double eigen_residual(const KLField& field, std::size_t i);

/// Normalised eigenfunction i (1-based) at centred coordinate xi in [-a, a].
double eigenfunction_centered(const KLField& field, std::size_t i, double xi);

/// Eigenfunction at structure coordinate x in [0, 2a]; x maps to xi = x - a.
double eigenfunction(const KLField& field, std::size_t i, double x);

/// E(x, eps) for structure coordinate x.
double field_value(const KLField& field, double x, std::span<const double> eps);

/// Pointwise variance of the truncated expansion at structure coordinate x.
double field_variance(const KLField& field, double x);

}  // namespace kcq::randomfield
