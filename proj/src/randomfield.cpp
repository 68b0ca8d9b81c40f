#include "kcq/randomfield.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "kcq/errors.hpp"
#include "kcq/numeric.hpp"

namespace kcq::randomfield {

namespace {

// Bisection to machine precision on [lo, hi] with f(lo) < 0 < f(hi).
double bisect(const std::function<double(double)>& f, double lo, double hi, std::size_t index) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    throw RootBracketingError("no sign change bracketing eigenvalue " + std::to_string(index), index);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (fm < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

double odd_equation(double omega, double a, double c) { return omega * std::tan(a * omega) - c; }
double even_equation(double omega, double a, double c) { return omega + c * std::tan(a * omega); }

}  // namespace

Eigenpairs kl_eigenpairs(double a_K, double c_K, double sigma_E, std::size_t M) {
  if (!(a_K > 0.0 && c_K > 0.0 && sigma_E > 0.0) || M == 0) {
    throw DomainError("kl_eigenpairs: a_K, c_K, sigma_E must be positive and M >= 1");
  }
  Eigenpairs out;
  out.omegas.reserve(M);
  out.kappas.reserve(M);
  const double step = kPi / a_K;
  for (std::size_t i = 1; i <= M; ++i) {
    const double m = static_cast<double>(i / 2);
    double omega;
    if (i % 2 == 1) {
      // tan(a w) runs from 0 to +inf on [m pi/a, (m + 1/2) pi/a).
      const double lo = m * step;
      const double hi = (m + 0.5) * step;
      const double pad = 1e-14 * hi;
      omega = bisect([&](double w) { return odd_equation(w, a_K, c_K); }, lo, hi - pad, i);
    } else {
      // tan(a w) runs from -inf to 0 on ((m - 1/2) pi/a, m pi/a].
      const double lo = (m - 0.5) * step;
      const double hi = m * step;
      const double pad = 1e-14 * hi;
      omega = bisect([&](double w) { return even_equation(w, a_K, c_K); }, lo + pad, hi, i);
    }
    out.omegas.push_back(omega);
    out.kappas.push_back(2.0 * c_K * sigma_E * sigma_E / (omega * omega + c_K * c_K));
  }
  return out;
}

KLField make_kl_field(double E0, double a_K, double c_K, double sigma_E, std::size_t M,
                      FluctuationScale scale) {
  auto pairs = kl_eigenpairs(a_K, c_K, sigma_E, M);
  KLField field;
  field.E0 = E0;
  field.a_K = a_K;
  field.c_K = c_K;
  field.sigma_E = sigma_E;
  field.M = M;
  field.omegas = std::move(pairs.omegas);
  field.kappas = std::move(pairs.kappas);
  field.scale = scale;
  return field;
}

double eigen_residual(const KLField& field, std::size_t i) {
  if (i < 1 || i > field.M) throw IndexError("eigen index " + std::to_string(i) + " outside 1.." + std::to_string(field.M));
  const double w = field.omegas[i - 1];
  return i % 2 == 1 ? odd_equation(w, field.a_K, field.c_K) : even_equation(w, field.a_K, field.c_K);
}

double eigenfunction_centered(const KLField& field, std::size_t i, double xi) {
  if (i < 1 || i > field.M) throw IndexError("eigen index " + std::to_string(i) + " outside 1.." + std::to_string(field.M));
  const double w = field.omegas[i - 1];
  const double a = field.a_K;
  const double s = std::sin(2.0 * w * a) / (2.0 * w);
  if (i % 2 == 1) return std::cos(w * xi) / std::sqrt(a + s);
  return std::sin(w * xi) / std::sqrt(a - s);
}

double eigenfunction(const KLField& field, std::size_t i, double x) {
  return eigenfunction_centered(field, i, x - field.a_K);
}

double field_value(const KLField& field, double x, std::span<const double> eps) {
  if (eps.size() != field.M) {
    throw ShapeError("field_value: expected " + std::to_string(field.M) + " coefficients, got " +
                     std::to_string(eps.size()));
  }
  CompensatedSum fluct;
  for (std::size_t i = 1; i <= field.M; ++i) {
    fluct.add(eps[i - 1] * std::sqrt(field.kappas[i - 1]) * eigenfunction(field, i, x));
  }
  const double scale = field.scale == FluctuationScale::relative ? field.E0 : 1.0;
  return field.E0 + scale * fluct.value();
}

double field_variance(const KLField& field, double x) {
  CompensatedSum acc;
  for (std::size_t i = 1; i <= field.M; ++i) {
    const double f = eigenfunction(field, i, x);
    acc.add(field.kappas[i - 1] * f * f);
  }
  const double scale = field.scale == FluctuationScale::relative ? field.E0 : 1.0;
  return scale * scale * acc.value();
}

}  // namespace kcq::randomfield
