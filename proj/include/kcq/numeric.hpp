#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace kcq {

/// Neumaier-compensated accumulator. Summation order is the call order, so
/// results are reproducible whenever the caller's order is.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double compensated_sum(std::span<const double> values) noexcept;
double compensated_dot(std::span<const double> a, std::span<const double> b);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;

/// Standard normal quantile (Wichura's AS241, relative error ~1e-16).
/// Throws DomainError outside (0,1).
double normal_quantile(double p);

/// Uniform double strictly inside (0,1) built from the top 52 bits of a 64-bit
/// draw; independent of the standard library's distribution implementations.
/// With 53 bits the largest value would round to 1.
inline double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

double log_sum_exp(std::span<const double> values) noexcept;

/// SplitMix64 finaliser, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Trapezoid rule over a (possibly non-uniform) grid.
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace kcq
