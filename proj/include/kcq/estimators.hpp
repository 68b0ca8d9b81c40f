#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kcq/database.hpp"
#include "kcq/measurement.hpp"
#include "kcq/parallel.hpp"

namespace kcq::estimators {

inline constexpr double kDefaultEssMin = 5.0;

struct Options {
  /// Estimates with a smaller likelihood-effective sample size are refused.
  double ess_min = kDefaultEssMin;
  /// Minimum number of PDF grid points; 0 selects the default of 400.
  std::size_t grid_points = 0;
  bool compute_pdf = true;
  Exec exec = Exec::parallel;
};

struct WeightedStats {
  double mean = 0.0;
  double variance = 0.0;
  double ess = 0.0;
  double weight_sum = 0.0;
};

struct Bandwidth {
  double sigma = 0.0;
  /// True when the rule-of-thumb value fell below the floor.
  bool floored = false;
};

struct KcqResult {
  dynamics::QoISpec qoi;
  std::size_t step = 0;
  double mean = 0.0;
  double variance = 0.0;
  double sd = 0.0;
  std::vector<double> pdf_grid;
  std::vector<double> pdf_values;
  double ess = 0.0;
  double bandwidth = 0.0;
  bool bandwidth_floored = false;
  measurement::KeyConditionSelection selection;
};

struct NonconditionalStats {
  double mean = 0.0;
  double variance = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  double bandwidth = 0.0;
  std::vector<double> pdf_values;
};

/// Log of the error density at z - h(alpha_i) for every sample.
std::vector<double> log_likelihoods(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel);

/// log w_i + log likelihood_i.
std::vector<double> likelihood_logweights(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel);

/// W_i = w_i exp(l_i - max l). A constant likelihood returns the prior weights unchanged.
std::vector<double> posterior_weights(std::span<const double> prior, std::span<const double> loglik);

double effective_sample_size(std::span<const double> W);

/// Quotient mean and two-pass variance of `values` under unnormalised weights W.
WeightedStats weighted_stats(std::span<const double> values, std::span<const double> W);

/// Response column g(alpha_i, t_k) for every sample.
std::vector<double> response_column(const ResponseDatabase& db, const dynamics::QoISpec& qoi, std::size_t k);

double kcq_mean(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                const dynamics::QoISpec& qoi, std::size_t k, const Options& opts = {});
double kcq_variance(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                    const dynamics::QoISpec& qoi, std::size_t k, double mean, const Options& opts = {});

/// sigma = 1.06 sd ess^(-1/5), floored at 1e-4 (sd + 1e-8 (1 + |mean|)).
Bandwidth select_bandwidth(double sd, double mean, double ess);
Bandwidth select_bandwidth(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                           const dynamics::QoISpec& qoi, std::size_t k, const Options& opts = {});

/// Grid over mean +/- 6 sqrt(sd^2 + sigma^2), widened to cover every sample
/// carrying non-negligible weight, with spacing at most sigma / 4.
std::vector<double> default_pdf_grid(std::span<const double> values, std::span<const double> W, double mean,
                                     double sd, double sigma, std::size_t min_points = 0);

/// sum_i W_i phi(u - g_i; sigma) / sum_i W_i at every grid point.
std::vector<double> weighted_kde(std::span<const double> grid, std::span<const double> values,
                                 std::span<const double> W, double sigma, Exec exec = Exec::parallel);

std::vector<double> kcq_pdf(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                            const dynamics::QoISpec& qoi, std::size_t k, std::span<const double> grid, double sigma,
                            const Options& opts = {});

/// Mean, variance, ess, bandwidth and (optionally) the PDF on its default grid.
KcqResult kcq_quantify(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                       const dynamics::QoISpec& qoi, std::size_t k, const Options& opts = {});

/// The same estimators with a constant likelihood. An empty grid skips the PDF.
NonconditionalStats nonconditional_stats(const ResponseDatabase& db, const dynamics::QoISpec& qoi, std::size_t k,
                                         std::span<const double> grid, Exec exec = Exec::parallel);

struct FullChainDiagnostic {
  double mean = 0.0;
  double variance = 0.0;
  double ess = 0.0;
};

/// Conditions on every measurement of steps 1..k. Never raises on degeneracy.
FullChainDiagnostic full_chain_cq_diagnostic(const ResponseDatabase& db, const measurement::MeasurementSet& meas,
                                             const dynamics::QoISpec& qoi, std::size_t k);

struct ConservationResult {
  std::vector<double> grid;
  /// Weighted KDE of f over the quadrature points.
  std::vector<double> quadrature_density;
  /// Binned KDE of f over pseudo-random reference draws.
  std::vector<double> reference_density;
  double max_gap = 0.0;
  double quadrature_integral = 0.0;
};

struct ConservationOptions {
  std::uint64_t seed = 2024;
  std::size_t n_reference = 1'000'000;
  std::size_t grid_points = 801;
  /// Grid points with |zeta - exclude_center| < exclude_halfwidth do not count toward max_gap.
  double exclude_center = 0.0;
  double exclude_halfwidth = 0.0;
  Exec exec = Exec::parallel;
};

/// Marginal density of zeta = f(alpha) two ways: smoothed-delta quadrature over
/// a GQMC set of size n, and a reference built from pseudo-random draws, both with
/// kernel width sigma on a shared grid.
ConservationResult conservation_identity_check(const std::function<double(std::span<const double>)>& f,
                                               const sampling::ParameterSpace& space, std::size_t n, double sigma,
                                               const ConservationOptions& opts = {});

}  // namespace kcq::estimators
