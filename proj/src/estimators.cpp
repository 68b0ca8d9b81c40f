#include "kcq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kcq/errors.hpp"
#include "kcq/numeric.hpp"

namespace kcq::estimators {

namespace {

constexpr std::size_t kDefaultGridPoints = 400;
constexpr std::size_t kMaxGridPoints = 20000;
// exp(-x) is exactly zero in double precision beyond this.
constexpr double kKernelCutoff = 746.0;

std::string context(const dynamics::QoISpec& qoi, std::size_t k) {
  return " (" + qoi.to_string() + ", step " + std::to_string(k) + ")";
}

WeightedStats guarded_stats(std::span<const double> g, std::span<const double> W, const Options& opts,
                            const dynamics::QoISpec& qoi, std::size_t k) {
  const WeightedStats s = weighted_stats(g, W);
  if (!(s.ess >= opts.ess_min)) {
    throw DegenerateLikelihoodError("likelihood-weighted ensemble is degenerate" + context(qoi, k) + ": ess " +
                                        std::to_string(s.ess) + " below " + std::to_string(opts.ess_min),
                                    s.ess);
  }
  return s;
}

std::vector<double> conditional_weights(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel) {
  return posterior_weights(db.sample_set.weights, log_likelihoods(db, sel));
}

}  // namespace

std::vector<double> log_likelihoods(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel) {
  const std::size_t n = db.size();
  const auto m = static_cast<Eigen::Index>(sel.size());
  for (const auto& c : sel.entries) {
    if (c.point >= db.sensor_channels.size()) {
      throw CoverageError("database has no sensor channel " + std::to_string(c.point));
    }
    if (c.step == 0 || c.step > db.steps()) {
      throw CoverageError("database does not cover measurement step " + std::to_string(c.step));
    }
  }
  measurement::GaussianErrorDensity density(sel.mu_beta, sel.R_beta);
  std::vector<double> out(n);
  Vector beta(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index q = 0; q < m; ++q) {
      const auto& c = sel.entries[static_cast<std::size_t>(q)];
      beta(q) = sel.z(q) - db.sensor_channels[c.point].values(static_cast<Eigen::Index>(i),
                                                              static_cast<Eigen::Index>(c.step));
    }
    out[i] = density.logpdf(beta);
  }
  return out;
}

std::vector<double> likelihood_logweights(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel) {
  auto out = log_likelihoods(db, sel);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::log(db.sample_set.weights[i]);
  return out;
}

std::vector<double> posterior_weights(std::span<const double> prior, std::span<const double> loglik) {
  if (prior.size() != loglik.size()) throw ShapeError("prior weights and log likelihoods differ in length");
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (std::isnan(loglik[i])) throw NonFiniteInputError("log likelihood " + std::to_string(i) + " is NaN");
    if (prior[i] > 0.0) top = std::max(top, loglik[i]);
  }
  if (!std::isfinite(top)) throw DegenerateLikelihoodError("every sample has zero likelihood", 0.0);
  std::vector<double> W(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) W[i] = prior[i] * std::exp(loglik[i] - top);
  return W;
}

double effective_sample_size(std::span<const double> W) {
  CompensatedSum s, s2;
  for (double w : W) {
    s.add(w);
    s2.add(w * w);
  }
  const double sum = s.value();
  return s2.value() > 0.0 ? sum * sum / s2.value() : 0.0;
}

WeightedStats weighted_stats(std::span<const double> values, std::span<const double> W) {
  if (values.size() != W.size()) throw ShapeError("values and weights differ in length");
  if (values.empty()) throw ShapeError("no samples");
  CompensatedSum sw, swg, sw2;
  for (std::size_t i = 0; i < W.size(); ++i) {
    sw.add(W[i]);
    swg.add(W[i] * values[i]);
    sw2.add(W[i] * W[i]);
  }
  WeightedStats out;
  out.weight_sum = sw.value();
  if (!(out.weight_sum > 0.0)) throw DegenerateLikelihoodError("weights sum to zero", 0.0);
  out.mean = swg.value() / out.weight_sum;
  CompensatedSum sv;
  for (std::size_t i = 0; i < W.size(); ++i) {
    const double d = values[i] - out.mean;
    sv.add(W[i] * d * d);
  }
  out.variance = std::max(0.0, sv.value() / out.weight_sum);
  out.ess = out.weight_sum * out.weight_sum / sw2.value();
  return out;
}

std::vector<double> response_column(const ResponseDatabase& db, const dynamics::QoISpec& qoi, std::size_t k) {
  const auto& ch = db.qoi(qoi);
  if (k > db.steps()) throw IndexError("step " + std::to_string(k) + " beyond database horizon " + std::to_string(db.steps()));
  std::vector<double> out(db.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ch.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  return out;
}

double kcq_mean(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                const dynamics::QoISpec& qoi, std::size_t k, const Options& opts) {
  const auto g = response_column(db, qoi, k);
  return guarded_stats(g, conditional_weights(db, sel), opts, qoi, k).mean;
}

double kcq_variance(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                    const dynamics::QoISpec& qoi, std::size_t k, double mean, const Options& opts) {
  const auto g = response_column(db, qoi, k);
  const auto W = conditional_weights(db, sel);
  const WeightedStats s = guarded_stats(g, W, opts, qoi, k);
  CompensatedSum sv;
  for (std::size_t i = 0; i < W.size(); ++i) {
    const double d = g[i] - mean;
    sv.add(W[i] * d * d);
  }
  return std::max(0.0, sv.value() / s.weight_sum);
}

Bandwidth select_bandwidth(double sd, double mean, double ess) {
  if (!(sd >= 0.0) || !std::isfinite(sd)) throw DomainError("bandwidth needs a finite non-negative sd");
  if (!(ess > 0.0)) throw DomainError("bandwidth needs a positive effective sample size");
  const double floor = 1e-4 * (sd + 1e-8 * (1.0 + std::abs(mean)));
  const double sigma = 1.06 * sd * std::pow(ess, -0.2);
  if (sigma < floor) return {floor, true};
  return {sigma, false};
}

Bandwidth select_bandwidth(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                           const dynamics::QoISpec& qoi, std::size_t k, const Options& opts) {
  const auto g = response_column(db, qoi, k);
  const WeightedStats s = guarded_stats(g, conditional_weights(db, sel), opts, qoi, k);
  return select_bandwidth(std::sqrt(s.variance), s.mean, s.ess);
}

std::vector<double> default_pdf_grid(std::span<const double> values, std::span<const double> W, double mean,
                                     double sd, double sigma, std::size_t min_points) {
  if (!(sigma > 0.0)) throw GridError("kernel width must be positive");
  const double spread = std::sqrt(sd * sd + sigma * sigma);
  double lo = mean - 6.0 * spread;
  double hi = mean + 6.0 * spread;
  double wmax = 0.0;
  for (double w : W) wmax = std::max(wmax, w);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (W[i] > 1e-10 * wmax) {
      lo = std::min(lo, values[i] - 6.0 * sigma);
      hi = std::max(hi, values[i] + 6.0 * sigma);
    }
  }
  const std::size_t base = min_points == 0 ? kDefaultGridPoints : min_points;
  const double needed = std::ceil((hi - lo) / (0.25 * sigma)) + 1.0;
  const std::size_t points =
      std::max<std::size_t>(base, static_cast<std::size_t>(std::min(needed, static_cast<double>(kMaxGridPoints))));
  std::vector<double> grid(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t p = 0; p < points; ++p) grid[p] = lo + static_cast<double>(p) * step;
  grid.back() = hi;
  return grid;
}

std::vector<double> weighted_kde(std::span<const double> grid, std::span<const double> values,
                                 std::span<const double> W, double sigma, Exec exec) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("kernel width must be positive");
  if (values.size() != W.size()) throw ShapeError("values and weights differ in length");
  for (std::size_t p = 1; p < grid.size(); ++p) {
    if (!(grid[p] > grid[p - 1])) throw GridError("PDF grid must be strictly increasing");
  }
  const double total = compensated_sum(W);
  if (!(total > 0.0)) throw DegenerateLikelihoodError("weights sum to zero", 0.0);
  const double scale = 1.0 / (total * sigma * std::sqrt(2.0 * kPi));
  const double inv_sigma = 1.0 / sigma;
  std::vector<double> out(grid.size());
  auto point = [&](std::size_t p) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double z = (grid[p] - values[i]) * inv_sigma;
      const double e = 0.5 * z * z;
      if (e < kKernelCutoff) acc.add(W[i] * std::exp(-e));
    }
    out[p] = acc.value() * scale;
  };
  if (exec == Exec::serial) {
    for (std::size_t p = 0; p < grid.size(); ++p) point(p);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(grid.size()); ++p) point(static_cast<std::size_t>(p));
  }
  return out;
}

std::vector<double> kcq_pdf(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                            const dynamics::QoISpec& qoi, std::size_t k, std::span<const double> grid, double sigma,
                            const Options& opts) {
  const auto g = response_column(db, qoi, k);
  const auto W = conditional_weights(db, sel);
  guarded_stats(g, W, opts, qoi, k);
  return weighted_kde(grid, g, W, sigma, opts.exec);
}

KcqResult kcq_quantify(const ResponseDatabase& db, const measurement::KeyConditionSelection& sel,
                       const dynamics::QoISpec& qoi, std::size_t k, const Options& opts) {
  const auto g = response_column(db, qoi, k);
  const auto W = conditional_weights(db, sel);
  const WeightedStats s = guarded_stats(g, W, opts, qoi, k);
  KcqResult out;
  out.qoi = qoi;
  out.step = k;
  out.mean = s.mean;
  out.variance = s.variance;
  out.sd = std::sqrt(s.variance);
  out.ess = s.ess;
  const Bandwidth bw = select_bandwidth(out.sd, out.mean, out.ess);
  out.bandwidth = bw.sigma;
  out.bandwidth_floored = bw.floored;
  if (opts.compute_pdf) {
    out.pdf_grid = default_pdf_grid(g, W, out.mean, out.sd, out.bandwidth, opts.grid_points);
    out.pdf_values = weighted_kde(out.pdf_grid, g, W, out.bandwidth, opts.exec);
  }
  out.selection = sel;
  return out;
}

NonconditionalStats nonconditional_stats(const ResponseDatabase& db, const dynamics::QoISpec& qoi, std::size_t k,
                                         std::span<const double> grid, Exec exec) {
  const auto g = response_column(db, qoi, k);
  const auto& w = db.sample_set.weights;
  const WeightedStats s = weighted_stats(g, w);
  NonconditionalStats out;
  out.mean = s.mean;
  out.variance = s.variance;
  out.sd = std::sqrt(s.variance);
  out.ess = s.ess;
  out.bandwidth = select_bandwidth(out.sd, out.mean, out.ess).sigma;
  if (!grid.empty()) out.pdf_values = weighted_kde(grid, g, w, out.bandwidth, exec);
  return out;
}

FullChainDiagnostic full_chain_cq_diagnostic(const ResponseDatabase& db, const measurement::MeasurementSet& meas,
                                             const dynamics::QoISpec& qoi, std::size_t k) {
  const auto sel = measurement::select_all_conditions(meas, k, meas.model);
  const auto g = response_column(db, qoi, k);
  const WeightedStats s = weighted_stats(g, conditional_weights(db, sel));
  return {s.mean, s.variance, s.ess};
}

ConservationResult conservation_identity_check(const std::function<double(std::span<const double>)>& f,
                                               const sampling::ParameterSpace& space, std::size_t n, double sigma,
                                               const ConservationOptions& opts) {
  if (!(sigma > 0.0)) throw DomainError("kernel width must be positive");
  if (opts.grid_points < 2 || opts.n_reference == 0) throw DomainError("conservation check needs a grid and draws");
  const auto set = sampling::generate_sample_set(space, n, opts.seed, sampling::Generator::gqmc_cl, 0, opts.exec);
  std::vector<double> zeta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = set.samples.row(static_cast<Eigen::Index>(i));
    zeta[i] = f({row.data(), static_cast<std::size_t>(row.size())});
  }
  const auto [zmin, zmax] = std::minmax_element(zeta.begin(), zeta.end());
  const double lo = *zmin - 6.0 * sigma;
  const double hi = *zmax + 6.0 * sigma;
  ConservationResult out;
  out.grid.resize(opts.grid_points);
  for (std::size_t p = 0; p < opts.grid_points; ++p) {
    out.grid[p] = lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(opts.grid_points - 1);
  }
  out.quadrature_density = weighted_kde(out.grid, zeta, set.weights, sigma, opts.exec);
  out.quadrature_integral = trapezoid(out.grid, out.quadrature_density);

  // Reference: bin the draws at sigma/10, then smooth the bin centres.
  const double bin = 0.1 * sigma;
  const double blo = lo - 8.0 * sigma;
  const auto nbins = static_cast<std::size_t>(std::ceil((hi + 8.0 * sigma - blo) / bin));
  std::vector<double> counts(nbins, 0.0);
  const RowMatrix draws = sampling::draw_pseudo_random(space, opts.n_reference, mix_seed(opts.seed, 0xbe7));
  for (std::size_t i = 0; i < opts.n_reference; ++i) {
    const auto row = draws.row(static_cast<Eigen::Index>(i));
    const double z = f({row.data(), static_cast<std::size_t>(row.size())});
    const double b = std::floor((z - blo) / bin);
    if (b >= 0.0 && b < static_cast<double>(nbins)) counts[static_cast<std::size_t>(b)] += 1.0;
  }
  std::vector<double> centres(nbins);
  for (std::size_t b = 0; b < nbins; ++b) centres[b] = blo + (static_cast<double>(b) + 0.5) * bin;
  out.reference_density = weighted_kde(out.grid, centres, counts, sigma, opts.exec);
  // weighted_kde normalises by the in-range count; rescale to all draws.
  const double in_range = compensated_sum(counts);
  for (double& d : out.reference_density) d *= in_range / static_cast<double>(opts.n_reference);

  for (std::size_t p = 0; p < opts.grid_points; ++p) {
    if (opts.exclude_halfwidth > 0.0 && std::abs(out.grid[p] - opts.exclude_center) < opts.exclude_halfwidth) continue;
    out.max_gap = std::max(out.max_gap, std::abs(out.quadrature_density[p] - out.reference_density[p]));
  }
  return out;
}

}  // namespace kcq::estimators
