#include "kcq/sampling.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

#include "kcq/errors.hpp"
#include "kcq/numeric.hpp"

namespace kcq::sampling {

namespace {

constexpr std::array<std::uint32_t, kMaxHaltonDim> make_primes() {
  std::array<std::uint32_t, kMaxHaltonDim> primes{};
  std::size_t count = 0;
  for (std::uint32_t candidate = 2; count < primes.size(); ++candidate) {
    bool is_prime = true;
    for (std::size_t k = 0; k < count && primes[k] * primes[k] <= candidate; ++k) {
      if (candidate % primes[k] == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes[count++] = candidate;
  }
  return primes;
}

constexpr auto kPrimes = make_primes();
static_assert(kPrimes[0] == 2 && kPrimes[99] == 541);

// Digits needed so that base^-digits is below double resolution.
std::size_t digit_count(std::uint32_t base) {
  return static_cast<std::size_t>(std::ceil(53.0 * std::log(2.0) / std::log(static_cast<double>(base)))) + 1;
}

std::vector<std::vector<std::uint32_t>> digit_permutations(std::uint32_t base, std::size_t digits,
                                                           std::uint64_t seed, std::size_t coordinate,
                                                           Scrambling scrambling) {
  std::vector<std::vector<std::uint32_t>> perms(digits, std::vector<std::uint32_t>(base));
  std::mt19937_64 engine(mix_seed(seed, coordinate));
  for (auto& perm : perms) {
    std::iota(perm.begin(), perm.end(), 0u);
    if (scrambling == Scrambling::none) continue;
    for (std::uint32_t i = base - 1; i > 0; --i) {
      const auto j = static_cast<std::uint32_t>(engine() % (static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
  }
  return perms;
}

double clamp_open(double v) {
  if (v <= 0.0) return std::numeric_limits<double>::min();
  if (v >= 1.0) return std::nextafter(1.0, 0.0);
  return v;
}

}  // namespace

Marginal Marginal::normal(double mean, double sd) {
  if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean)) {
    throw DomainError("normal marginal needs finite mean and positive sd");
  }
  return Marginal(mean, sd, false);
}

double Marginal::quantile(double p) const { return mean_ + sd_ * normal_quantile(p); }

double Marginal::log_density(double x) const noexcept {
  const double z = (x - mean_) / sd_;
  return -0.5 * z * z - kLogSqrt2Pi - std::log(sd_);
}

ParameterSpace::ParameterSpace(std::vector<Marginal> marginals) : marginals_(std::move(marginals)) {
  if (marginals_.empty()) throw DomainError("parameter space needs at least one dimension");
}

double ParameterSpace::log_density(std::span<const double> alpha) const {
  if (alpha.size() != dim()) throw ShapeError("parameter vector length does not match space dimension");
  CompensatedSum acc;
  for (std::size_t j = 0; j < dim(); ++j) acc.add(marginals_[j].log_density(alpha[j]));
  return acc.value();
}

double ParameterSpace::density(std::span<const double> alpha) const { return std::exp(log_density(alpha)); }

void WeightedSampleSet::validate() const {
  const auto n = weights.size();
  if (n == 0) throw ShapeError("sample set is empty");
  if (static_cast<std::size_t>(samples.rows()) != n) {
    throw ShapeError("sample set has " + std::to_string(samples.rows()) + " rows but " + std::to_string(n) +
                     " weights");
  }
  if (!samples.allFinite()) throw NonFiniteInputError("sample set contains non-finite coordinates");
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("sample weights must be non-negative");
  }
  const double total = compensated_sum(weights);
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("sample weights sum to " + std::to_string(total) + ", expected 1");
  }
}

RowMatrix generate_halton(std::size_t n, std::size_t dim, std::uint64_t seed, Scrambling scrambling) {
  if (n == 0 || dim == 0) throw DomainError("halton: n and dim must be positive");
  if (dim > kMaxHaltonDim) {
    throw UnsupportedDimensionError("halton: dimension " + std::to_string(dim) + " exceeds the " +
                                    std::to_string(kMaxHaltonDim) + "-prime table");
  }
  RowMatrix points(n, dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const std::uint32_t base = kPrimes[j];
    const std::size_t digits = digit_count(base);
    const auto perms = digit_permutations(base, digits, seed, j, scrambling);
    std::vector<std::uint32_t> digit(digits);
    const double inv_base = 1.0 / base;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t index = i + 1;
      for (std::size_t d = 0; d < digits; ++d) {
        digit[d] = static_cast<std::uint32_t>(index % base);
        index /= base;
      }
      double value = 0.0;
      if (scrambling == Scrambling::none) {
        // Exact radical inverse: trailing zero digits contribute nothing.
        for (std::size_t d = digits; d-- > 0;) value = (value + digit[d]) * inv_base;
      } else {
        for (std::size_t d = digits; d-- > 0;) value = (value + perms[d][digit[d]]) * inv_base;
      }
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = clamp_open(value);
    }
  }
  return points;
}

RowMatrix transform_to_distribution(const RowMatrix& unit_points, const ParameterSpace& space) {
  if (static_cast<std::size_t>(unit_points.cols()) != space.dim()) {
    throw ShapeError("unit points have " + std::to_string(unit_points.cols()) + " columns, space has dim " +
                     std::to_string(space.dim()));
  }
  RowMatrix alpha(unit_points.rows(), unit_points.cols());
  for (Eigen::Index i = 0; i < unit_points.rows(); ++i) {
    for (Eigen::Index j = 0; j < unit_points.cols(); ++j) {
      const double p = unit_points(i, j);
      if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("unit point coordinate outside (0,1) at row " + std::to_string(i));
      }
      alpha(i, j) = space.marginal(static_cast<std::size_t>(j)).quantile(p);
    }
  }
  return alpha;
}

namespace {

constexpr std::size_t kProbeBlock = 4096;

void check_duplicates(const RowMatrix& pts) {
  std::vector<std::size_t> order(static_cast<std::size_t>(pts.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto row_less = [&](std::size_t a, std::size_t b) {
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      const double x = pts(static_cast<Eigen::Index>(a), j);
      const double y = pts(static_cast<Eigen::Index>(b), j);
      if (x != y) return x < y;
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), row_less);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (pts.row(static_cast<Eigen::Index>(order[k - 1])) == pts.row(static_cast<Eigen::Index>(order[k]))) {
      throw DuplicateSampleError(std::min(order[k - 1], order[k]), std::max(order[k - 1], order[k]));
    }
  }
}

// Classifies one block of probes; counts are accumulated into `counts`.
void classify_block(std::size_t block, std::size_t n_probe, std::uint64_t seed, const RowMatrix& standardized,
                    const ParameterSpace& space, std::vector<double>& probe,
                    std::vector<std::uint64_t>& counts) {
  const std::size_t begin = block * kProbeBlock;
  const std::size_t end = std::min(n_probe, begin + kProbeBlock);
  const auto dim = space.dim();
  const auto n = static_cast<std::size_t>(standardized.rows());
  std::mt19937_64 engine(mix_seed(seed, block));
  for (std::size_t p = begin; p < end; ++p) {
    for (std::size_t j = 0; j < dim; ++j) {
      const auto& m = space.marginal(j);
      probe[j] = m.quantile(unit_open(engine())) / m.sd();
    }
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = standardized.data() + i * dim;
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = row[j] - probe[j];
        d2 += diff * diff;
        if (d2 >= best_d2) break;
      }
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    ++counts[best];
  }
}

}  // namespace

std::vector<double> compute_voronoi_weights(const RowMatrix& alpha_samples, const ParameterSpace& space,
                                            std::size_t n_probe, std::uint64_t seed, Exec exec) {
  const auto n = static_cast<std::size_t>(alpha_samples.rows());
  if (n == 0) throw DomainError("voronoi weights: no samples");
  if (static_cast<std::size_t>(alpha_samples.cols()) != space.dim()) {
    throw ShapeError("voronoi weights: sample dimension does not match the parameter space");
  }
  if (n_probe == 0) throw DomainError("voronoi weights: n_probe must be positive");
  if (n == 1) return {1.0};
  check_duplicates(alpha_samples);
  if (n_probe < 100 * n) {
    std::clog << "warning: " << n_probe << " Voronoi probes for " << n
              << " samples; at least 100 per sample recommended\n";
  }

  RowMatrix standardized = alpha_samples;
  for (std::size_t j = 0; j < space.dim(); ++j) {
    standardized.col(static_cast<Eigen::Index>(j)) /= space.marginal(j).sd();
  }

  const std::size_t blocks = (n_probe + kProbeBlock - 1) / kProbeBlock;
  std::vector<std::uint64_t> counts(n, 0);
  if (exec == Exec::serial) {
    std::vector<double> probe(space.dim());
    for (std::size_t b = 0; b < blocks; ++b) classify_block(b, n_probe, seed, standardized, space, probe, counts);
  } else {
    const int threads = omp_get_max_threads();
    std::vector<std::vector<std::uint64_t>> partial(static_cast<std::size_t>(threads),
                                                    std::vector<std::uint64_t>(n, 0));
#pragma omp parallel num_threads(threads)
    {
      const auto tid = static_cast<std::size_t>(omp_get_thread_num());
      std::vector<double> probe(space.dim());
#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
        classify_block(static_cast<std::size_t>(b), n_probe, seed, standardized, space, probe, partial[tid]);
      }
    }
    // Integer merge in fixed partition order.
    for (const auto& part : partial) {
      for (std::size_t i = 0; i < n; ++i) counts[i] += part[i];
    }
  }

  std::vector<double> weights(n);
  const double inv = 1.0 / static_cast<double>(n_probe);
  for (std::size_t i = 0; i < n; ++i) weights[i] = static_cast<double>(counts[i]) * inv;
  const double total = compensated_sum(weights);
  for (double& w : weights) w /= total;
  return weights;
}

double quadrature(std::span<const double> f_values, std::span<const double> weights) {
  if (f_values.size() != weights.size()) {
    throw ShapeError("quadrature: " + std::to_string(f_values.size()) + " values but " +
                     std::to_string(weights.size()) + " weights");
  }
  CompensatedSum acc;
  for (std::size_t i = 0; i < f_values.size(); ++i) {
    if (!std::isfinite(f_values[i])) {
      throw NonFiniteInputError("quadrature: non-finite integrand value at sample " + std::to_string(i));
    }
    acc.add(weights[i] * f_values[i]);
  }
  return acc.value();
}

RowMatrix draw_pseudo_random(const ParameterSpace& space, std::size_t n, std::uint64_t seed) {
  RowMatrix alpha(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(space.dim()));
  std::mt19937_64 engine(mix_seed(seed, 0x5eed));
  for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
    for (std::size_t j = 0; j < space.dim(); ++j) {
      alpha(i, static_cast<Eigen::Index>(j)) = space.marginal(j).quantile(unit_open(engine()));
    }
  }
  return alpha;
}

Generator parse_generator(const std::string& tag) {
  if (tag == "gqmc-cl" || tag == "CL" || tag == "cl") return Generator::gqmc_cl;
  if (tag == "gqmc-wz" || tag == "WZ" || tag == "wz") return Generator::gqmc_wz;
  if (tag == "mc") return Generator::mc;
  throw DomainError("unknown sample generator '" + tag + "' (expected gqmc-cl, gqmc-wz or mc)");
}

std::string generator_tag(Generator generator) {
  switch (generator) {
    case Generator::gqmc_cl:
      return "gqmc-cl";
    case Generator::gqmc_wz:
      return "gqmc-wz";
    case Generator::mc:
      return "mc";
  }
  return "unknown";
}

std::size_t default_probe_count(std::size_t n) { return std::max<std::size_t>(100000, 1000 * n); }

WeightedSampleSet generate_sample_set(const ParameterSpace& space, std::size_t n, std::uint64_t seed,
                                      Generator generator, std::size_t n_probe, Exec exec) {
  if (n == 0) throw DomainError("sample set size must be positive");
  WeightedSampleSet set;
  set.generator_tag = generator_tag(generator);
  set.seed = seed;
  if (generator == Generator::mc) {
    set.samples = draw_pseudo_random(space, n, seed);
    set.weights.assign(n, 1.0 / static_cast<double>(n));
    return set;
  }
  const std::uint64_t preset_seed = mix_seed(seed, generator == Generator::gqmc_cl ? 0xC1 : 0x3A);
  set.samples = transform_to_distribution(generate_halton(n, space.dim(), preset_seed), space);
  if (n_probe == 0) n_probe = default_probe_count(n);
  set.weights = compute_voronoi_weights(set.samples, space, n_probe, mix_seed(preset_seed, 0x9b0e), exec);
  set.validate();
  return set;
}

}  // namespace kcq::sampling
