#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kcq/parallel.hpp"
#include "kcq/types.hpp"

namespace kcq::sampling {

/// Marginal law of one random input. Only Gaussian families are supported.
class Marginal {
 public:
  static Marginal normal(double mean, double sd);
  static Marginal standard_normal() { return Marginal(0.0, 1.0, true); }

  double mean() const noexcept { return mean_; }
  double sd() const noexcept { return sd_; }
  bool is_standard() const noexcept { return standard_; }

  double quantile(double p) const;
  double log_density(double x) const noexcept;

 private:
  Marginal(double mean, double sd, bool standard) : mean_(mean), sd_(sd), standard_(standard) {}

  double mean_;
  double sd_;
  bool standard_;
};

/// Independent random inputs; the joint density is the product of marginals.
class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<Marginal> marginals);

  std::size_t dim() const noexcept { return marginals_.size(); }
  const Marginal& marginal(std::size_t j) const { return marginals_.at(j); }
  const std::vector<Marginal>& marginals() const noexcept { return marginals_; }

  double log_density(std::span<const double> alpha) const;
  double density(std::span<const double> alpha) const;

 private:
  std::vector<Marginal> marginals_;
};

/// Integration points with non-negative weights summing to one.
struct WeightedSampleSet {
  RowMatrix samples;
  std::vector<double> weights;
  std::string generator_tag;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return weights.size(); }
  /// Throws ShapeError / DomainError when the set violates its invariants.
  void validate() const;
};

enum class Scrambling { none, permuted };

inline constexpr std::size_t kMaxHaltonDim = 100;

/// Generalised (digit-permuted) Halton points in the open unit cube. Row i is
/// the radical inverse of index i+1; coordinate j uses the j-th prime as base.
RowMatrix generate_halton(std::size_t n, std::size_t dim, std::uint64_t seed,
                          Scrambling scrambling = Scrambling::permuted);

/// Maps unit-cube points through each marginal's inverse CDF.
RowMatrix transform_to_distribution(const RowMatrix& unit_points, const ParameterSpace& space);

/// Voronoi-cell probabilities of the samples under the parameter density,
/// estimated with `n_probe` pseudo-random draws classified to their nearest
/// sample (coordinates standardised by marginal sd).
std::vector<double> compute_voronoi_weights(const RowMatrix& alpha_samples, const ParameterSpace& space,
                                            std::size_t n_probe, std::uint64_t seed,
                                            Exec exec = Exec::parallel);

/// sum_i w_i f_i with compensated accumulation in index order.
double quadrature(std::span<const double> f_values, std::span<const double> weights);

/// Pseudo-random draws from the parameter density (seeded, library-independent).
RowMatrix draw_pseudo_random(const ParameterSpace& space, std::size_t n, std::uint64_t seed);

enum class Generator { gqmc_cl, gqmc_wz, mc };

Generator parse_generator(const std::string& tag);
std::string generator_tag(Generator generator);

/// Default probe budget: 1000 probes per sample, at least 10^5.
std::size_t default_probe_count(std::size_t n);

/// Builds a complete weighted sample set. The two GQMC presets share one
/// scrambled-Halton + Voronoi pipeline and differ only in the derived seed;
/// `mc` yields pseudo-random draws with equal weights.
WeightedSampleSet generate_sample_set(const ParameterSpace& space, std::size_t n, std::uint64_t seed,
                                      Generator generator, std::size_t n_probe = 0,
                                      Exec exec = Exec::parallel);

}  // namespace kcq::sampling
