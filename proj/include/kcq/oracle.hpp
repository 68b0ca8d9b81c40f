#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kcq/database.hpp"
#include "kcq/pipeline.hpp"

namespace kcq::oracle {

struct McConfig {
  std::size_t n_mc = 100000;
  std::uint64_t seed = 7;
};

/// Same pipeline as offline_generate with pseudo-random draws and weights 1/n_mc.
/// Persisted only when `output_dir` is non-empty.
ResponseDatabase mc_sample_database(const pipeline::RunConfig& config, const McConfig& mc,
                                    const std::string& output_dir = {});

/// Finite parameter grid: prior mass, response and log likelihood per cell.
struct GridProblem {
  std::vector<double> prior_mass;
  std::vector<double> response;
  std::vector<double> log_likelihood;
};

struct BruteForceResult {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> pmf;
};

/// Exact posterior on the grid by prior x likelihood normalisation.
BruteForceResult brute_force_conditional(const GridProblem& problem);

/// Database whose samples are the grid cells (one-dimensional parameter, the
/// cell response as the only QoI channel at step 1, the log likelihood encoded in
/// a unit-noise sensor channel). Feeding it to the KCQ estimators with z = 0
/// reproduces the grid posterior.
ResponseDatabase grid_atom_database(const GridProblem& problem, const std::vector<double>& cell_centres);

}  // namespace kcq::oracle
