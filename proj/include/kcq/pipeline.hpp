#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kcq/database.hpp"
#include "kcq/dynamics.hpp"
#include "kcq/estimators.hpp"
#include "kcq/measurement.hpp"
#include "kcq/sampling.hpp"

namespace kcq::pipeline {

enum class SystemKind { sdof, beam };

struct RunConfig {
  SystemKind system = SystemKind::sdof;
  std::size_t beam_elements = 4;
  std::size_t kl_terms = 10;

  std::size_t n = 500;
  std::uint64_t seed = 1;
  sampling::Generator generator = sampling::Generator::gqmc_cl;
  /// 0 selects sampling::default_probe_count(n).
  std::size_t n_probe = 0;

  double dt = 0.05;
  std::size_t n_steps = 200;
  /// <= 0 selects the per-step default tolerance.
  double tol = 0.0;
  int max_iter = 50;

  std::vector<dynamics::QoISpec> qois;
  measurement::MeasurementModel sensors;
  std::size_t N_k = 2;
  estimators::Options estimator;

  /// Largest tolerated fraction of samples whose integration fails.
  double failure_cap = 1e-3;
  std::string output_dir;
  Exec exec = Exec::parallel;
};

/// SDOF example: velocity sensor with sd 0.03, 200 steps of 0.05 s, n = 500.
RunConfig sdof_config();
/// Cantilever example at the requested element count and horizon.
RunConfig beam_config(std::size_t elements, std::size_t n_steps);

std::unique_ptr<dynamics::DynamicalSystem> make_system(const RunConfig& config);

/// Throws ConfigError naming the offending key.
void validate_config(const RunConfig& config);

/// Integrates every sample and reduces the trajectories to the configured
/// channels. When `journal_path` is non-empty, completed samples are appended to
/// it and reused on a later call with the same inputs.
ResponseDatabase build_database(const RunConfig& config, const sampling::WeightedSampleSet& set,
                                const std::string& journal_path = {});

/// GQMC samples + weights, trajectories, channels; persisted to
/// config.output_dir when it is set (resumable through a journal there).
ResponseDatabase offline_generate(const RunConfig& config);

/// Truth trajectory of one parameter vector (zero for the centre of the space).
dynamics::StateTrajectory simulate_truth(const RunConfig& config, const std::vector<double>& alpha);

/// Correlations, key-condition selection and KCQ estimates at each step.
std::vector<estimators::KcqResult> online_quantify(const ResponseDatabase& db,
                                                   const measurement::MeasurementSet& meas,
                                                   const dynamics::QoISpec& qoi, const std::vector<std::size_t>& steps,
                                                   std::size_t N_k, const estimators::Options& opts = {});

}  // namespace kcq::pipeline
