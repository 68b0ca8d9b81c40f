#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "kcq/dynamics.hpp"
#include "kcq/parallel.hpp"
#include "kcq/types.hpp"

namespace kcq {
struct ResponseDatabase;
}

namespace kcq::measurement {

/// Standard deviations at or below this value switch a sensor's noise off.
inline constexpr double kNoiseOffSd = 1e-300;

/// N_m sensors, each reading one QoI with independent Gaussian error.
struct MeasurementModel {
  std::vector<dynamics::QoISpec> points;
  std::vector<double> noise_mean;
  std::vector<double> noise_sd;

  std::size_t size() const noexcept { return points.size(); }
  bool noise_off(std::size_t j) const { return noise_sd.at(j) <= kNoiseOffSd; }
  /// Throws ShapeError / DomainError.
  void validate() const;
};

/// Measured record y for steps 1..K; row r holds step r + 1.
struct MeasurementSet {
  std::vector<double> times;
  RowMatrix values;
  MeasurementModel model;

  std::size_t steps() const noexcept { return static_cast<std::size_t>(values.rows()); }
  double at(std::size_t step, std::size_t point) const;
  void validate() const;
};

/// One selected measurement cell: (step index >= 1, sensor index).
struct Cell {
  std::size_t step = 0;
  std::size_t point = 0;

  bool operator==(const Cell&) const = default;
};

struct KeyConditionSelection {
  std::vector<Cell> entries;
  Vector z;
  Vector mu_beta;
  Matrix R_beta;
  std::vector<double> correlations;

  std::size_t size() const noexcept { return entries.size(); }
};

/// Readings of the sensors on a known trajectory plus seeded Gaussian noise.
MeasurementSet simulate_measurements(const dynamics::StateTrajectory& true_traj, const MeasurementModel& model,
                                     const dynamics::DynamicalSystem& system, std::uint64_t seed);

/// r(i, j) for steps i = 1..k (row i - 1) and sensors j, from weighted moments of the database.
RowMatrix correlation_coefficients(const ResponseDatabase& db, const dynamics::QoISpec& qoi, std::size_t k,
                                   const MeasurementModel& model, Exec exec = Exec::parallel);

/// The N_k cells with largest |r|; ties go to the later step, then the lower sensor index.
KeyConditionSelection select_key_conditions(const RowMatrix& r, const MeasurementSet& meas, std::size_t N_k,
                                            const MeasurementModel& model);

/// Selection of every cell of steps 1..k (the full-chain condition set).
KeyConditionSelection select_all_conditions(const MeasurementSet& meas, std::size_t k, const MeasurementModel& model);

/// Builds a selection directly from cells (used when a selection is replayed from disk).
KeyConditionSelection selection_from_cells(std::vector<Cell> cells, const MeasurementSet& meas,
                                           const MeasurementModel& model);

/// Multivariate Gaussian log density with a factorised covariance.
class GaussianErrorDensity {
 public:
  GaussianErrorDensity(Vector mean, const Matrix& covariance);

  double logpdf(const Vector& beta) const;
  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }

 private:
  Vector mean_;
  Eigen::LLT<Matrix> factor_;
  double log_norm_ = 0.0;
  mutable Vector work_;
};

double gaussian_error_logpdf(const Vector& beta, const KeyConditionSelection& sel);

}  // namespace kcq::measurement
