#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kcq/database.hpp"
#include "kcq/measurement.hpp"

namespace kcq::test {

inline const dynamics::QoISpec kQoi = dynamics::QoISpec::at_dof(dynamics::QoIKind::displacement, 0);
inline const dynamics::QoISpec kSensor = dynamics::QoISpec::at_dof(dynamics::QoIKind::velocity, 0);

/// Rows are samples, columns are steps 0..K.
inline RowMatrix rows(const std::vector<std::vector<double>>& v) {
  RowMatrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.front().size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j];
  }
  return m;
}

/// Database over a one-dimensional space with one QoI channel and any number of
/// sensor channels; sensor j is velocity at dof j.
inline ResponseDatabase toy_db(std::vector<double> weights, const RowMatrix& qoi, const std::vector<RowMatrix>& sensors = {}) {
  ResponseDatabase db;
  const auto n = weights.size();
  db.sample_set.samples = RowMatrix(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) db.sample_set.samples(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
  db.sample_set.weights = std::move(weights);
  db.sample_set.generator_tag = "test";
  for (Eigen::Index k = 0; k < qoi.cols(); ++k) db.times.push_back(0.1 * static_cast<double>(k));
  db.qoi_channels.push_back({kQoi, qoi});
  for (std::size_t j = 0; j < sensors.size(); ++j) {
    db.sensor_channels.push_back({dynamics::QoISpec::at_dof(dynamics::QoIKind::velocity, j), sensors[j]});
  }
  db.provenance.system = "test";
  return db;
}

inline measurement::MeasurementModel toy_model(std::size_t n_sensors, double sd, double mean = 0.0) {
  measurement::MeasurementModel m;
  for (std::size_t j = 0; j < n_sensors; ++j) {
    m.points.push_back(dynamics::QoISpec::at_dof(dynamics::QoIKind::velocity, j));
    m.noise_mean.push_back(mean);
    m.noise_sd.push_back(sd);
  }
  return m;
}

/// Measurement record with `values` (steps x sensors) at 0.1 s spacing.
inline measurement::MeasurementSet toy_meas(const RowMatrix& values, const measurement::MeasurementModel& model) {
  measurement::MeasurementSet s;
  s.values = values;
  s.model = model;
  for (Eigen::Index r = 0; r < values.rows(); ++r) s.times.push_back(0.1 * static_cast<double>(r + 1));
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("kcq_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace kcq::test
