#include "kcq/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "kcq/database.hpp"
#include "kcq/errors.hpp"
#include "kcq/numeric.hpp"

namespace kcq::measurement {

void MeasurementModel::validate() const {
  if (points.empty()) throw ShapeError("measurement model has no sensors");
  if (noise_mean.size() != points.size() || noise_sd.size() != points.size()) {
    throw ShapeError("measurement model: noise_mean and noise_sd need one entry per sensor");
  }
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (!(noise_sd[j] > 0.0) || !std::isfinite(noise_sd[j])) {
      throw DomainError("sensor " + std::to_string(j) + " noise sd must be positive and finite");
    }
    if (!std::isfinite(noise_mean[j])) throw NonFiniteInputError("sensor " + std::to_string(j) + " noise mean");
  }
}

double MeasurementSet::at(std::size_t step, std::size_t point) const {
  if (step == 0 || step > steps()) throw IndexError("measurement step " + std::to_string(step) + " not recorded");
  if (point >= static_cast<std::size_t>(values.cols())) throw IndexError("sensor " + std::to_string(point));
  return values(static_cast<Eigen::Index>(step - 1), static_cast<Eigen::Index>(point));
}

void MeasurementSet::validate() const {
  model.validate();
  if (static_cast<std::size_t>(values.cols()) != model.size()) {
    throw ShapeError("measurement record has " + std::to_string(values.cols()) + " columns, model has " +
                     std::to_string(model.size()) + " sensors");
  }
  if (times.size() != steps()) throw ShapeError("measurement times and rows differ in length");
  if (!values.allFinite()) throw NonFiniteInputError("measurement record contains non-finite values");
}

MeasurementSet simulate_measurements(const dynamics::StateTrajectory& true_traj, const MeasurementModel& model,
                                     const dynamics::DynamicalSystem& system, std::uint64_t seed) {
  model.validate();
  const std::size_t K = true_traj.steps();
  std::vector<dynamics::QoIReader> readers;
  readers.reserve(model.size());
  for (const auto& p : model.points) readers.emplace_back(system, p);
  MeasurementSet out;
  out.model = model;
  out.times.assign(true_traj.times.begin() + 1, true_traj.times.end());
  out.values.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(model.size()));
  std::mt19937_64 rng(mix_seed(seed, 0x6e6f697365ULL));
  for (std::size_t i = 1; i <= K; ++i) {
    const auto row = true_traj.states.row(static_cast<Eigen::Index>(i));
    const std::span<const double> state(row.data(), static_cast<std::size_t>(row.size()));
    for (std::size_t j = 0; j < model.size(); ++j) {
      const double u = unit_open(rng());
      double y = readers[j].read(state);
      if (!model.noise_off(j)) y += model.noise_mean[j] + model.noise_sd[j] * normal_quantile(u);
      out.values(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) = y;
    }
  }
  return out;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments weighted_column(const RowMatrix& values, std::size_t col, std::span<const double> w) {
  CompensatedSum m;
  for (std::size_t i = 0; i < w.size(); ++i) m.add(w[i] * values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)));
  Moments out;
  out.mean = m.value();
  CompensatedSum v;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) - out.mean;
    v.add(w[i] * d * d);
  }
  out.var = v.value();
  return out;
}

double correlation_cell(const RowMatrix& sensor, std::size_t step, const std::vector<double>& u_centered,
                        double var_u, double sd, std::span<const double> w) {
  const Moments h = weighted_column(sensor, step, w);
  CompensatedSum c;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = sensor(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(step)) - h.mean;
    c.add(w[i] * d * u_centered[i]);
  }
  const double denom = (h.var + sd * sd) * var_u;
  if (!(denom > 0.0)) return 0.0;
  return c.value() / std::sqrt(denom);
}

}  // namespace

RowMatrix correlation_coefficients(const ResponseDatabase& db, const dynamics::QoISpec& qoi, std::size_t k,
                                   const MeasurementModel& model, Exec exec) {
  model.validate();
  if (k == 0 || k > db.steps()) {
    throw IndexError("step " + std::to_string(k) + " outside database horizon 1.." + std::to_string(db.steps()));
  }
  if (db.sensor_channels.size() != model.size()) {
    throw CoverageError("database has " + std::to_string(db.sensor_channels.size()) + " sensor channels, model has " +
                        std::to_string(model.size()));
  }
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (!(db.sensor_channels[j].spec == model.points[j])) {
      throw CoverageError("sensor " + std::to_string(j) + " of the model (" + model.points[j].to_string() +
                          ") does not match the database channel (" + db.sensor_channels[j].spec.to_string() + ")");
    }
  }
  const auto& g = db.qoi(qoi).values;
  const std::span<const double> w(db.sample_set.weights);
  const Moments u = weighted_column(g, k, w);
  if (!(u.var > 0.0)) {
    throw ZeroVarianceError("response " + qoi.to_string() + " has zero weighted variance at step " + std::to_string(k));
  }
  std::vector<double> u_centered(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) u_centered[i] = g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) - u.mean;

  const std::size_t m = model.size();
  const std::size_t cells = k * m;
  RowMatrix r(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
  auto compute = [&](std::size_t c) {
    const std::size_t step = c / m + 1;
    const std::size_t j = c % m;
    const double sd = model.noise_off(j) ? 0.0 : model.noise_sd[j];
    r(static_cast<Eigen::Index>(step - 1), static_cast<Eigen::Index>(j)) =
        correlation_cell(db.sensor_channels[j].values, step, u_centered, u.var, sd, w);
  };
  if (exec == Exec::serial) {
    for (std::size_t c = 0; c < cells; ++c) compute(c);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cells); ++c) compute(static_cast<std::size_t>(c));
  }
  return r;
}

KeyConditionSelection selection_from_cells(std::vector<Cell> cells, const MeasurementSet& meas,
                                           const MeasurementModel& model) {
  model.validate();
  const auto n = static_cast<Eigen::Index>(cells.size());
  KeyConditionSelection sel;
  sel.z.resize(n);
  sel.mu_beta.resize(n);
  sel.R_beta = Matrix::Zero(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const Cell& c = cells[static_cast<std::size_t>(m)];
    for (Eigen::Index q = 0; q < m; ++q) {
      if (cells[static_cast<std::size_t>(q)] == c) throw DomainError("selection repeats a measurement cell");
    }
    sel.z(m) = meas.at(c.step, c.point);
    sel.mu_beta(m) = model.noise_mean.at(c.point);
    sel.R_beta(m, m) = model.noise_sd[c.point] * model.noise_sd[c.point];
  }
  sel.entries = std::move(cells);
  return sel;
}

KeyConditionSelection select_key_conditions(const RowMatrix& r, const MeasurementSet& meas, std::size_t N_k,
                                            const MeasurementModel& model) {
  const std::size_t k = static_cast<std::size_t>(r.rows());
  const std::size_t m = static_cast<std::size_t>(r.cols());
  if (N_k == 0) throw SizeError("N_k must be at least 1");
  if (N_k > k * m) {
    throw SizeError("N_k = " + std::to_string(N_k) + " exceeds the " + std::to_string(k * m) + " available cells");
  }
  std::vector<Cell> cells;
  cells.reserve(k * m);
  for (std::size_t i = 1; i <= k; ++i) {
    for (std::size_t j = 0; j < m; ++j) cells.push_back({i, j});
  }
  auto mag = [&](const Cell& c) {
    return std::abs(r(static_cast<Eigen::Index>(c.step - 1), static_cast<Eigen::Index>(c.point)));
  };
  std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(N_k), cells.end(),
                    [&](const Cell& a, const Cell& b) {
                      const double ra = mag(a), rb = mag(b);
                      if (ra != rb) return ra > rb;
                      if (a.step != b.step) return a.step > b.step;
                      return a.point < b.point;
                    });
  cells.resize(N_k);
  std::vector<double> corr;
  corr.reserve(N_k);
  for (const auto& c : cells) corr.push_back(mag(c));
  auto sel = selection_from_cells(std::move(cells), meas, model);
  sel.correlations = std::move(corr);
  return sel;
}

KeyConditionSelection select_all_conditions(const MeasurementSet& meas, std::size_t k, const MeasurementModel& model) {
  if (k == 0 || k > meas.steps()) throw IndexError("step " + std::to_string(k) + " not covered by the measurements");
  std::vector<Cell> cells;
  for (std::size_t i = 1; i <= k; ++i) {
    for (std::size_t j = 0; j < model.size(); ++j) cells.push_back({i, j});
  }
  return selection_from_cells(std::move(cells), meas, model);
}

GaussianErrorDensity::GaussianErrorDensity(Vector mean, const Matrix& covariance)
    : mean_(std::move(mean)), factor_(covariance), work_(mean_.size()) {
  if (covariance.rows() != mean_.size() || covariance.cols() != mean_.size()) {
    throw ShapeError("error covariance does not match the mean length");
  }
  if (factor_.info() != Eigen::Success) throw NonPdCovarianceError("error covariance is not positive definite");
  const auto& L = factor_.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const double d = L(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) throw NonPdCovarianceError("error covariance is not positive definite");
    logdet += 2.0 * std::log(d);
  }
  log_norm_ = -0.5 * logdet - static_cast<double>(mean_.size()) * kLogSqrt2Pi;
}

double GaussianErrorDensity::logpdf(const Vector& beta) const {
  if (beta.size() != mean_.size()) throw ShapeError("beta has the wrong length");
  work_ = beta - mean_;
  factor_.matrixL().solveInPlace(work_);
  return log_norm_ - 0.5 * work_.squaredNorm();
}

double gaussian_error_logpdf(const Vector& beta, const KeyConditionSelection& sel) {
  return GaussianErrorDensity(sel.mu_beta, sel.R_beta).logpdf(beta);
}

}  // namespace kcq::measurement
