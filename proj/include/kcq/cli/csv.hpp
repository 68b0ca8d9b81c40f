#pragma once

#include <string>
#include <vector>

#include "kcq/estimators.hpp"
#include "kcq/measurement.hpp"

namespace kcq::cli {

/// Header plus numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Throws ConfigError when the column is absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& body, const std::string& origin);
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// step,time,<sensor_0>,... with sensor columns named by their QoI text.
CsvTable measurements_table(const measurement::MeasurementSet& meas);
/// Rebuilds the record; the noise model comes from the caller and its sensors
/// must match the column names.
measurement::MeasurementSet measurements_from_table(const CsvTable& table, const measurement::MeasurementModel& model);

struct TimeseriesRow {
  std::size_t step = 0;
  double time = 0.0;
  double kcq_mean = 0.0;
  double kcq_sd = 0.0;
  double nmc_mean = 0.0;
  double nmc_sd = 0.0;
  double ess = 0.0;
  double bandwidth = 0.0;
};

CsvTable timeseries_table(const std::vector<TimeseriesRow>& rows);
std::vector<TimeseriesRow> timeseries_from_table(const CsvTable& table);

/// grid,density,nonconditional_density
CsvTable pdf_table(const std::vector<double>& grid, const std::vector<double>& density,
                   const std::vector<double>& nonconditional);

/// step,rank,meas_step,point,correlation: the cells selected at each step.
CsvTable selection_table(const std::vector<estimators::KcqResult>& results);
/// Cells per step, in rank order.
std::vector<std::pair<std::size_t, std::vector<measurement::Cell>>> selections_from_table(const CsvTable& table);

}  // namespace kcq::cli
