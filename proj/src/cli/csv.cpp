#include "kcq/cli/csv.hpp"

#include <cmath>
#include <map>

#include "kcq/errors.hpp"
#include "kcq/text.hpp"

namespace kcq::cli {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw ConfigError(name, "CSV has no column '" + name + "'");
}

std::vector<double> CsvTable::column_values(const std::string& name) const {
  const auto c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out.push_back(',');
    out += table.header[c];
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(',');
      out += text::format_double(row[c]);
    }
    out.push_back('\n');
  }
  return out;
}

CsvTable parse_csv(const std::string& body, const std::string& origin) {
  CsvTable table;
  std::size_t pos = 0, line_no = 0;
  while (pos < body.size()) {
    auto eol = body.find('\n', pos);
    if (eol == std::string::npos) eol = body.size();
    std::string_view line = std::string_view(body).substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (table.header.empty()) {
      for (auto f : fields) table.header.emplace_back(text::trim(f));
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ConfigError(origin, origin + ":" + std::to_string(line_no) + ": expected " +
                                    std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!text::parse_double(fields[c], row[c])) {
        throw ConfigError(origin, origin + ":" + std::to_string(line_no) + ": bad number '" + std::string(fields[c]) + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw ConfigError(origin, origin + ": empty CSV");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::string body;
  try {
    body = text::read_file(path);
  } catch (const Error&) {
    throw ConfigError(path, "cannot read " + path);
  }
  return parse_csv(body, path);
}

void write_csv(const std::string& path, const CsvTable& table) { text::write_file_atomic(path, to_csv(table)); }

CsvTable measurements_table(const measurement::MeasurementSet& meas) {
  CsvTable t;
  t.header = {"step", "time"};
  for (const auto& p : meas.model.points) t.header.push_back(p.to_string());
  for (std::size_t r = 0; r < meas.steps(); ++r) {
    std::vector<double> row = {static_cast<double>(r + 1), meas.times[r]};
    for (Eigen::Index j = 0; j < meas.values.cols(); ++j) row.push_back(meas.values(static_cast<Eigen::Index>(r), j));
    t.rows.push_back(std::move(row));
  }
  return t;
}

measurement::MeasurementSet measurements_from_table(const CsvTable& table, const measurement::MeasurementModel& model) {
  if (table.header.size() != model.size() + 2 || table.header[0] != "step" || table.header[1] != "time") {
    throw ConfigError("measurements", "measurement CSV header must be step,time,<one column per sensor>");
  }
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (dynamics::QoISpec::parse(table.header[j + 2]) != model.points[j]) {
      throw ConfigError("measurements", "measurement column '" + table.header[j + 2] + "' does not match sensor " +
                                            model.points[j].to_string());
    }
  }
  measurement::MeasurementSet meas;
  meas.model = model;
  meas.values.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(model.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r][0] != static_cast<double>(r + 1)) {
      throw ConfigError("measurements", "measurement rows must be consecutive steps starting at 1");
    }
    meas.times.push_back(table.rows[r][1]);
    for (std::size_t j = 0; j < model.size(); ++j) {
      meas.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = table.rows[r][j + 2];
    }
  }
  meas.validate();
  return meas;
}

CsvTable timeseries_table(const std::vector<TimeseriesRow>& rows) {
  CsvTable t;
  t.header = {"step", "time", "kcq_mean", "kcq_sd", "nmc_mean", "nmc_sd", "ess", "bandwidth"};
  for (const auto& r : rows) {
    t.rows.push_back({static_cast<double>(r.step), r.time, r.kcq_mean, r.kcq_sd, r.nmc_mean, r.nmc_sd, r.ess, r.bandwidth});
  }
  return t;
}

std::vector<TimeseriesRow> timeseries_from_table(const CsvTable& t) {
  const std::size_t c[8] = {t.column("step"), t.column("time"), t.column("kcq_mean"), t.column("kcq_sd"),
                            t.column("nmc_mean"), t.column("nmc_sd"), t.column("ess"), t.column("bandwidth")};
  std::vector<TimeseriesRow> out;
  for (const auto& r : t.rows) {
    out.push_back({static_cast<std::size_t>(r[c[0]]), r[c[1]], r[c[2]], r[c[3]], r[c[4]], r[c[5]], r[c[6]], r[c[7]]});
  }
  return out;
}

CsvTable pdf_table(const std::vector<double>& grid, const std::vector<double>& density,
                   const std::vector<double>& nonconditional) {
  CsvTable t;
  t.header = {"grid", "density", "nonconditional_density"};
  for (std::size_t p = 0; p < grid.size(); ++p) t.rows.push_back({grid[p], density[p], nonconditional[p]});
  return t;
}

CsvTable selection_table(const std::vector<estimators::KcqResult>& results) {
  CsvTable t;
  t.header = {"step", "rank", "meas_step", "point", "correlation"};
  for (const auto& r : results) {
    for (std::size_t m = 0; m < r.selection.size(); ++m) {
      const double corr = m < r.selection.correlations.size() ? r.selection.correlations[m] : 0.0;
      t.rows.push_back({static_cast<double>(r.step), static_cast<double>(m), static_cast<double>(r.selection.entries[m].step),
                        static_cast<double>(r.selection.entries[m].point), corr});
    }
  }
  return t;
}

std::vector<std::pair<std::size_t, std::vector<measurement::Cell>>> selections_from_table(const CsvTable& t) {
  const auto cs = t.column("step"), cm = t.column("meas_step"), cp = t.column("point");
  std::map<std::size_t, std::vector<measurement::Cell>> by_step;
  for (const auto& r : t.rows) {
    by_step[static_cast<std::size_t>(r[cs])].push_back({static_cast<std::size_t>(r[cm]), static_cast<std::size_t>(r[cp])});
  }
  return {by_step.begin(), by_step.end()};
}

}  // namespace kcq::cli
