#include "kcq/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "kcq/errors.hpp"
#include "kcq/numeric.hpp"
#include "kcq/text.hpp"

namespace kcq::pipeline {

namespace fs = std::filesystem;
using dynamics::QoIKind;
using dynamics::QoISpec;

RunConfig sdof_config() {
  RunConfig c;
  c.system = SystemKind::sdof;
  c.n = 500;
  c.dt = 0.05;
  c.n_steps = 200;
  c.qois = {QoISpec::at_dof(QoIKind::displacement, 0), QoISpec::at_dof(QoIKind::velocity, 0)};
  c.sensors.points = {QoISpec::at_dof(QoIKind::velocity, 0)};
  c.sensors.noise_mean = {0.0};
  c.sensors.noise_sd = {0.03};
  c.N_k = 2;
  return c;
}

RunConfig beam_config(std::size_t elements, std::size_t n_steps) {
  RunConfig c;
  c.system = SystemKind::beam;
  c.beam_elements = elements;
  c.kl_terms = 10;
  c.n = 100;
  c.dt = 0.001;
  c.n_steps = n_steps;
  c.qois = {QoISpec::at_x(QoIKind::displacement, 3.0), QoISpec::at_x(QoIKind::velocity, 3.0)};
  c.sensors.points = {QoISpec::at_x(QoIKind::displacement, 0.9), QoISpec::at_x(QoIKind::displacement, 2.1)};
  c.sensors.noise_mean = {0.0, 0.0};
  c.sensors.noise_sd = {0.005, 0.005};
  c.N_k = 1;
  return c;
}

std::unique_ptr<dynamics::DynamicalSystem> make_system(const RunConfig& config) {
  if (config.system == SystemKind::sdof) return dynamics::make_sdof_system();
  return dynamics::make_beam_system(config.beam_elements, dynamics::default_beam_field(config.kl_terms));
}

void validate_config(const RunConfig& c) {
  if (c.n == 0) throw ConfigError("n", "n must be a positive sample count");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt", "dt must be a positive time step");
  if (c.n_steps == 0) throw ConfigError("n_steps", "n_steps must be positive");
  if (c.max_iter <= 0) throw ConfigError("max_iter", "max_iter must be positive");
  if (!(c.failure_cap >= 0.0 && c.failure_cap < 1.0)) throw ConfigError("failure_cap", "failure_cap must lie in [0, 1)");
  if (c.system == SystemKind::beam) {
    if (c.beam_elements < 2) throw ConfigError("beam.elements", "the beam needs at least 2 elements");
    if (c.kl_terms == 0) throw ConfigError("beam.kl_terms", "kl_terms must be positive");
  }
  if (c.qois.empty()) throw ConfigError("qoi", "at least one QoI is required");
  try {
    c.sensors.validate();
  } catch (const Error& e) {
    throw ConfigError("sensors", e.what());
  }
  if (c.N_k == 0 || c.N_k > c.n_steps * c.sensors.size()) {
    throw ConfigError("N_k", "N_k must lie in 1.." + std::to_string(c.n_steps * c.sensors.size()));
  }
  if (!(c.estimator.ess_min >= 0.0)) throw ConfigError("ess_min", "ess_min must be non-negative");
  const auto system = make_system(c);
  for (const auto& q : c.qois) {
    try {
      dynamics::QoIReader(*system, q);
    } catch (const Error& e) {
      throw ConfigError("qoi", e.what());
    }
  }
  for (const auto& q : c.sensors.points) {
    try {
      dynamics::QoIReader(*system, q);
    } catch (const Error& e) {
      throw ConfigError("sensors", e.what());
    }
  }
}

namespace {

std::string hex_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

bool parse_hex_double(std::string_view tok, double& out) {
  bool neg = false;
  if (!tok.empty() && tok.front() == '-') {
    neg = true;
    tok.remove_prefix(1);
  }
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return false;
  if (neg) out = -out;
  return true;
}

std::string system_params(const RunConfig& c) {
  if (c.system == SystemKind::sdof) return "";
  return "elements=" + std::to_string(c.beam_elements) + " kl_terms=" + std::to_string(c.kl_terms);
}

/// Everything that determines the numeric content of a database row.
std::uint64_t run_digest(const RunConfig& c, const sampling::WeightedSampleSet& set) {
  std::ostringstream s;
  s << (c.system == SystemKind::sdof ? "sdof" : "beam") << ' ' << system_params(c) << ' '
    << text::format_double(c.dt) << ' ' << c.n_steps << ' ' << text::format_double(c.tol) << ' ' << c.max_iter;
  for (const auto& q : c.qois) s << " q:" << q.to_string();
  for (const auto& q : c.sensors.points) s << " s:" << q.to_string();
  std::uint64_t h = text::fnv1a(s.str());
  h = text::fnv1a(matrix_to_text(set.samples), h);
  return h;
}

struct JournalEntry {
  bool failed = false;
  std::vector<double> values;
};

std::map<std::size_t, JournalEntry> read_journal(const std::string& path, const std::string& header,
                                                 std::size_t values_per_row, std::size_t n) {
  std::map<std::size_t, JournalEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  if (!std::getline(in, line) || line != header) return out;
  while (std::getline(in, line)) {
    const auto bar = line.rfind(' ');
    if (bar == std::string::npos) continue;
    std::uint64_t sum = 0;
    if (!text::parse_uint(std::string_view(line).substr(bar + 1), sum)) continue;
    const std::string_view body = std::string_view(line).substr(0, bar);
    if (text::fnv1a(body) != sum) continue;
    const auto toks = text::split(body, ' ');
    std::uint64_t idx = 0;
    if (toks.size() < 2 || !text::parse_uint(toks[1], idx) || idx >= n) continue;
    JournalEntry e;
    if (toks[0] == "F" && toks.size() == 2) {
      e.failed = true;
    } else if (toks[0] == "S" && toks.size() == values_per_row + 2) {
      e.values.resize(values_per_row);
      bool ok = true;
      for (std::size_t v = 0; v < values_per_row && ok; ++v) ok = parse_hex_double(toks[v + 2], e.values[v]);
      if (!ok) continue;
    } else {
      continue;
    }
    out[idx] = std::move(e);
  }
  return out;
}

std::string journal_line(std::string body) {
  const auto sum = text::fnv1a(body);
  return body + " " + text::hex64(sum) + "\n";
}

}  // namespace

ResponseDatabase build_database(const RunConfig& config, const sampling::WeightedSampleSet& set,
                                const std::string& journal_path) {
  set.validate();
  const auto system = make_system(config);
  if (static_cast<std::size_t>(set.samples.cols()) != system->space().dim()) {
    throw ShapeError("sample set dimension does not match the system's parameter space");
  }
  std::vector<dynamics::QoIReader> readers;
  for (const auto& q : config.qois) readers.emplace_back(*system, q);
  for (const auto& q : config.sensors.points) readers.emplace_back(*system, q);
  const std::size_t n = set.size();
  const std::size_t cols = config.n_steps + 1;
  const std::size_t n_channels = readers.size();
  const std::size_t per_row = n_channels * cols;

  std::vector<RowMatrix> values(n_channels, RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols)));
  std::vector<char> done(n, 0), failed(n, 0);
  std::vector<std::string> failure_msg(n);

  const std::string header = "kcq-journal 1 " + text::hex64(run_digest(config, set));
  std::ofstream journal;
  if (!journal_path.empty()) {
    const auto previous = read_journal(journal_path, header, per_row, n);
    for (const auto& [idx, e] : previous) {
      done[idx] = 1;
      failed[idx] = e.failed ? 1 : 0;
      if (e.failed) {
        failure_msg[idx] = "failed in an earlier run";
        continue;
      }
      for (std::size_t c = 0; c < n_channels; ++c) {
        for (std::size_t k = 0; k < cols; ++k) {
          values[c](static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(k)) = e.values[c * cols + k];
        }
      }
    }
    // Rewrite the journal with only the entries that survived validation.
    std::string kept = header + "\n";
    for (const auto& [idx, e] : previous) {
      std::string body = (e.failed ? "F " : "S ") + std::to_string(idx);
      for (double v : e.values) body += " " + hex_double(v);
      kept += journal_line(std::move(body));
    }
    text::write_file_atomic(journal_path, kept);
    journal.open(journal_path, std::ios::app);
    if (!journal) throw Error("io", "cannot append to journal " + journal_path);
  }

  auto run_sample = [&](std::size_t i) {
    if (done[i]) return;
    const auto row = set.samples.row(static_cast<Eigen::Index>(i));
    const std::vector<double> alpha(row.data(), row.data() + row.size());
    std::string body;
    try {
      const Vector U0 = system->initial_state(alpha);
      const auto traj = dynamics::integrate(*system, alpha, U0, config.dt, config.n_steps, config.tol, config.max_iter);
      if (!traj.states.allFinite()) throw ConvergenceError("trajectory became non-finite", INFINITY);
      for (std::size_t c = 0; c < n_channels; ++c) {
        for (std::size_t k = 0; k < cols; ++k) {
          const auto s = traj.states.row(static_cast<Eigen::Index>(k));
          values[c](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
              readers[c].read({s.data(), static_cast<std::size_t>(s.size())});
        }
      }
      if (journal.is_open()) {
        body = "S " + std::to_string(i);
        for (std::size_t c = 0; c < n_channels; ++c) {
          for (std::size_t k = 0; k < cols; ++k) {
            body += " " + hex_double(values[c](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
          }
        }
      }
    } catch (const Error& e) {
      failed[i] = 1;
      failure_msg[i] = e.what();
      body = "F " + std::to_string(i);
    }
    done[i] = 1;
    if (journal.is_open()) {
      const std::string line = journal_line(std::move(body));
#pragma omp critical(kcq_journal)
      {
        journal << line;
        journal.flush();
      }
    }
  };
  if (config.exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) run_sample(i);
  } else {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) run_sample(static_cast<std::size_t>(i));
  }

  std::vector<std::size_t> failures;
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) failures.push_back(i);
  }
  if (static_cast<double>(failures.size()) > config.failure_cap * static_cast<double>(n)) {
    std::ostringstream msg;
    msg << failures.size() << " of " << n << " samples failed to integrate (cap "
        << config.failure_cap * 100.0 << "%)";
    for (std::size_t f = 0; f < std::min<std::size_t>(failures.size(), 5); ++f) {
      const auto i = failures[f];
      msg << "\n  sample " << i << " alpha=[";
      for (Eigen::Index j = 0; j < set.samples.cols(); ++j) {
        msg << (j ? ", " : "") << text::format_double(set.samples(static_cast<Eigen::Index>(i), j));
      }
      msg << "]: " << failure_msg[i];
    }
    throw SampleFailureError(msg.str());
  }

  ResponseDatabase db;
  db.space = system->space();
  db.times.resize(cols);
  for (std::size_t k = 0; k < cols; ++k) db.times[k] = static_cast<double>(k) * config.dt;
  auto& p = db.provenance;
  p.system = config.system == SystemKind::sdof ? "sdof" : "beam";
  p.system_params = system_params(config);
  p.dt = config.dt;
  p.n_steps = config.n_steps;
  p.tol = config.tol;
  p.max_iter = config.max_iter;
  p.seed = config.seed;
  p.generator = set.generator_tag;
  p.n_probe = config.n_probe;
  p.n_requested = n;
  p.failed = failures;

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!failed[i]) keep.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  db.sample_set.generator_tag = set.generator_tag;
  db.sample_set.seed = set.seed;
  db.sample_set.samples.resize(m, set.samples.cols());
  db.sample_set.weights.resize(keep.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    db.sample_set.samples.row(r) = set.samples.row(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(r)]));
    db.sample_set.weights[static_cast<std::size_t>(r)] = set.weights[keep[static_cast<std::size_t>(r)]];
  }
  if (!failures.empty()) {
    const double total = compensated_sum(db.sample_set.weights);
    for (double& w : db.sample_set.weights) w /= total;
    std::clog << "warning: excluded " << failures.size() << " failed sample(s); weights renormalised\n";
  }
  for (std::size_t c = 0; c < n_channels; ++c) {
    Channel ch;
    ch.spec = c < config.qois.size() ? config.qois[c] : config.sensors.points[c - config.qois.size()];
    ch.values.resize(m, static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m; ++r) {
      ch.values.row(r) = values[c].row(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(r)]));
    }
    (c < config.qois.size() ? db.qoi_channels : db.sensor_channels).push_back(std::move(ch));
  }
  db.validate();
  return db;
}

ResponseDatabase offline_generate(const RunConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  const auto system = make_system(config);
  const auto set =
      sampling::generate_sample_set(system->space(), config.n, config.seed, config.generator, config.n_probe, config.exec);
  std::string journal;
  if (!config.output_dir.empty()) {
    fs::create_directories(config.output_dir);
    journal = (fs::path(config.output_dir) / "journal").string();
  }
  ResponseDatabase db = build_database(config, set, journal);
  if (!config.output_dir.empty()) {
    store_database(db, config.output_dir);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream report;
    report << "samples_requested = " << config.n << "\n"
           << "samples_stored = " << db.size() << "\n"
           << "samples_failed = " << db.provenance.failed.size() << "\n"
           << "threads = " << available_threads() << "\n"
           << "wall_seconds = " << seconds << "\n";
    text::write_file_atomic((fs::path(config.output_dir) / "report.txt").string(), report.str());
  }
  return db;
}

dynamics::StateTrajectory simulate_truth(const RunConfig& config, const std::vector<double>& alpha) {
  const auto system = make_system(config);
  if (alpha.size() != system->space().dim()) {
    throw ShapeError("truth parameters need " + std::to_string(system->space().dim()) + " values");
  }
  return dynamics::integrate(*system, alpha, system->initial_state(alpha), config.dt, config.n_steps, config.tol,
                             config.max_iter);
}

std::vector<estimators::KcqResult> online_quantify(const ResponseDatabase& db,
                                                   const measurement::MeasurementSet& meas,
                                                   const dynamics::QoISpec& qoi, const std::vector<std::size_t>& steps,
                                                   std::size_t N_k, const estimators::Options& opts) {
  meas.validate();
  std::vector<estimators::KcqResult> out;
  out.reserve(steps.size());
  for (std::size_t k : steps) {
    if (k == 0 || k > db.steps()) {
      throw IndexError("step " + std::to_string(k) + " outside the database horizon 1.." + std::to_string(db.steps()));
    }
    if (k > meas.steps()) {
      throw IndexError("step " + std::to_string(k) + " has no measurements (record ends at " +
                       std::to_string(meas.steps()) + ")");
    }
    const RowMatrix r = measurement::correlation_coefficients(db, qoi, k, meas.model, opts.exec);
    const auto sel = measurement::select_key_conditions(r, meas, N_k, meas.model);
    out.push_back(estimators::kcq_quantify(db, sel, qoi, k, opts));
  }
  return out;
}

}  // namespace kcq::pipeline
