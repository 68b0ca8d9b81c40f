#include "kcq/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "kcq/cli/config.hpp"
#include "kcq/cli/csv.hpp"
#include "kcq/cli/svg.hpp"
#include "kcq/errors.hpp"
#include "kcq/oracle.hpp"
#include "kcq/pipeline.hpp"
#include "kcq/text.hpp"

namespace kcq::cli {

namespace fs = std::filesystem;

namespace {

ConfigFile load_config(const std::string& path, const std::vector<std::string>& overrides) {
  ConfigFile cfg = ConfigFile::load(path);
  for (const auto& o : overrides) cfg.set_override(o);
  return cfg;
}

std::string qoi_dir(const std::string& out, const dynamics::QoISpec& qoi) {
  return (fs::path(out) / qoi.channel_name()).string();
}

std::string pdf_name(std::size_t step) { return "kcq_pdf_" + std::to_string(step) + ".csv"; }

double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

measurement::MeasurementSet read_measurements(const std::string& path, const measurement::MeasurementModel& model) {
  return measurements_from_table(read_csv(path), model);
}

/// Writes measurements.csv for the configured truth, if any.
void write_truth_measurements(const Settings& s, const std::string& dir) {
  if (!s.truth_eps) return;
  const auto system = pipeline::make_system(s.run);
  const auto traj = pipeline::simulate_truth(s.run, *s.truth_eps);
  const auto meas = measurement::simulate_measurements(traj, s.run.sensors, *system, s.noise_seed);
  write_csv((fs::path(dir) / "measurements.csv").string(), measurements_table(meas));
}

void run_offline(const Settings& s, const ConfigFile& cfg, const std::string& dir) {
  auto run = s.run;
  run.output_dir = dir;
  const auto db = pipeline::offline_generate(run);
  text::write_file_atomic((fs::path(dir) / "config.cfg").string(), cfg.to_text());
  write_truth_measurements(s, dir);
  std::printf("offline: %zu samples (%zu failed), %zu steps, %zu QoI + %zu sensor channels -> %s\n", db.size(),
              db.provenance.failed.size(), db.steps(), db.qoi_channels.size(), db.sensor_channels.size(), dir.c_str());
}

void run_quantify(const ResponseDatabase& db, const measurement::MeasurementSet& meas,
                  const std::vector<dynamics::QoISpec>& qois, std::size_t N_k, const std::vector<std::size_t>& steps,
                  const std::vector<std::size_t>& pdf_steps, const estimators::Options& base, const std::string& out,
                  bool plots) {
  const std::set<std::size_t> pdf_set(pdf_steps.begin(), pdf_steps.end());
  for (const auto& qoi : qois) {
    const std::string dir = qoi_dir(out, qoi);
    fs::create_directories(dir);
    std::vector<TimeseriesRow> rows;
    std::vector<estimators::KcqResult> results;
    for (std::size_t k : steps) {
      estimators::Options opts = base;
      opts.compute_pdf = pdf_set.count(k) != 0;
      // Early steps have fewer than N_k cells to choose from.
      const std::size_t nk = std::min(N_k, k * meas.model.size());
      auto r = pipeline::online_quantify(db, meas, qoi, {k}, nk, opts).front();
      const auto nc = estimators::nonconditional_stats(db, qoi, k, r.pdf_grid, opts.exec);
      rows.push_back({k, db.times[k], r.mean, r.sd, nc.mean, nc.sd, r.ess, r.bandwidth});
      if (opts.compute_pdf) {
        const auto table = pdf_table(r.pdf_grid, r.pdf_values, nc.pdf_values);
        const auto path = (fs::path(dir) / pdf_name(k)).string();
        write_csv(path, table);
        if (plots) {
          text::write_file_atomic((fs::path(dir) / ("kcq_pdf_" + std::to_string(k) + ".svg")).string(),
                                  pdf_plot_svg(read_csv(path), qoi.to_string() + " at t = " + text::format_double(db.times[k]) + " s"));
        }
      }
      r.pdf_grid.clear();
      r.pdf_values.clear();
      results.push_back(std::move(r));
    }
    const auto ts_path = (fs::path(dir) / "kcq_timeseries.csv").string();
    write_csv(ts_path, timeseries_table(rows));
    write_csv((fs::path(dir) / "kcq_selection.csv").string(), selection_table(results));
    if (plots) {
      text::write_file_atomic((fs::path(dir) / "kcq_band.svg").string(), band_plot_svg(read_csv(ts_path), qoi.to_string()));
    }
  }
}

void run_mc_reference(const Settings& s, const measurement::MeasurementSet& meas, const std::string& kcq_dir,
                      const std::string& out) {
  const auto db = oracle::mc_sample_database(s.run, s.mc);
  std::size_t done = 0;
  for (const auto& qoi : s.run.qois) {
    const std::string in_dir = qoi_dir(kcq_dir, qoi);
    // quantify may have been run for a subset of the configured QoIs.
    if (!fs::exists(fs::path(in_dir) / "kcq_selection.csv")) continue;
    ++done;
    const std::string dir = qoi_dir(out, qoi);
    fs::create_directories(dir);
    const auto selections = selections_from_table(read_csv((fs::path(in_dir) / "kcq_selection.csv").string()));
    CsvTable ts;
    ts.header = {"step", "time", "mc_mean", "mc_sd", "ess"};
    for (const auto& [k, cells] : selections) {
      if (k == 0 || k > db.steps()) throw IndexError("selection step " + std::to_string(k) + " outside the horizon");
      const auto sel = measurement::selection_from_cells(cells, meas, meas.model);
      estimators::Options opts = s.run.estimator;
      opts.compute_pdf = false;
      const auto r = estimators::kcq_quantify(db, sel, qoi, k, opts);
      ts.rows.push_back({static_cast<double>(k), db.times[k], r.mean, r.sd, r.ess});
      const auto kcq_pdf = fs::path(in_dir) / pdf_name(k);
      if (fs::exists(kcq_pdf)) {
        const auto grid = read_csv(kcq_pdf.string()).column_values("grid");
        const auto W = estimators::posterior_weights(db.sample_set.weights, estimators::log_likelihoods(db, sel));
        const auto g = estimators::response_column(db, qoi, k);
        const auto density = estimators::weighted_kde(grid, g, W, r.bandwidth, opts.exec);
        CsvTable pdf;
        pdf.header = {"grid", "density"};
        for (std::size_t p = 0; p < grid.size(); ++p) pdf.rows.push_back({grid[p], density[p]});
        write_csv((fs::path(dir) / ("mc_pdf_" + std::to_string(k) + ".csv")).string(), pdf);
      }
    }
    write_csv((fs::path(dir) / "mc_timeseries.csv").string(), ts);
  }
  if (done == 0) throw ConfigError("kcq", "no kcq_selection.csv for any configured QoI under " + kcq_dir);
}

struct CompareRow {
  std::size_t step;
  double time, kcq_mean, mc_mean, mean_re, kcq_sd, mc_sd, sd_re, nmc_sd;
};

std::vector<CompareRow> compare_dirs(const std::string& kcq_dir, const std::string& mc_dir, const std::string& out) {
  const auto kcq = timeseries_from_table(read_csv((fs::path(kcq_dir) / "kcq_timeseries.csv").string()));
  const auto mc = read_csv((fs::path(mc_dir) / "mc_timeseries.csv").string());
  const auto ms = mc.column_values("step"), mm = mc.column_values("mc_mean"), msd = mc.column_values("mc_sd");
  std::vector<CompareRow> rows;
  for (const auto& r : kcq) {
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (static_cast<std::size_t>(ms[i]) != r.step) continue;
      rows.push_back({r.step, r.time, r.kcq_mean, mm[i], relative_error(r.kcq_mean, mm[i]), r.kcq_sd, msd[i],
                      relative_error(r.kcq_sd, msd[i]), r.nmc_sd});
    }
  }
  CsvTable t;
  t.header = {"step", "time", "kcq_mean", "mc_mean", "mean_re", "kcq_sd", "mc_sd", "sd_re", "nmc_sd"};
  for (const auto& r : rows) {
    t.rows.push_back({static_cast<double>(r.step), r.time, r.kcq_mean, r.mc_mean, r.mean_re, r.kcq_sd, r.mc_sd, r.sd_re, r.nmc_sd});
  }
  fs::create_directories(out);
  write_csv((fs::path(out) / "compare.csv").string(), t);
  return rows;
}

void print_compare(const std::string& qoi, const std::vector<CompareRow>& rows, const std::set<std::size_t>& steps) {
  std::printf("%s\n", qoi.c_str());
  std::printf("  %8s  %12s %12s %8s  %12s %12s %8s  %12s\n", "time", "KCQ mean", "MC mean", "RE", "KCQ SD", "MC SD",
              "RE", "N-MC SD");
  for (const auto& r : rows) {
    if (!steps.empty() && !steps.count(r.step)) continue;
    std::printf("  %8.4g  %12.5g %12.5g %7.2f%%  %12.5g %12.5g %7.2f%%  %12.5g\n", r.time, r.kcq_mean, r.mc_mean,
                100.0 * r.mean_re, r.kcq_sd, r.mc_sd, 100.0 * r.sd_re, r.nmc_sd);
  }
}

}  // namespace

int cmd_offline(const OfflineArgs& args) {
  const ConfigFile cfg = load_config(args.config, args.overrides);
  const Settings s = settings_from_config(cfg);
  const std::string dir = !args.out.empty() ? args.out : s.run.output_dir;
  if (dir.empty()) throw ConfigError("run.output_dir", "no output directory: pass --out or set run.output_dir");
  run_offline(s, cfg, dir);
  return kExitOk;
}

int cmd_quantify(const QuantifyArgs& args) {
  const std::string config = !args.config.empty() ? args.config : (fs::path(args.db) / "config.cfg").string();
  const Settings s = settings_from_config(load_config(config, args.overrides));
  const ResponseDatabase db = load_database(args.db);
  measurement::MeasurementModel model = s.run.sensors;
  const auto meas = read_measurements(args.measurements, model);
  std::vector<dynamics::QoISpec> qois;
  for (const auto& q : args.qois) {
    try {
      qois.push_back(dynamics::QoISpec::parse(q));
    } catch (const Error& e) {
      throw ConfigError("qoi", e.what());
    }
  }
  if (qois.empty()) qois = s.run.qois;
  for (const auto& q : qois) {
    if (!db.has_qoi(q)) throw ConfigError("qoi", "database stores no channel for " + q.to_string());
  }
  const auto steps = args.steps.empty() ? s.steps : parse_steps(args.steps, "steps");
  const auto pdf_steps = args.pdf_steps.empty() ? s.pdf_steps : parse_steps(args.pdf_steps, "pdf-steps");
  for (auto k : steps) {
    if (k == 0 || k > db.steps() || k > meas.steps()) {
      throw ConfigError("steps", "step " + std::to_string(k) + " is beyond the horizon (1.." +
                                     std::to_string(std::min(db.steps(), meas.steps())) + ")");
    }
  }
  run_quantify(db, meas, qois, args.N_k.value_or(s.run.N_k), steps, pdf_steps, s.run.estimator, args.out, args.plots);
  std::printf("quantify: %zu QoI x %zu steps -> %s\n", qois.size(), steps.size(), args.out.c_str());
  return kExitOk;
}

int cmd_mc_reference(const McReferenceArgs& args) {
  Settings s = settings_from_config(load_config(args.config, args.overrides));
  if (args.n_mc) s.mc.n_mc = *args.n_mc;
  if (args.seed) s.mc.seed = *args.seed;
  const auto meas = read_measurements(args.measurements, s.run.sensors);
  run_mc_reference(s, meas, args.kcq, args.out);
  std::printf("mc-reference: %zu draws -> %s\n", s.mc.n_mc, args.out.c_str());
  return kExitOk;
}

int cmd_compare(const CompareArgs& args) {
  const fs::path out = args.out.empty() ? fs::path(args.kcq) : fs::path(args.out);
  std::vector<fs::path> dirs;
  if (fs::is_directory(args.kcq)) {
    for (const auto& e : fs::directory_iterator(args.kcq)) {
      if (fs::exists(e.path() / "kcq_timeseries.csv")) dirs.push_back(e.path());
    }
  }
  if (dirs.empty()) throw ConfigError("kcq", "no QoI directories with kcq_timeseries.csv under " + args.kcq);
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    const auto name = d.filename();
    const auto rows = compare_dirs(d.string(), (fs::path(args.mc) / name).string(), (out / name).string());
    print_compare(name.string(), rows, {});
  }
  return kExitOk;
}

int cmd_example(const ExampleArgs& args) {
  ConfigFile cfg = ConfigFile::parse(preset_config(args.name, args.scale), args.name + "-" + args.scale);
  for (const auto& o : args.overrides) cfg.set_override(o);
  const Settings s = settings_from_config(cfg);
  const fs::path out(args.out);
  fs::create_directories(out);
  const std::string db_dir = (out / "db").string();
  run_offline(s, cfg, db_dir);
  const ResponseDatabase db = load_database(db_dir);
  const auto meas = read_measurements((fs::path(db_dir) / "measurements.csv").string(), s.run.sensors);
  run_quantify(db, meas, s.run.qois, s.run.N_k, s.steps, s.pdf_steps, s.run.estimator, (out / "kcq").string(), true);
  run_mc_reference(s, meas, (out / "kcq").string(), (out / "mc").string());
  const std::set<std::size_t> probes(s.pdf_steps.begin(), s.pdf_steps.end());
  std::printf("\n%s (%s scale): KCQ n=%zu vs MC oracle n=%zu, N_k=%zu\n", args.name.c_str(), args.scale.c_str(), db.size(),
              s.mc.n_mc, s.run.N_k);
  for (const auto& qoi : s.run.qois) {
    const auto rows = compare_dirs(qoi_dir((out / "kcq").string(), qoi), qoi_dir((out / "mc").string(), qoi),
                                   qoi_dir((out / "compare").string(), qoi));
    print_compare(qoi.to_string(), rows, probes);
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Key conditional quotient uncertainty quantification"};
  app.require_subcommand(1);

  OfflineArgs off;
  auto* c_off = app.add_subcommand("offline", "Generate the response database");
  c_off->add_option("--config", off.config, "Config file")->required();
  c_off->add_option("--set", off.overrides, "Override section.key=value");
  c_off->add_option("--out", off.out, "Database directory (default run.output_dir)");

  QuantifyArgs q;
  auto* c_q = app.add_subcommand("quantify", "Conditional statistics from a database and measurements");
  c_q->add_option("--db", q.db, "Database directory")->required();
  c_q->add_option("--measurements", q.measurements, "Measurement CSV")->required();
  c_q->add_option("--config", q.config, "Config (default <db>/config.cfg)");
  c_q->add_option("--set", q.overrides, "Override section.key=value");
  c_q->add_option("--qoi", q.qois, "QoI, e.g. displacement:dof=0 (default: all configured)");
  c_q->add_option("--nk", q.N_k, "Number of key conditions");
  c_q->add_option("--steps", q.steps, "Steps, e.g. 1-200 or 50,100");
  c_q->add_option("--pdf-steps", q.pdf_steps, "Steps that get a PDF file");
  c_q->add_option("--out", q.out, "Output directory")->required();
  bool no_plots = false;
  c_q->add_flag("--no-plots", no_plots, "Skip SVG output");

  McReferenceArgs mc;
  auto* c_mc = app.add_subcommand("mc-reference", "Pseudo-random conditional oracle on quantify's selections");
  c_mc->add_option("--config", mc.config, "Config file")->required();
  c_mc->add_option("--set", mc.overrides, "Override section.key=value");
  c_mc->add_option("--measurements", mc.measurements, "Measurement CSV")->required();
  c_mc->add_option("--kcq", mc.kcq, "Output directory of quantify")->required();
  c_mc->add_option("--out", mc.out, "Output directory")->required();
  c_mc->add_option("--n-mc", mc.n_mc, "Number of draws");
  c_mc->add_option("--seed", mc.seed, "Draw seed");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Relative errors of quantify output against mc-reference");
  c_cmp->add_option("--kcq", cmp.kcq, "quantify output directory")->required();
  c_cmp->add_option("--mc", cmp.mc, "mc-reference output directory")->required();
  c_cmp->add_option("--out", cmp.out, "Where to write compare.csv (default --kcq)");

  ExampleArgs ex;
  auto* c_ex = app.add_subcommand("example", "Run a built-in example end to end");
  c_ex->add_option("name", ex.name, "sdof or beam")->required();
  c_ex->add_option("--scale", ex.scale, "paper or desk");
  c_ex->add_option("--out", ex.out, "Output directory")->required();
  c_ex->add_option("--set", ex.overrides, "Override section.key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*c_off) return cmd_offline(off);
    if (*c_q) {
      q.plots = !no_plots;
      return cmd_quantify(q);
    }
    if (*c_mc) return cmd_mc_reference(mc);
    if (*c_cmp) return cmd_compare(cmp);
    if (*c_ex) return cmd_example(ex);
  } catch (const DegenerateLikelihoodError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  } catch (const SampleFailureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  } catch (const ConfigError& e) {
    std::cerr << "error [" << e.key() << "]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    // Everything else the library raises is a problem with the inputs.
    std::cerr << "error (" << e.category() << "): " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  }
  return kExitValidation;
}

}  // namespace kcq::cli
