#include <doctest.h>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "kcq/cli/commands.hpp"
#include "kcq/cli/config.hpp"
#include "kcq/cli/csv.hpp"
#include "kcq/cli/svg.hpp"
#include "kcq/errors.hpp"
#include "kcq/text.hpp"

using namespace kcq;
using namespace kcq::cli;
namespace fs = std::filesystem;

namespace {

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "kcq");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

std::string key_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

const std::vector<std::string> kSmall = {"--set", "run.n=40",        "--set", "run.n_steps=20",
                                         "--set", "online.steps=1-20", "--set", "online.pdf_steps=10,20"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

std::string slurp(const fs::path& p) { return text::read_file(p.string()); }

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = ConfigFile::parse(preset_config("sdof", "desk"));
  CHECK(cfg.get_double("run.dt") == 0.05);
  CHECK(cfg.get_uint("mc.n_mc") == 100000);
  CHECK(cfg.get_list("qoi.list") == std::vector<std::string>{"displacement:dof=0", "velocity:dof=0"});
  CHECK(cfg.get_doubles("truth.eps") == std::vector<double>{0.0, 0.0});
  CHECK(ConfigFile::parse(cfg.to_text()).values() == cfg.values());

  const auto s = settings_from_config(cfg);
  CHECK(s.run.n == 500);
  CHECK(s.run.n_steps == 200);
  CHECK(s.steps.size() == 200);
  CHECK(s.pdf_steps == std::vector<std::size_t>{50, 100, 150, 200});
  CHECK(s.mc.seed == 7);
  CHECK(s.noise_seed == 2024);

  auto over = cfg;
  over.set_override("run.n=64");
  CHECK(settings_from_config(over).run.n == 64);

  CHECK(parse_steps("1-3, 7", "x") == std::vector<std::size_t>{1, 2, 3, 7});
  CHECK(key_of([] { parse_steps("3-1", "online.steps"); }) == "online.steps");
}

TEST_CASE("config errors name the key") {
  CHECK(key_of([] { ConfigFile::parse("[run]\nn = 1\n"); }) == "header");
  CHECK(key_of([] { ConfigFile::parse("kcq-config 1\n[run\n"); }) == "section");
  CHECK(key_of([] { ConfigFile::parse("kcq-config 1\n[run]\nn 1\n"); }) == "syntax");
  CHECK(key_of([] { ConfigFile::parse("kcq-config 1").set_override("n"); }) == "set");
  CHECK(key_of([] { preset_config("pendulum", "desk"); }) == "example");
  CHECK(key_of([] { preset_config("sdof", "huge"); }) == "scale");
  std::string text = preset_config("sdof", "desk");
  text.replace(text.find("dt = 0.05\n"), 10, "");
  CHECK(key_of([&] { settings_from_config(ConfigFile::parse(text)); }).find("dt") != std::string::npos);
  auto bad = ConfigFile::parse(preset_config("sdof", "desk"));
  bad.set_override("run.n=many");
  CHECK(key_of([&] { settings_from_config(bad); }).find("run.n") != std::string::npos);
}

TEST_CASE("csv round trips") {
  SUBCASE("measurements") {
    const auto model = test::toy_model(2, 0.1);
    const auto meas = test::toy_meas(test::rows({{0.1, -1.0 / 3.0}, {2.5e-300, 7.0}}), model);
    const auto back = measurements_from_table(parse_csv(to_csv(measurements_table(meas)), "m"), model);
    CHECK(back.values == meas.values);
    CHECK(back.times == meas.times);
    CHECK_THROWS_AS(measurements_from_table(measurements_table(meas), test::toy_model(1, 0.1)), ConfigError);
  }
  SUBCASE("timeseries") {
    std::vector<TimeseriesRow> rows{{1, 0.05, 0.1, 0.2, 0.3, 0.4, 17.5, 1e-3}, {2, 0.1, -1.0 / 3.0, 1e-9, 0, 0, 3, 5}};
    const auto back = timeseries_from_table(parse_csv(to_csv(timeseries_table(rows)), "t"));
    REQUIRE(back.size() == 2);
    CHECK(back[1].step == 2);
    CHECK(back[1].kcq_mean == -1.0 / 3.0);
    CHECK(back[0].bandwidth == 1e-3);
  }
  SUBCASE("selection") {
    estimators::KcqResult r;
    r.step = 4;
    r.selection.entries = {{4, 1}, {2, 0}};
    r.selection.correlations = {0.9, -0.8};
    const auto back = selections_from_table(parse_csv(to_csv(selection_table({r})), "s"));
    REQUIRE(back.size() == 1);
    CHECK(back[0].first == 4);
    CHECK(back[0].second == r.selection.entries);
  }
  SUBCASE("malformed") {
    CHECK_THROWS(parse_csv("a,b\n1,2,3\n", "x"));
    CHECK_THROWS(parse_csv("a,b\n1,z\n", "x"));
    CHECK_THROWS_AS(parse_csv("a,b\n1,2\n", "x").column("c"), ConfigError);
  }
}

TEST_CASE("exit codes") {
  const auto out = test::scratch_dir("cli_exit");
  CHECK(run_args({"example", "pendulum", "--out", out}) == kExitValidation);
  CHECK(run_args({"example", "sdof", "--scale", "huge", "--out", out}) == kExitValidation);
  CHECK(run_args({"frobnicate"}) == kExitValidation);
  CHECK(run_args({"offline", "--config", (fs::path(out) / "absent.cfg").string(), "--out", out}) == kExitValidation);
  const fs::path cfg = fs::path(out) / "sdof.cfg";
  text::write_file_atomic(cfg.string(), preset_config("sdof", "desk"));
  CHECK(run_args({"offline", "--config", cfg.string(), "--set", "run.dt=-1", "--out", out}) == kExitValidation);
  // Noise small enough that every sample but one loses its weight.
  const auto db = (fs::path(out) / "db").string();
  REQUIRE(run_args(with_small({"offline", "--config", cfg.string(), "--out", db})) == kExitOk);
  CHECK(run_args(with_small({"quantify", "--db", db, "--measurements", db + "/measurements.csv", "--steps", "21",
                             "--out", out + "/q"})) == kExitValidation);
  CHECK(run_args(with_small({"quantify", "--db", db, "--measurements", db + "/measurements.csv", "--set",
                             "sensors.noise_sd=1e-9", "--out", out + "/q"})) == kExitDegenerate);
}

TEST_CASE("end-to-end outputs are reproducible") {
  const auto a = test::scratch_dir("cli_e2e_a");
  const auto b = test::scratch_dir("cli_e2e_b");
  REQUIRE(run_args(with_small({"example", "sdof", "--out", a, "--set", "mc.n_mc=300"})) == kExitOk);
  REQUIRE(run_args(with_small({"example", "sdof", "--out", b, "--set", "mc.n_mc=300"})) == kExitOk);
  const fs::path kd = fs::path("kcq") / "displacement_dof0";
  for (const fs::path& rel : {kd / "kcq_timeseries.csv", kd / "kcq_selection.csv", kd / "kcq_pdf_10.csv",
                             kd / "kcq_pdf_20.csv", fs::path("mc") / "displacement_dof0" / "mc_timeseries.csv",
                             fs::path("compare") / "velocity_dof0" / "compare.csv", fs::path("db") / "meta"}) {
    INFO(rel.string());
    CHECK(slurp(fs::path(a) / rel) == slurp(fs::path(b) / rel));
  }
  const auto ts = read_csv((fs::path(a) / kd / "kcq_timeseries.csv").string());
  CHECK(ts.rows.size() == 20);
  CHECK(slurp(fs::path(a) / kd / "kcq_band.svg") == band_plot_svg(ts, "displacement:dof=0"));
  const auto pdf = read_csv((fs::path(a) / kd / "kcq_pdf_20.csv").string());
  CHECK(pdf.header == std::vector<std::string>{"grid", "density", "nonconditional_density"});
  CHECK(pdf.rows.size() >= 400);
  const auto svg = slurp(fs::path(a) / kd / "kcq_pdf_20.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  const double t20 = ts.rows[19][ts.column("time")];
  CHECK(svg == pdf_plot_svg(pdf, "displacement:dof=0 at t = " + text::format_double(t20) + " s"));
}
