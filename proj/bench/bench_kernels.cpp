// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <vector>

#include "kcq/estimators.hpp"
#include "kcq/measurement.hpp"
#include "kcq/pipeline.hpp"
#include "kcq/sampling.hpp"

using namespace kcq;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

const ResponseDatabase& sdof_db() {
  static const ResponseDatabase db = pipeline::offline_generate(pipeline::sdof_config());
  return db;
}

void BM_VoronoiWeights(benchmark::State& state) {
  const sampling::ParameterSpace space({sampling::Marginal::standard_normal(), sampling::Marginal::standard_normal()});
  const auto pts = sampling::transform_to_distribution(sampling::generate_halton(500, 2, 1), space);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampling::compute_voronoi_weights(pts, space, 200000, 3, exec_of(state)));
  }
}
BENCHMARK(BM_VoronoiWeights)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_WeightedKde(benchmark::State& state) {
  const auto& db = sdof_db();
  const auto g = estimators::response_column(db, db.qoi_channels[0].spec, 100);
  const auto& W = db.sample_set.weights;
  const auto stats = estimators::weighted_stats(g, W);
  const double sd = std::sqrt(stats.variance);
  const auto bw = estimators::select_bandwidth(sd, stats.mean, stats.ess);
  const auto grid = estimators::default_pdf_grid(g, W, stats.mean, sd, bw.sigma, 2000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimators::weighted_kde(grid, g, W, bw.sigma, exec_of(state)));
  }
  state.counters["grid"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_WeightedKde)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Correlations(benchmark::State& state) {
  const auto& db = sdof_db();
  const auto cfg = pipeline::sdof_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        measurement::correlation_coefficients(db, db.qoi_channels[0].spec, 200, cfg.sensors, exec_of(state)));
  }
}
BENCHMARK(BM_Correlations)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_OfflineBatch(benchmark::State& state) {
  auto cfg = pipeline::sdof_config();
  cfg.n = 200;
  cfg.exec = exec_of(state);
  const auto set = sampling::generate_sample_set(pipeline::make_system(cfg)->space(), cfg.n, cfg.seed, cfg.generator);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipeline::build_database(cfg, set));
  }
}
BENCHMARK(BM_OfflineBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
