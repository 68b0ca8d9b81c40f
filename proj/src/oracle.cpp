#include "kcq/oracle.hpp"

#include <cmath>
#include <limits>

#include "kcq/errors.hpp"
#include "kcq/numeric.hpp"

namespace kcq::oracle {

ResponseDatabase mc_sample_database(const pipeline::RunConfig& config, const McConfig& mc,
                                    const std::string& output_dir) {
  if (mc.n_mc == 0) throw DomainError("n_mc must be positive");
  pipeline::RunConfig cfg = config;
  cfg.n = mc.n_mc;
  cfg.seed = mc.seed;
  cfg.generator = sampling::Generator::mc;
  cfg.output_dir = output_dir;
  pipeline::validate_config(cfg);
  return pipeline::offline_generate(cfg);
}

BruteForceResult brute_force_conditional(const GridProblem& problem) {
  const std::size_t n = problem.prior_mass.size();
  if (n == 0 || problem.response.size() != n || problem.log_likelihood.size() != n) {
    throw ShapeError("grid problem arrays must be non-empty and of equal length");
  }
  if (n > 1'000'000) throw SizeError("grid problems are limited to 10^6 cells");
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(problem.prior_mass[i] > 0.0)) throw DomainError("prior masses must be strictly positive");
    top = std::max(top, problem.log_likelihood[i]);
  }
  if (!std::isfinite(top)) throw DegeneratePosteriorError("posterior is zero on every cell");
  BruteForceResult out;
  out.pmf.resize(n);
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) {
    out.pmf[i] = problem.prior_mass[i] * std::exp(problem.log_likelihood[i] - top);
    total.add(out.pmf[i]);
  }
  const double z = total.value();
  if (!(z > 0.0)) throw DegeneratePosteriorError("posterior is zero on every cell");
  CompensatedSum m;
  for (std::size_t i = 0; i < n; ++i) {
    out.pmf[i] /= z;
    m.add(out.pmf[i] * problem.response[i]);
  }
  out.mean = m.value();
  CompensatedSum v;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = problem.response[i] - out.mean;
    v.add(out.pmf[i] * d * d);
  }
  out.variance = v.value();
  return out;
}

ResponseDatabase grid_atom_database(const GridProblem& problem, const std::vector<double>& cell_centres) {
  const std::size_t n = problem.prior_mass.size();
  if (cell_centres.size() != n || problem.response.size() != n || problem.log_likelihood.size() != n) {
    throw ShapeError("grid atoms need one centre, response and likelihood per cell");
  }
  ResponseDatabase db;
  db.space = sampling::ParameterSpace({sampling::Marginal::standard_normal()});
  db.sample_set.samples.resize(static_cast<Eigen::Index>(n), 1);
  const double total = compensated_sum(problem.prior_mass);
  db.sample_set.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    db.sample_set.samples(static_cast<Eigen::Index>(i), 0) = cell_centres[i];
    db.sample_set.weights[i] = problem.prior_mass[i] / total;
  }
  db.sample_set.generator_tag = "grid";
  db.times = {0.0, 1.0};
  Channel q;
  q.spec = dynamics::QoISpec::at_dof(dynamics::QoIKind::displacement, 0);
  q.values = RowMatrix::Zero(static_cast<Eigen::Index>(n), 2);
  Channel s;
  s.spec = dynamics::QoISpec::at_dof(dynamics::QoIKind::displacement, 1);
  s.values = RowMatrix::Zero(static_cast<Eigen::Index>(n), 2);
  // Unit-variance error density at z - h equals the target up to a constant when
  // h_i = sqrt(2 (max l - l_i)).
  double top = -std::numeric_limits<double>::infinity();
  for (double l : problem.log_likelihood) top = std::max(top, l);
  for (std::size_t i = 0; i < n; ++i) {
    q.values(static_cast<Eigen::Index>(i), 1) = problem.response[i];
    s.values(static_cast<Eigen::Index>(i), 1) = std::sqrt(2.0 * (top - problem.log_likelihood[i]));
  }
  db.qoi_channels.push_back(std::move(q));
  db.sensor_channels.push_back(std::move(s));
  db.provenance.system = "grid";
  db.provenance.n_steps = 1;
  db.provenance.dt = 1.0;
  db.provenance.n_requested = n;
  db.validate();
  return db;
}

}  // namespace kcq::oracle
