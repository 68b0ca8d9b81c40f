#include "kcq/cli/config.hpp"

#include <sstream>

#include "kcq/errors.hpp"
#include "kcq/text.hpp"

namespace kcq::cli {

ConfigFile ConfigFile::parse(const std::string& body, const std::string& origin) {
  ConfigFile cfg;
  std::string section;
  bool header_seen = false;
  std::istringstream in(body);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (line != kConfigHeader) {
        throw ConfigError("header", where + ": expected version header '" + std::string(kConfigHeader) + "', found '" +
                                        std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("section", where + ": unterminated section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("syntax", where + ": expected key = value");
    const std::string key(text::trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("syntax", where + ": empty key");
    cfg.values_[section.empty() ? key : section + "." + key] = std::string(text::trim(line.substr(eq + 1)));
  }
  if (!header_seen) throw ConfigError("header", origin + ": empty config (missing '" + std::string(kConfigHeader) + "')");
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::string body;
  try {
    body = text::read_file(path);
  } catch (const Error&) {
    throw ConfigError("config", "cannot read config file " + path);
  }
  return parse(body, path);
}

void ConfigFile::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("set", "override '" + assignment + "' must look like section.key=value");
  }
  values_[std::string(text::trim(std::string_view(assignment).substr(0, eq)))] =
      std::string(text::trim(std::string_view(assignment).substr(eq + 1)));
}

bool ConfigFile::has_section(const std::string& section) const {
  const std::string prefix = section + ".";
  auto it = values_.lower_bound(prefix);
  return it != values_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

const std::string& ConfigFile::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "missing required key '" + key + "'");
  return it->second;
}

double ConfigFile::get_double(const std::string& key, std::optional<double> fallback) const {
  if (!has(key) && fallback) return *fallback;
  double v = 0.0;
  if (!text::parse_double(require(key), v)) throw ConfigError(key, "'" + key + "' must be a number");
  return v;
}

std::uint64_t ConfigFile::get_uint(const std::string& key, std::optional<std::uint64_t> fallback) const {
  if (!has(key) && fallback) return *fallback;
  std::uint64_t v = 0;
  if (!text::parse_uint(require(key), v)) throw ConfigError(key, "'" + key + "' must be a non-negative integer");
  return v;
}

std::vector<std::string> ConfigFile::get_list(const std::string& key) const {
  std::vector<std::string> out;
  for (auto tok : text::split(require(key), ',')) {
    tok = text::trim(tok);
    if (!tok.empty()) out.emplace_back(tok);
  }
  return out;
}

std::vector<double> ConfigFile::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : get_list(key)) {
    double v = 0.0;
    if (!text::parse_double(tok, v)) throw ConfigError(key, "'" + key + "' must be a comma-separated list of numbers");
    out.push_back(v);
  }
  return out;
}

std::string ConfigFile::to_text() const {
  std::string out = std::string(kConfigHeader) + "\n";
  std::string section;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + value + "\n";
  }
  return out;
}

std::vector<std::size_t> parse_steps(const std::string& body, const std::string& key) {
  std::vector<std::size_t> out;
  for (auto tok : text::split(body, ',')) {
    tok = text::trim(tok);
    if (tok.empty()) continue;
    const auto dash = tok.find('-');
    std::uint64_t a = 0, b = 0;
    if (dash != std::string_view::npos) {
      if (!text::parse_uint(tok.substr(0, dash), a) || !text::parse_uint(tok.substr(dash + 1), b) || b < a) {
        throw ConfigError(key, "bad step range '" + std::string(tok) + "'");
      }
      for (auto s = a; s <= b; ++s) out.push_back(s);
    } else {
      if (!text::parse_uint(tok, a)) throw ConfigError(key, "bad step '" + std::string(tok) + "'");
      out.push_back(a);
    }
  }
  if (out.empty()) throw ConfigError(key, "'" + key + "' lists no steps");
  return out;
}

Settings settings_from_config(const ConfigFile& cfg) {
  Settings s;
  auto& r = s.run;
  const std::string system = cfg.require("run.system");
  if (system == "sdof") {
    r.system = pipeline::SystemKind::sdof;
  } else if (system == "beam") {
    r.system = pipeline::SystemKind::beam;
    r.beam_elements = cfg.get_uint("beam.elements", 4);
    r.kl_terms = cfg.get_uint("beam.kl_terms", 10);
  } else {
    throw ConfigError("run.system", "run.system must be 'sdof' or 'beam', got '" + system + "'");
  }
  r.n = cfg.get_uint("run.n");
  r.seed = cfg.get_uint("run.seed", 1);
  try {
    r.generator = sampling::parse_generator(cfg.get("run.generator").value_or("gqmc-cl"));
  } catch (const Error& e) {
    throw ConfigError("run.generator", e.what());
  }
  r.n_probe = cfg.get_uint("run.n_probe", 0);
  r.dt = cfg.get_double("run.dt");
  r.n_steps = cfg.get_uint("run.n_steps");
  r.tol = cfg.get_double("run.tol", 0.0);
  r.max_iter = static_cast<int>(cfg.get_uint("run.max_iter", 50));
  r.failure_cap = cfg.get_double("run.failure_cap", 1e-3);
  r.output_dir = cfg.get("run.output_dir").value_or("");
  if (const auto threads = cfg.get("run.exec"); threads && *threads == "serial") r.exec = Exec::serial;

  r.qois.clear();
  for (const auto& q : cfg.get_list("qoi.list")) {
    try {
      r.qois.push_back(dynamics::QoISpec::parse(q));
    } catch (const Error& e) {
      throw ConfigError("qoi.list", e.what());
    }
  }
  r.sensors = {};
  for (const auto& q : cfg.get_list("sensors.points")) {
    try {
      r.sensors.points.push_back(dynamics::QoISpec::parse(q));
    } catch (const Error& e) {
      throw ConfigError("sensors.points", e.what());
    }
  }
  r.sensors.noise_sd = cfg.get_doubles("sensors.noise_sd");
  r.sensors.noise_mean =
      cfg.has("sensors.noise_mean") ? cfg.get_doubles("sensors.noise_mean") : std::vector<double>(r.sensors.size(), 0.0);
  if (r.sensors.noise_sd.size() == 1 && r.sensors.size() > 1) r.sensors.noise_sd.resize(r.sensors.size(), r.sensors.noise_sd[0]);
  if (r.sensors.noise_mean.size() == 1 && r.sensors.size() > 1) {
    r.sensors.noise_mean.resize(r.sensors.size(), r.sensors.noise_mean[0]);
  }
  r.N_k = cfg.get_uint("online.N_k");
  r.estimator.ess_min = cfg.get_double("online.ess_min", estimators::kDefaultEssMin);
  r.estimator.grid_points = cfg.get_uint("online.grid_points", 0);

  s.steps = cfg.has("online.steps") ? parse_steps(cfg.require("online.steps"), "online.steps")
                                    : parse_steps("1-" + std::to_string(r.n_steps), "online.steps");
  s.pdf_steps = cfg.has("online.pdf_steps") ? parse_steps(cfg.require("online.pdf_steps"), "online.pdf_steps")
                                            : std::vector<std::size_t>{};
  for (auto k : s.steps) {
    if (k == 0 || k > r.n_steps) throw ConfigError("online.steps", "step " + std::to_string(k) + " outside 1.." + std::to_string(r.n_steps));
  }
  for (auto k : s.pdf_steps) {
    if (k == 0 || k > r.n_steps) {
      throw ConfigError("online.pdf_steps", "step " + std::to_string(k) + " outside 1.." + std::to_string(r.n_steps));
    }
  }
  if (cfg.has("truth.eps")) s.truth_eps = cfg.get_doubles("truth.eps");
  s.noise_seed = cfg.get_uint("truth.noise_seed", 2024);
  s.mc.n_mc = cfg.get_uint("mc.n_mc", 100000);
  s.mc.seed = cfg.get_uint("mc.seed", 7);
  pipeline::validate_config(r);
  if (s.truth_eps) {
    const auto system = pipeline::make_system(r);
    if (s.truth_eps->size() != system->space().dim()) {
      throw ConfigError("truth.eps", "truth.eps needs " + std::to_string(system->space().dim()) + " values");
    }
  }
  return s;
}

std::string preset_config(const std::string& name, const std::string& scale) {
  if (scale != "paper" && scale != "desk") throw ConfigError("scale", "scale must be 'paper' or 'desk', got '" + scale + "'");
  const bool paper = scale == "paper";
  std::ostringstream o;
  o << kConfigHeader << "\n";
  if (name == "sdof") {
    o << "[run]\nsystem = sdof\nn = 500\nseed = 1\ngenerator = gqmc-cl\ndt = 0.05\nn_steps = 200\n"
      << "\n[qoi]\nlist = displacement:dof=0, velocity:dof=0\n"
      << "\n[sensors]\npoints = velocity:dof=0\nnoise_mean = 0\nnoise_sd = 0.03\n"
      << "\n[online]\nN_k = 2\nsteps = 1-200\npdf_steps = 50, 100, 150, 200\n"
      << "\n[truth]\neps = 0, 0\nnoise_seed = 2024\n"
      << "\n[mc]\nn_mc = " << (paper ? 1000000 : 100000) << "\nseed = 7\n";
  } else if (name == "beam") {
    const std::size_t steps = paper ? 400 : 100;
    o << "[run]\nsystem = beam\nn = " << (paper ? 600 : 100) << "\nseed = 1\ngenerator = gqmc-wz\ndt = 0.001\nn_steps = "
      << steps << "\n"
      << "\n[beam]\nelements = " << (paper ? 10 : 4) << "\nkl_terms = 10\n"
      << "\n[qoi]\nlist = displacement:x=3, velocity:x=3\n"
      << "\n[sensors]\npoints = displacement:x=0.9, displacement:x=2.1\nnoise_mean = 0\nnoise_sd = 0.005\n"
      << "\n[online]\nN_k = 1\nsteps = 1-" << steps << "\npdf_steps = " << steps / 4 << ", " << steps / 2 << ", "
      << 3 * steps / 4 << ", " << steps << "\n"
      << "\n[truth]\neps = 0, 0, 0, 0, 0, 0, 0, 0, 0, 0\nnoise_seed = 2024\n"
      << "\n[mc]\nn_mc = " << (paper ? 100000 : 10000) << "\nseed = 7\n";
  } else {
    throw ConfigError("example", "unknown example '" + name + "'; valid names: sdof, beam");
  }
  return o.str();
}

}  // namespace kcq::cli
