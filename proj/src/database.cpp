#include "kcq/database.hpp"

#include <filesystem>
#include <map>
#include <sstream>

#include "kcq/errors.hpp"
#include "kcq/text.hpp"

namespace kcq {

namespace fs = std::filesystem;

const Channel& ResponseDatabase::qoi(const dynamics::QoISpec& spec) const {
  for (const auto& c : qoi_channels) {
    if (c.spec == spec) return c;
  }
  throw CoverageError("database does not store QoI " + spec.to_string());
}

bool ResponseDatabase::has_qoi(const dynamics::QoISpec& spec) const {
  for (const auto& c : qoi_channels) {
    if (c.spec == spec) return true;
  }
  return false;
}

void ResponseDatabase::validate() const {
  sample_set.validate();
  if (static_cast<std::size_t>(sample_set.samples.cols()) != space.dim()) {
    throw ShapeError("samples have " + std::to_string(sample_set.samples.cols()) + " columns, space has dimension " +
                     std::to_string(space.dim()));
  }
  auto check = [&](const Channel& c, const char* role) {
    if (static_cast<std::size_t>(c.values.rows()) != size() ||
        static_cast<std::size_t>(c.values.cols()) != times.size()) {
      throw ShapeError(std::string(role) + " channel " + c.spec.to_string() + " has shape " +
                       std::to_string(c.values.rows()) + "x" + std::to_string(c.values.cols()));
    }
    if (!c.values.allFinite()) throw NonFiniteInputError(std::string(role) + " channel " + c.spec.to_string());
  };
  for (const auto& c : qoi_channels) check(c, "qoi");
  for (const auto& c : sensor_channels) check(c, "sensor");
}

std::string matrix_to_text(const RowMatrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out.push_back(' ');
      out += text::format_double(m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

RowMatrix matrix_from_text(const std::string& body, std::size_t rows, std::size_t cols, const std::string& what) {
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t pos = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto eol = body.find('\n', pos);
    if (eol == std::string::npos) throw CorruptionError(what + ": truncated at row " + std::to_string(i));
    const auto fields = text::split(std::string_view(body).substr(pos, eol - pos), ' ');
    if (fields.size() != cols) {
      throw CorruptionError(what + ": row " + std::to_string(i) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      double v = 0.0;
      if (!text::parse_double(fields[j], v)) throw CorruptionError(what + ": bad number at row " + std::to_string(i));
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
    pos = eol + 1;
  }
  if (pos != body.size()) throw CorruptionError(what + ": trailing data after " + std::to_string(rows) + " rows");
  return m;
}

namespace {

std::string vector_line(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += text::format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_vector_line(std::string_view line, const std::string& what) {
  std::vector<double> out;
  line = text::trim(line);
  if (line.empty()) return out;
  for (auto tok : text::split(line, ' ')) {
    double v = 0.0;
    if (!text::parse_double(tok, v)) throw CorruptionError(what + ": bad number '" + std::string(tok) + "'");
    out.push_back(v);
  }
  return out;
}

RowMatrix weights_matrix(const std::vector<double>& w) {
  RowMatrix m(static_cast<Eigen::Index>(w.size()), 1);
  for (std::size_t i = 0; i < w.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = w[i];
  return m;
}

std::string channel_file(const char* role, std::size_t idx, const Channel& c) {
  return std::string(role) + "_" + std::to_string(idx) + "_" + c.spec.channel_name();
}

std::string marginal_text(const sampling::Marginal& m) {
  if (m.is_standard()) return "standard";
  return "normal " + text::format_double(m.mean()) + " " + text::format_double(m.sd());
}

sampling::Marginal parse_marginal(const std::string& s) {
  if (s == "standard") return sampling::Marginal::standard_normal();
  const auto parts = text::split(s, ' ');
  double mean = 0.0, sd = 0.0;
  if (parts.size() != 3 || parts[0] != "normal" || !text::parse_double(parts[1], mean) ||
      !text::parse_double(parts[2], sd)) {
    throw CorruptionError("meta: cannot parse marginal '" + s + "'");
  }
  return sampling::Marginal::normal(mean, sd);
}

class Meta {
 public:
  void set(const std::string& key, const std::string& value) {
    order_.push_back(key);
    values_[key] = value;
  }
  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw CorruptionError("meta: missing key '" + key + "'");
    return it->second;
  }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::uint64_t get_uint(const std::string& key) const {
    std::uint64_t v = 0;
    if (!text::parse_uint(get(key), v)) throw CorruptionError("meta: '" + key + "' is not an integer");
    return v;
  }
  double get_double(const std::string& key) const {
    double v = 0.0;
    if (!text::parse_double(get(key), v)) throw CorruptionError("meta: '" + key + "' is not a number");
    return v;
  }
  std::string body() const {
    std::string out;
    for (const auto& k : order_) out += k + " = " + values_.at(k) + "\n";
    return out;
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> values_;
};

}  // namespace

std::uint64_t database_digest(const ResponseDatabase& db) {
  std::uint64_t h = text::fnv1a(matrix_to_text(db.sample_set.samples));
  h = text::fnv1a(matrix_to_text(weights_matrix(db.sample_set.weights)), h);
  h = text::fnv1a(vector_line(db.times), h);
  for (const auto& c : db.qoi_channels) h = text::fnv1a(c.spec.to_string() + "\n" + matrix_to_text(c.values), h);
  for (const auto& c : db.sensor_channels) h = text::fnv1a(c.spec.to_string() + "\n" + matrix_to_text(c.values), h);
  return h;
}

void store_database(const ResponseDatabase& db, const std::string& dir) {
  db.validate();
  fs::create_directories(dir);
  const fs::path root(dir);
  Meta meta;
  meta.set("schema_version", std::to_string(kSchemaVersion));
  meta.set("system", db.provenance.system);
  meta.set("system_params", db.provenance.system_params);
  meta.set("n", std::to_string(db.size()));
  meta.set("n_requested", std::to_string(db.provenance.n_requested));
  meta.set("dim", std::to_string(db.space.dim()));
  for (std::size_t j = 0; j < db.space.dim(); ++j) meta.set("marginal." + std::to_string(j), marginal_text(db.space.marginal(j)));
  meta.set("dt", text::format_double(db.provenance.dt));
  meta.set("n_steps", std::to_string(db.provenance.n_steps));
  meta.set("tol", text::format_double(db.provenance.tol));
  meta.set("max_iter", std::to_string(db.provenance.max_iter));
  meta.set("seed", std::to_string(db.provenance.seed));
  meta.set("generator", db.provenance.generator);
  meta.set("sample_set_tag", db.sample_set.generator_tag);
  meta.set("sample_set_seed", std::to_string(db.sample_set.seed));
  meta.set("n_probe", std::to_string(db.provenance.n_probe));
  std::string failed;
  for (std::size_t i = 0; i < db.provenance.failed.size(); ++i) {
    if (i > 0) failed += ",";
    failed += std::to_string(db.provenance.failed[i]);
  }
  meta.set("failed", failed);
  meta.set("times", vector_line(db.times));

  auto write = [&](const std::string& name, const std::string& body) {
    text::write_file_atomic((root / name).string(), body);
    meta.set("digest." + name, text::hex64(text::fnv1a(body)));
  };
  write("samples", matrix_to_text(db.sample_set.samples));
  write("weights", matrix_to_text(weights_matrix(db.sample_set.weights)));
  meta.set("qoi_count", std::to_string(db.qoi_channels.size()));
  for (std::size_t c = 0; c < db.qoi_channels.size(); ++c) {
    const auto name = channel_file("qoi", c, db.qoi_channels[c]);
    meta.set("qoi." + std::to_string(c), db.qoi_channels[c].spec.to_string());
    write(name, matrix_to_text(db.qoi_channels[c].values));
  }
  meta.set("sensor_count", std::to_string(db.sensor_channels.size()));
  for (std::size_t c = 0; c < db.sensor_channels.size(); ++c) {
    const auto name = channel_file("sensor", c, db.sensor_channels[c]);
    meta.set("sensor." + std::to_string(c), db.sensor_channels[c].spec.to_string());
    write(name, matrix_to_text(db.sensor_channels[c].values));
  }
  meta.set("payload_digest", text::hex64(database_digest(db)));
  std::string body = meta.body();
  body += "meta_checksum = " + text::hex64(text::fnv1a(body)) + "\n";
  text::write_file_atomic((root / "meta").string(), body);
}

ResponseDatabase load_database(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw CorruptionError("database directory " + dir + " does not exist");
  const std::string raw = text::read_file((root / "meta").string());

  Meta meta;
  std::size_t pos = 0;
  std::size_t checksum_at = std::string::npos;
  std::string checksum;
  while (pos < raw.size()) {
    const auto eol = raw.find('\n', pos);
    if (eol == std::string::npos) throw CorruptionError("meta: truncated final line");
    const std::string_view line = std::string_view(raw).substr(pos, eol - pos);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw CorruptionError("meta: malformed line '" + std::string(line) + "'");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (key == "meta_checksum") {
      checksum_at = pos;
      checksum = value;
    } else {
      meta.set(key, value);
    }
    pos = eol + 1;
  }
  if (meta.has("schema_version")) {
    std::uint64_t version = 0;
    if (!text::parse_uint(meta.get("schema_version"), version)) throw CorruptionError("meta: bad schema_version");
    if (version != static_cast<std::uint64_t>(kSchemaVersion)) throw MigrationError(static_cast<int>(version), kSchemaVersion);
  }
  if (checksum_at == std::string::npos) throw CorruptionError("meta: missing checksum (truncated?)");
  if (text::hex64(text::fnv1a(std::string_view(raw).substr(0, checksum_at))) != checksum) {
    throw CorruptionError("meta: checksum mismatch");
  }

  ResponseDatabase db;
  const std::size_t n = meta.get_uint("n");
  const std::size_t dim = meta.get_uint("dim");
  std::vector<sampling::Marginal> marginals;
  for (std::size_t j = 0; j < dim; ++j) marginals.push_back(parse_marginal(meta.get("marginal." + std::to_string(j))));
  db.space = sampling::ParameterSpace(std::move(marginals));
  db.times = parse_vector_line(meta.get("times"), "meta times");
  auto& p = db.provenance;
  p.system = meta.get("system");
  p.system_params = meta.get("system_params");
  p.n_requested = meta.get_uint("n_requested");
  p.dt = meta.get_double("dt");
  p.n_steps = meta.get_uint("n_steps");
  p.tol = meta.get_double("tol");
  p.max_iter = static_cast<int>(meta.get_uint("max_iter"));
  p.seed = meta.get_uint("seed");
  p.generator = meta.get("generator");
  p.n_probe = meta.get_uint("n_probe");
  for (auto tok : text::split(meta.get("failed"), ',')) {
    std::uint64_t idx = 0;
    if (text::trim(tok).empty()) continue;
    if (!text::parse_uint(tok, idx)) throw CorruptionError("meta: bad failed index");
    p.failed.push_back(idx);
  }

  auto read = [&](const std::string& name) {
    const std::string body = text::read_file((root / name).string());
    if (text::hex64(text::fnv1a(body)) != meta.get("digest." + name)) {
      throw CorruptionError(name + ": checksum mismatch");
    }
    return body;
  };
  db.sample_set.samples = matrix_from_text(read("samples"), n, dim, "samples");
  const RowMatrix w = matrix_from_text(read("weights"), n, 1, "weights");
  db.sample_set.weights.assign(w.data(), w.data() + n);
  db.sample_set.generator_tag = meta.get("sample_set_tag");
  db.sample_set.seed = meta.get_uint("sample_set_seed");
  const std::size_t cols = db.times.size();
  for (std::size_t c = 0, count = meta.get_uint("qoi_count"); c < count; ++c) {
    Channel ch;
    ch.spec = dynamics::QoISpec::parse(meta.get("qoi." + std::to_string(c)));
    const auto name = channel_file("qoi", c, ch);
    ch.values = matrix_from_text(read(name), n, cols, name);
    db.qoi_channels.push_back(std::move(ch));
  }
  for (std::size_t c = 0, count = meta.get_uint("sensor_count"); c < count; ++c) {
    Channel ch;
    ch.spec = dynamics::QoISpec::parse(meta.get("sensor." + std::to_string(c)));
    const auto name = channel_file("sensor", c, ch);
    ch.values = matrix_from_text(read(name), n, cols, name);
    db.sensor_channels.push_back(std::move(ch));
  }
  if (text::hex64(database_digest(db)) != meta.get("payload_digest")) {
    throw CorruptionError("database payload digest mismatch");
  }
  db.validate();
  return db;
}

}  // namespace kcq
