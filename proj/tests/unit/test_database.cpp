#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "helpers.hpp"
#include "kcq/database.hpp"
#include "kcq/errors.hpp"
#include "kcq/text.hpp"

using namespace kcq;
namespace fs = std::filesystem;

namespace {

ResponseDatabase sample_db() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  const int n = 7, K = 5;
  RowMatrix q(n, K + 1), s(n, K + 1);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k <= K; ++k) {
      q(i, k) = nd(rng) * 1e-3;
      s(i, k) = nd(rng) / 3.0;
    }
  }
  std::vector<double> w{0.1, 0.2, 0.05, 0.15, 0.3, 0.12, 0.08};
  auto db = test::toy_db(w, q, {s});
  db.space = sampling::ParameterSpace({sampling::Marginal::normal(0.5, 0.2)});
  for (int i = 0; i < n; ++i) db.sample_set.samples(i, 0) = 0.5 + 0.2 * nd(rng);
  db.sample_set.seed = 42;
  db.provenance.dt = 0.1;
  db.provenance.n_steps = K;
  db.provenance.seed = 42;
  db.provenance.generator = "gqmc-cl";
  db.provenance.failed = {3, 9};
  db.provenance.system_params = "elements=4 kl_terms=10";
  return db;
}

void rewrite(const fs::path& p, const std::string& from, const std::string& to) {
  std::string body = text::read_file(p.string());
  const auto at = body.find(from);
  REQUIRE(at != std::string::npos);
  body.replace(at, from.size(), to);
  std::ofstream(p, std::ios::binary | std::ios::trunc) << body;
}

}  // namespace

TEST_CASE("store then load is the identity") {
  const auto db = sample_db();
  const auto dir = test::scratch_dir("db_roundtrip");
  store_database(db, dir);
  for (const char* f : {"meta", "samples", "weights"}) CHECK(fs::exists(fs::path(dir) / f));
  const auto back = load_database(dir);
  CHECK(back.sample_set.samples == db.sample_set.samples);
  CHECK(back.sample_set.weights == db.sample_set.weights);
  CHECK(back.sample_set.seed == 42);
  CHECK(back.times == db.times);
  REQUIRE(back.qoi_channels.size() == 1);
  REQUIRE(back.sensor_channels.size() == 1);
  CHECK(back.qoi_channels[0].spec == db.qoi_channels[0].spec);
  CHECK(back.qoi_channels[0].values == db.qoi_channels[0].values);
  CHECK(back.sensor_channels[0].values == db.sensor_channels[0].values);
  CHECK(back.space.marginal(0).mean() == 0.5);
  CHECK(back.space.marginal(0).sd() == 0.2);
  CHECK(back.provenance.failed == db.provenance.failed);
  CHECK(back.provenance.system_params == db.provenance.system_params);
  CHECK(database_digest(back) == database_digest(db));

  // Storing the loaded copy writes byte-identical files.
  const auto dir2 = test::scratch_dir("db_roundtrip2");
  store_database(back, dir2);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename();
    CHECK(text::read_file(entry.path().string()) == text::read_file((fs::path(dir2) / name).string()));
  }
}

TEST_CASE("the digest sees every payload value") {
  const auto db = sample_db();
  auto other = db;
  other.qoi_channels[0].values(3, 2) = std::nextafter(other.qoi_channels[0].values(3, 2), 1.0);
  CHECK(database_digest(other) != database_digest(db));
}

TEST_CASE("truncated files are corruption, not partial data") {
  const auto dir = test::scratch_dir("db_truncated");
  store_database(sample_db(), dir);
  const fs::path ch = fs::path(dir) / "qoi_0_displacement_dof0";
  REQUIRE(fs::exists(ch));
  const auto body = text::read_file(ch.string());
  std::ofstream(ch, std::ios::binary | std::ios::trunc) << body.substr(0, body.size() / 2);
  CHECK_THROWS_AS(load_database(dir), CorruptionError);
}

TEST_CASE("edited values fail the checksum") {
  const auto dir = test::scratch_dir("db_edited");
  const auto db = sample_db();
  store_database(db, dir);
  const auto w = text::format_double(db.sample_set.weights[2]);
  rewrite(fs::path(dir) / "weights", w, text::format_double(db.sample_set.weights[2] * 1.5));
  CHECK_THROWS_AS(load_database(dir), CorruptionError);
}

TEST_CASE("an edited meta fails its own checksum") {
  const auto dir = test::scratch_dir("db_meta");
  store_database(sample_db(), dir);
  rewrite(fs::path(dir) / "meta", "system = test", "system = tset");
  CHECK_THROWS_AS(load_database(dir), CorruptionError);
}

TEST_CASE("a different schema version is a migration error") {
  const auto dir = test::scratch_dir("db_schema");
  store_database(sample_db(), dir);
  rewrite(fs::path(dir) / "meta", "schema_version = 1", "schema_version = 2");
  try {
    load_database(dir);
    FAIL("expected a migration error");
  } catch (const MigrationError& e) {
    CHECK(e.found() == 2);
    CHECK(e.expected() == kSchemaVersion);
    CHECK(std::string(e.what()).find('2') != std::string::npos);
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
}

TEST_CASE("missing pieces") {
  CHECK_THROWS_AS(load_database(test::scratch_dir("db_empty") + "/nothing"), CorruptionError);
  const auto dir = test::scratch_dir("db_missing");
  store_database(sample_db(), dir);
  fs::remove(fs::path(dir) / "samples");
  CHECK_THROWS_AS(load_database(dir), CorruptionError);
}

TEST_CASE("coverage lookup") {
  const auto db = sample_db();
  CHECK(db.has_qoi(test::kQoi));
  CHECK_FALSE(db.has_qoi(test::kSensor));
  CHECK_THROWS_AS(db.qoi(test::kSensor), CoverageError);
}

TEST_CASE("invalid databases are not stored") {
  auto db = sample_db();
  db.qoi_channels[0].values(0, 0) = NAN;
  CHECK_THROWS_AS(store_database(db, test::scratch_dir("db_nan")), NonFiniteInputError);
  auto wide = sample_db();
  wide.times.push_back(9.0);
  CHECK_THROWS_AS(wide.validate(), ShapeError);
}

TEST_CASE("matrix text") {
  RowMatrix m(2, 3);
  m << 0.1, -2.5e-300, 3.0, 1.0 / 3.0, 0.0, -7.0;
  const auto t = matrix_to_text(m);
  CHECK(matrix_from_text(t, 2, 3, "m") == m);
  CHECK_THROWS_AS(matrix_from_text(t, 3, 3, "m"), CorruptionError);
  CHECK_THROWS_AS(matrix_from_text(t, 2, 2, "m"), CorruptionError);
  CHECK_THROWS_AS(matrix_from_text("1 2 x\n", 1, 3, "m"), CorruptionError);
}
