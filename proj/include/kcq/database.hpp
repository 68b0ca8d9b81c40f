#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kcq/dynamics.hpp"
#include "kcq/sampling.hpp"
#include "kcq/types.hpp"

namespace kcq {

inline constexpr int kSchemaVersion = 1;

/// One stored response: values(i, k) is the channel for sample i at step k.
struct Channel {
  dynamics::QoISpec spec;
  RowMatrix values;
};

struct Provenance {
  std::string system;
  /// Free-form system parameters, e.g. "elements=4 kl_terms=10".
  std::string system_params;
  double dt = 0.0;
  std::size_t n_steps = 0;
  double tol = 0.0;
  int max_iter = 0;
  std::uint64_t seed = 0;
  std::string generator;
  std::size_t n_probe = 0;
  std::size_t n_requested = 0;
  std::vector<std::size_t> failed;
};

/// Offline artifact: weighted samples, their trajectories reduced to the
/// declared QoI and sensor channels, and how they were produced.
struct ResponseDatabase {
  sampling::ParameterSpace space{{sampling::Marginal::standard_normal()}};
  sampling::WeightedSampleSet sample_set;
  std::vector<double> times;
  std::vector<Channel> qoi_channels;
  std::vector<Channel> sensor_channels;
  Provenance provenance;

  std::size_t size() const noexcept { return sample_set.size(); }
  std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }

  /// Throws CoverageError when the QoI is not stored.
  const Channel& qoi(const dynamics::QoISpec& spec) const;
  bool has_qoi(const dynamics::QoISpec& spec) const;
  void validate() const;
};

/// Writes the database directory (meta, samples, weights, one file per channel).
void store_database(const ResponseDatabase& db, const std::string& dir);

/// Reads and verifies a database directory. Throws MigrationError on a schema
/// mismatch and CorruptionError on any checksum or parse failure.
ResponseDatabase load_database(const std::string& dir);

/// Digest of the full numeric payload, independent of file layout.
std::uint64_t database_digest(const ResponseDatabase& db);

/// Row-per-line text body with 17-significant-digit numbers separated by spaces.
std::string matrix_to_text(const RowMatrix& m);
RowMatrix matrix_from_text(const std::string& body, std::size_t rows, std::size_t cols, const std::string& what);

}  // namespace kcq
