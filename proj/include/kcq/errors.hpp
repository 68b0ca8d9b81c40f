#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kcq {

/// Base of every error raised by the library. Carries a short machine-readable
/// category alongside the human message so the CLI can map errors to exit codes.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

class NonFiniteInputError : public Error {
 public:
  explicit NonFiniteInputError(const std::string& what) : Error("non-finite-input", what) {}
};

class UnsupportedDimensionError : public Error {
 public:
  explicit UnsupportedDimensionError(const std::string& what)
      : Error("unsupported-dimension", what) {}
};

class DuplicateSampleError : public Error {
 public:
  DuplicateSampleError(std::size_t first, std::size_t second)
      : Error("duplicate-sample", "samples " + std::to_string(first) + " and " +
                                      std::to_string(second) + " coincide"),
        first_(first),
        second_(second) {}

  std::size_t first() const noexcept { return first_; }
  std::size_t second() const noexcept { return second_; }

 private:
  std::size_t first_;
  std::size_t second_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, long step = -1)
      : Error("convergence", what), residual_(residual), step_(step) {}

  double residual() const noexcept { return residual_; }
  /// Step index the failure happened at, or -1 for a single step solve.
  long step() const noexcept { return step_; }

 private:
  double residual_;
  long step_;
};

class ResolutionError : public Error {
 public:
  explicit ResolutionError(const std::string& what) : Error("resolution", what) {}
};

class DegenerateFrequenciesError : public Error {
 public:
  explicit DegenerateFrequenciesError(const std::string& what)
      : Error("degenerate-frequencies", what) {}
};

class RootBracketingError : public Error {
 public:
  RootBracketingError(const std::string& what, std::size_t index)
      : Error("root-bracketing", what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error("index", what) {}
};

class ZeroVarianceError : public Error {
 public:
  explicit ZeroVarianceError(const std::string& what) : Error("zero-variance-response", what) {}
};

class SizeError : public Error {
 public:
  explicit SizeError(const std::string& what) : Error("size", what) {}
};

class NonPdCovarianceError : public Error {
 public:
  explicit NonPdCovarianceError(const std::string& what) : Error("non-pd-covariance", what) {}
};

class CoverageError : public Error {
 public:
  explicit CoverageError(const std::string& what) : Error("database-coverage", what) {}
};

/// Likelihood-weighted ensemble collapsed below the usable effective sample size.
class DegenerateLikelihoodError : public Error {
 public:
  DegenerateLikelihoodError(const std::string& what, double ess)
      : Error("degenerate-likelihood", what), ess_(ess) {}

  double ess() const noexcept { return ess_; }

 private:
  double ess_;
};

class GridError : public Error {
 public:
  explicit GridError(const std::string& what) : Error("grid", what) {}
};

class DegeneratePosteriorError : public Error {
 public:
  explicit DegeneratePosteriorError(const std::string& what) : Error("degenerate-posterior", what) {}
};

class CorruptionError : public Error {
 public:
  explicit CorruptionError(const std::string& what) : Error("corruption", what) {}
};

class MigrationError : public Error {
 public:
  MigrationError(int found, int expected)
      : Error("migration", "database schema version " + std::to_string(found) +
                               " cannot be read by schema version " + std::to_string(expected)),
        found_(found),
        expected_(expected) {}

  int found() const noexcept { return found_; }
  int expected() const noexcept { return expected_; }

 private:
  int found_;
  int expected_;
};

class SampleFailureError : public Error {
 public:
  explicit SampleFailureError(const std::string& what) : Error("sample-failure", what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config", what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace kcq
