#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kcq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCompute = 3;
inline constexpr int kExitDegenerate = 4;

struct OfflineArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

struct QuantifyArgs {
  std::string db;
  std::string measurements;
  /// Defaults to <db>/config.cfg when empty.
  std::string config;
  std::vector<std::string> overrides;
  std::vector<std::string> qois;
  std::optional<std::size_t> N_k;
  std::string steps;
  std::string pdf_steps;
  std::string out;
  bool plots = true;
};

struct McReferenceArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string measurements;
  /// Directory written by quantify; its selections are replayed.
  std::string kcq;
  std::string out;
  std::optional<std::size_t> n_mc;
  std::optional<std::uint64_t> seed;
};

struct CompareArgs {
  std::string kcq;
  std::string mc;
  std::string out;
};

struct ExampleArgs {
  std::string name;
  std::string scale = "desk";
  std::string out;
  std::vector<std::string> overrides;
};

int cmd_offline(const OfflineArgs& args);
int cmd_quantify(const QuantifyArgs& args);
int cmd_mc_reference(const McReferenceArgs& args);
int cmd_compare(const CompareArgs& args);
int cmd_example(const ExampleArgs& args);

/// Parses argv, dispatches, and maps library errors to exit codes.
int run(int argc, char** argv);

}  // namespace kcq::cli
