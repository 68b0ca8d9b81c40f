#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kcq/oracle.hpp"
#include "kcq/pipeline.hpp"

namespace kcq::cli {

inline constexpr const char* kConfigHeader = "kcq-config 1";

/// Flat `key = value` file with [section] prefixes. Keys are stored as
/// "section.key". The first non-comment line must be the version header.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigFile load(const std::string& path);

  /// Applies "section.key=value".
  void set_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  bool has_section(const std::string& section) const;
  std::optional<std::string> get(const std::string& key) const;
  const std::string& require(const std::string& key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  std::uint64_t get_uint(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Everything a command needs beyond the offline RunConfig.
struct Settings {
  pipeline::RunConfig run;
  std::vector<std::size_t> steps;
  std::vector<std::size_t> pdf_steps;
  std::optional<std::vector<double>> truth_eps;
  std::uint64_t noise_seed = 2024;
  oracle::McConfig mc;
};

Settings settings_from_config(const ConfigFile& cfg);

/// Canonical config text for a preset system ("sdof" or "beam") and scale ("paper" or "desk").
std::string preset_config(const std::string& name, const std::string& scale);

std::vector<std::size_t> parse_steps(const std::string& text, const std::string& key);

}  // namespace kcq::cli
