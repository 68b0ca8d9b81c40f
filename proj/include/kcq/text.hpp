#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kcq::text {

/// 17 significant digits, the lossless decimal form used in every output file.
std::string format_double(double v);

/// Strict parse of a whole token; returns false on any trailing garbage.
bool parse_double(std::string_view token, double& out);
bool parse_uint(std::string_view token, std::uint64_t& out);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delim);

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a(std::string_view data, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
/// Writes through a temporary file and renames, so readers never see a partial file.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace kcq::text
