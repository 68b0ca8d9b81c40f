#pragma once

#include <cstddef>

namespace kcq {

/// Selects between the OpenMP kernel and its serial reference. Both produce
/// bitwise-identical results; the serial path exists for testing and benchmarks.
enum class Exec { serial, parallel };

int available_threads() noexcept;

}  // namespace kcq
