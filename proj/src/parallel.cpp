#include "kcq/parallel.hpp"

#include <omp.h>

namespace kcq {

int available_threads() noexcept { return omp_get_max_threads(); }

}  // namespace kcq
