#include "rare/execution.hpp"

#include <omp.h>

namespace rare {

int max_threads() { return omp_get_max_threads(); }

}  // namespace rare
