#pragma once

namespace rare {

/// Selects between the serial reference kernels and their OpenMP versions.
/// Both produce bit-identical results; the serial path exists for testing
/// and for benchmarking the parallel one.
enum class Execution { kSerial, kParallel };

int max_threads();

}  // namespace rare
