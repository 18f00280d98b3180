#pragma once

namespace canopose {

/// Selects between the OpenMP kernel and its serial reference. Both paths
/// produce bit-identical results; the serial one exists for testing and
/// benchmarking.
enum class Exec { Serial, Parallel };

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads() noexcept;

}  // namespace canopose
