#pragma once

// Data-parallel inner loops shared by the density sampler, the k-DPP sampler
// and Gram-matrix construction. Every kernel has a scalar reference version;
// vector versions (AVX2+FMA on x86-64, NEON on AArch64) are selected at
// runtime and must agree with the reference up to floating-point
// reassociation.

#include <cstddef>
#include <string_view>

namespace repsample::simd {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  // acc[i] += (x[i] - q)^2
  void (*add_squared_diff)(double* acc, const double* x, double q, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // acc[i] -= c * x[i]^2, clamped below at zero
  void (*sub_scaled_squares)(double* acc, const double* x, double c, std::size_t n);
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the backend was not compiled in.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// The table used by the library. Chosen once from CPU features; the
/// REPSAMPLE_SIMD environment variable ("scalar", "avx2", "neon") overrides
/// the choice when that backend is available.
const KernelTable& kernels();

/// Forces a backend for the rest of the process. Returns false (and leaves
/// the selection unchanged) when the backend is unavailable on this CPU.
bool select_backend(Backend backend);

bool backend_available(Backend backend);
std::string_view backend_name(Backend backend);

}  // namespace repsample::simd
