#include "repsample/simd/kernels.hpp"

namespace repsample::simd {
namespace {

void add_squared_diff_scalar(double* acc, const double* x, double q, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - q;
    acc[i] += d * d;
  }
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void sub_scaled_squares_scalar(double* acc, const double* x, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = acc[i] - c * x[i] * x[i];
    acc[i] = v > 0.0 ? v : 0.0;
  }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Backend::scalar, &add_squared_diff_scalar, &axpy_scalar,
                                 &sub_scaled_squares_scalar, &dot_scalar};
  return table;
}

}  // namespace repsample::simd
