// AArch64 only; NEON is part of the baseline ISA there.
#include <arm_neon.h>

#include "repsample/simd/kernels.hpp"

namespace repsample::simd {
namespace {

void add_squared_diff_neon(double* acc, const double* x, double q, std::size_t n) {
  const float64x2_t vq = vdupq_n_f64(q);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vq);
    vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), d, d));
  }
  for (; i < n; ++i) {
    const double d = x[i] - q;
    acc[i] += d * d;
  }
}

void axpy_neon(double* y, double a, const double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void sub_scaled_squares_neon(double* acc, const double* x, double c, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(x + i);
    const float64x2_t r = vfmsq_f64(vld1q_f64(acc + i), vmulq_f64(vc, v), v);
    vst1q_f64(acc + i, vmaxq_f64(r, zero));
  }
  for (; i < n; ++i) {
    const double v = acc[i] - c * x[i] * x[i];
    acc[i] = v > 0.0 ? v : 0.0;
  }
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0);
  float64x2_t s1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = vfmaq_f64(s0, vld1q_f64(x + i), vld1q_f64(y + i));
    s1 = vfmaq_f64(s1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double total = vaddvq_f64(vaddq_f64(s0, s1));
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

}  // namespace

const KernelTable* neon_kernels() {
  static const KernelTable table{Backend::neon, &add_squared_diff_neon, &axpy_neon,
                                 &sub_scaled_squares_neon, &dot_neon};
  return &table;
}

}  // namespace repsample::simd
