// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "repsample/simd/kernels.hpp"

namespace repsample::simd {
namespace {

void add_squared_diff_avx2(double* acc, const double* x, double q, std::size_t n) {
  const __m256d vq = _mm256_set1_pd(q);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), vq);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), vq);
    _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(d0, d0, _mm256_loadu_pd(acc + i)));
    _mm256_storeu_pd(acc + i + 4, _mm256_fmadd_pd(d1, d1, _mm256_loadu_pd(acc + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vq);
    _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(d, d, _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) {
    const double d = x[i] - q;
    acc[i] += d * d;
  }
}

void axpy_avx2(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void sub_scaled_squares_avx2(double* acc, const double* x, double c, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d cv = _mm256_mul_pd(vc, v);
    const __m256d r = _mm256_fnmadd_pd(cv, v, _mm256_loadu_pd(acc + i));
    _mm256_storeu_pd(acc + i, _mm256_max_pd(r, zero));
  }
  for (; i < n; ++i) {
    const double v = acc[i] - c * x[i] * x[i];
    acc[i] = v > 0.0 ? v : 0.0;
  }
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  }
  s0 = _mm256_add_pd(s0, s1);
  const __m128d lo = _mm256_castpd256_pd128(s0);
  const __m128d hi = _mm256_extractf128_pd(s0, 1);
  __m128d s = _mm_add_pd(lo, hi);
  s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
  double total = _mm_cvtsd_f64(s);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Backend::avx2, &add_squared_diff_avx2, &axpy_avx2,
                                 &sub_scaled_squares_avx2, &dot_avx2};
  return &table;
}

}  // namespace repsample::simd
