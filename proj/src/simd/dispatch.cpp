#include <atomic>
#include <cstdlib>
#include <string>

#include "repsample/simd/kernels.hpp"

namespace repsample::simd {

#ifndef REPSAMPLE_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#ifndef REPSAMPLE_HAVE_NEON
const KernelTable* neon_kernels() { return nullptr; }
#endif

namespace {

const KernelTable* table_for(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return &scalar_kernels();
    case Backend::avx2:
#if defined(REPSAMPLE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return avx2_kernels();
#endif
      return nullptr;
    case Backend::neon:
      return neon_kernels();
  }
  return nullptr;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("REPSAMPLE_SIMD")) {
    const std::string want(env);
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
      if (want == backend_name(b)) {
        if (const KernelTable* t = table_for(b)) return t;
      }
    }
  }
  for (Backend b : {Backend::avx2, Backend::neon}) {
    if (const KernelTable* t = table_for(b)) return t;
  }
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

bool select_backend(Backend backend) {
  const KernelTable* t = table_for(backend);
  if (t == nullptr) return false;
  active().store(t, std::memory_order_release);
  return true;
}

bool backend_available(Backend backend) { return table_for(backend) != nullptr; }

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace repsample::simd
