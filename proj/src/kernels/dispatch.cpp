#include <cstdlib>
#include <string_view>

#include "qkdnn/kernels.hpp"

namespace qkdnn::kernels {

namespace detail {
#if defined(QKDNN_HAVE_AVX2)
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
#endif
#if defined(QKDNN_HAVE_NEON)
double dot_neon(const double* x, const double* y, std::size_t n);
void axpy_neon(double a, const double* x, double* y, std::size_t n);
#endif
}  // namespace detail

std::string to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable* avx2_table() {
#if defined(QKDNN_HAVE_AVX2)
  static const bool usable = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{Isa::avx2, detail::dot_avx2, detail::axpy_avx2};
  return usable ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(QKDNN_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  static const KernelTable table{Isa::neon, detail::dot_neon, detail::axpy_neon};
  return &table;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("QKDNN_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    if (const KernelTable* t = neon_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace qkdnn::kernels
