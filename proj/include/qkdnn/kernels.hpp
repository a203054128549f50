#pragma once

// Dense double-precision primitives used by the MLP: a scalar reference and
// vectorized variants, one of which is selected at first use from the CPU
// features. Set QKDNN_KERNELS=scalar to force the reference path.

#include <cstddef>
#include <string>

namespace qkdnn::kernels {

enum class Isa { scalar, avx2, neon };

std::string to_string(Isa isa);

struct KernelTable {
  Isa isa;
  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the variant was not compiled in or the CPU lacks the features.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// The table in use for this process (fixed after the first call).
const KernelTable& active();

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }

}  // namespace qkdnn::kernels
