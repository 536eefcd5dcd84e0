// SPDX-License-Identifier: Apache-2.0
#pragma once

// Inner-loop arithmetic for the autodiff ops. Every kernel has a portable
// scalar reference; vector variants (AVX2+FMA on x86-64, NEON on AArch64)
// are compiled in separate translation units and picked at runtime from
// CPU feature flags. GRUC_KERNELS=scalar|avx2|neon overrides the choice.

#include <cstddef>
#include <string_view>

namespace gruc::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] += a[i] * b[i]
  void (*mul_add)(const double* a, const double* b, double* y, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void mul_add(const double* a, const double* b, double* y, std::size_t n);
}  // namespace scalar

const KernelTable& scalar_table();
/// nullptr when the variant was not built or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

Isa best_available();
const KernelTable& active();
/// Switches the process-wide table. Not safe while other threads run kernels.
void select(Isa isa);

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void mul_add(const double* a, const double* b, double* y, std::size_t n) {
  active().mul_add(a, b, y, n);
}

/// Y (n x m) = X (n x k) * W^T, W stored m x k row-major.
void matmul_nt(const double* x, std::size_t n, std::size_t k, const double* w,
               std::size_t m, double* y);
/// dX (n x k) += dY (n x m) * W ; dW (m x k) += dY^T * X. Either output may be null.
void matmul_nt_backward(const double* x, std::size_t n, std::size_t k,
                        const double* w, std::size_t m, const double* dy,
                        double* dx, double* dw);

}  // namespace gruc::kernels
