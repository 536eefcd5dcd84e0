// SPDX-License-Identifier: Apache-2.0
#include "gruc/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gruc::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mul_add(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

}  // namespace scalar

// Defined in kernels_avx2.cpp / kernels_neon.cpp when those are built.
#if defined(GRUC_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif
#if defined(GRUC_HAVE_NEON)
const KernelTable& neon_table_impl();
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar, &scalar::dot, &scalar::axpy, &scalar::mul_add};
  return table;
}

const KernelTable* avx2_table() {
#if defined(GRUC_HAVE_AVX2)
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(GRUC_HAVE_NEON)
  return &neon_table_impl();
#else
  return nullptr;
#endif
}

Isa best_available() {
  if (avx2_table() != nullptr) return Isa::kAvx2;
  if (neon_table() != nullptr) return Isa::kNeon;
  return Isa::kScalar;
}

namespace {

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return &scalar_table();
    case Isa::kAvx2: return avx2_table();
    case Isa::kNeon: return neon_table();
  }
  return nullptr;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("GRUC_KERNELS")) {
    const std::string_view want(env);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (want == isa_name(isa)) {
        if (const KernelTable* t = table_for(isa)) return t;
      }
    }
  }
  return table_for(best_available());
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) {
    throw std::runtime_error("kernels: " + std::string(isa_name(isa)) +
                             " not available on this build/CPU");
  }
  current().store(t, std::memory_order_relaxed);
}

void matmul_nt(const double* x, std::size_t n, std::size_t k, const double* w,
               std::size_t m, double* y) {
  const KernelTable& t = active();
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * k;
    double* yr = y + r * m;
    for (std::size_t o = 0; o < m; ++o) yr[o] = t.dot(w + o * k, xr, k);
  }
}

void matmul_nt_backward(const double* x, std::size_t n, std::size_t k,
                        const double* w, std::size_t m, const double* dy,
                        double* dx, double* dw) {
  const KernelTable& t = active();
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * k;
    const double* gr = dy + r * m;
    for (std::size_t o = 0; o < m; ++o) {
      const double g = gr[o];
      if (g == 0.0) continue;
      if (dx != nullptr) t.axpy(g, w + o * k, dx + r * k, k);
      if (dw != nullptr) t.axpy(g, xr, dw + o * k, k);
    }
  }
}

}  // namespace gruc::kernels
