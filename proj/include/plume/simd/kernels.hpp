#pragma once

// Data-parallel inner loops used by the filters and the time stepper.
//
// Every kernel has a scalar reference implementation; vectorised variants
// (AVX2+FMA on x86-64, NEON on AArch64) are compiled in separate translation
// units and chosen once at runtime from the CPU's capabilities. The
// PLUME_SIMD environment variable (scalar|avx2|neon|auto) overrides the
// choice. Variants agree with the reference up to floating-point
// reassociation; tests/test_kernels.cpp checks that.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace plume::simd {

/// Read-only view of a compressed sparse row matrix. Index type matches the
/// default storage index of Eigen::SparseMatrix so row-major Eigen matrices
/// can be viewed without copying.
struct CsrView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  const int* row_ptr = nullptr;  // rows + 1 entries
  const int* col_idx = nullptr;
  const double* values = nullptr;
};

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i (a_i - b_i)^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  // y = A x
  void (*csr_matvec)(const CsrView& a, const double* x, double* y);
  // y += A x, A column-major rows x cols with leading dimension lda
  void (*gemv_acc)(std::size_t rows, std::size_t cols, const double* a, std::size_t lda, const double* x,
                   double* y);
};

const KernelTable& scalar_kernels();
/// nullptr when the variant was not compiled or the CPU lacks the features.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Kernel table selected for this process.
const KernelTable& active();

/// Force a variant; returns false (and leaves the selection unchanged) when
/// it is unavailable.
bool select(Isa isa);

std::string_view isa_name(Isa isa);

// Convenience wrappers over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}

inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return active().sum_sq_diff(a.data(), b.data(), a.size());
}

inline void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y) {
  active().csr_matvec(a, x.data(), y.data());
}

}  // namespace plume::simd
