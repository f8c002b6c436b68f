// AArch64 only; NEON is part of the baseline ISA there.

#include <arm_neon.h>

#include "plume/simd/kernels.hpp"

namespace plume::simd {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void csr_matvec_neon(const CsrView& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    int k = a.row_ptr[r];
    const int end = a.row_ptr[r + 1];
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; k + 2 <= end; k += 2) {
      const double gathered[2] = {x[a.col_idx[k]], x[a.col_idx[k + 1]]};
      acc = vfmaq_f64(acc, vld1q_f64(a.values + k), vld1q_f64(gathered));
    }
    double s = vaddvq_f64(acc);
    for (; k < end; ++k) s += a.values[k] * x[a.col_idx[k]];
    y[r] = s;
  }
}

void gemv_acc_neon(std::size_t rows, std::size_t cols, const double* a, std::size_t lda, const double* x,
                   double* y) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    float64x2_t y0 = vld1q_f64(y + i);
    float64x2_t y1 = vld1q_f64(y + i + 2);
    for (std::size_t j = 0; j < cols; ++j) {
      const double* col = a + j * lda + i;
      y0 = vfmaq_n_f64(y0, vld1q_f64(col), x[j]);
      y1 = vfmaq_n_f64(y1, vld1q_f64(col + 2), x[j]);
    }
    vst1q_f64(y + i, y0);
    vst1q_f64(y + i + 2, y1);
  }
  for (; i < rows; ++i) {
    double s = y[i];
    for (std::size_t j = 0; j < cols; ++j) s += a[j * lda + i] * x[j];
    y[i] = s;
  }
}

}  // namespace

const KernelTable& neon_table_impl() {
  static const KernelTable table{Isa::neon,        "neon",          dot_neon, axpy_neon,
                                 sum_sq_diff_neon, csr_matvec_neon, gemv_acc_neon};
  return table;
}

}  // namespace plume::simd
