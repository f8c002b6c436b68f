// Built with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "plume/simd/kernels.hpp"

namespace plume::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void csr_matvec_avx2(const CsrView& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    int k = a.row_ptr[r];
    const int end = a.row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.col_idx + k));
      const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.values + k), xv, acc);
    }
    double s = hsum(acc);
    for (; k < end; ++k) s += a.values[k] * x[a.col_idx[k]];
    y[r] = s;
  }
}

void gemv_acc_avx2(std::size_t rows, std::size_t cols, const double* a, std::size_t lda, const double* x,
                   double* y) {
  std::size_t i = 0;
  for (; i + 8 <= rows; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    for (std::size_t j = 0; j < cols; ++j) {
      const __m256d xj = _mm256_set1_pd(x[j]);
      const double* col = a + j * lda + i;
      y0 = _mm256_fmadd_pd(_mm256_loadu_pd(col), xj, y0);
      y1 = _mm256_fmadd_pd(_mm256_loadu_pd(col + 4), xj, y1);
    }
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= rows; i += 4) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    for (std::size_t j = 0; j < cols; ++j) {
      y0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + j * lda + i), _mm256_set1_pd(x[j]), y0);
    }
    _mm256_storeu_pd(y + i, y0);
  }
  for (; i < rows; ++i) {
    double s = y[i];
    for (std::size_t j = 0; j < cols; ++j) s += a[j * lda + i] * x[j];
    y[i] = s;
  }
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{Isa::avx2,        "avx2",          dot_avx2, axpy_avx2,
                                 sum_sq_diff_avx2, csr_matvec_avx2, gemv_acc_avx2};
  return table;
}

}  // namespace plume::simd
