// Compiled with -mavx2 -mfma; only reached through the dispatcher after a CPUID check.
#include "bkf/kernels/kernels.hpp"

#include <immintrin.h>

namespace bkf::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four observations per pass so each output row is loaded and stored once per block.
void cross_accumulate(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                      std::size_t n, std::size_t pa, std::size_t pb, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* a0 = a + i * lda;
    const double* a1 = a0 + lda;
    const double* a2 = a1 + lda;
    const double* a3 = a2 + lda;
    const double* b0 = b + i * ldb;
    const double* b1 = b0 + ldb;
    const double* b2 = b1 + ldb;
    const double* b3 = b2 + ldb;
    for (std::size_t j = 0; j < pa; ++j) {
      const __m256d w0 = _mm256_set1_pd(a0[j]);
      const __m256d w1 = _mm256_set1_pd(a1[j]);
      const __m256d w2 = _mm256_set1_pd(a2[j]);
      const __m256d w3 = _mm256_set1_pd(a3[j]);
      double* row = out + j * pb;
      std::size_t k = 0;
      for (; k + 4 <= pb; k += 4) {
        __m256d acc = _mm256_loadu_pd(row + k);
        acc = _mm256_fmadd_pd(w0, _mm256_loadu_pd(b0 + k), acc);
        acc = _mm256_fmadd_pd(w1, _mm256_loadu_pd(b1 + k), acc);
        acc = _mm256_fmadd_pd(w2, _mm256_loadu_pd(b2 + k), acc);
        acc = _mm256_fmadd_pd(w3, _mm256_loadu_pd(b3 + k), acc);
        _mm256_storeu_pd(row + k, acc);
      }
      for (; k < pb; ++k) {
        row[k] += a0[j] * b0[k] + a1[j] * b1[k] + a2[j] * b2[k] + a3[j] * b3[k];
      }
    }
  }
  for (; i < n; ++i) {
    const double* ai = a + i * lda;
    const double* bi = b + i * ldb;
    for (std::size_t j = 0; j < pa; ++j) axpy(ai[j], bi, out + j * pb, pb);
  }
}

void rows_times(const double* m, std::size_t q, std::size_t p, const double* x, std::size_t ldx,
                std::size_t n, double* out, std::size_t ldo, bool lower) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * ldx;
    double* oi = out + i * ldo;
    for (std::size_t j = 0; j < q; ++j) {
      const std::size_t len = lower ? (j + 1 < p ? j + 1 : p) : p;
      oi[j] = dot(m + j * p, xi, len);
    }
  }
}

double offdiag_cross_sum(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                         std::size_t n, std::size_t p) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * lda;
    const double* bi = b + i * ldb;
    __m256d va = _mm256_setzero_pd();
    __m256d vb = _mm256_setzero_pd();
    __m256d vd = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= p; j += 4) {
      const __m256d xa = _mm256_loadu_pd(ai + j);
      const __m256d xb = _mm256_loadu_pd(bi + j);
      va = _mm256_add_pd(va, xa);
      vb = _mm256_add_pd(vb, xb);
      vd = _mm256_fmadd_pd(xa, xb, vd);
    }
    double sa = hsum(va), sb = hsum(vb), diag = hsum(vd);
    for (; j < p; ++j) {
      sa += ai[j];
      sb += bi[j];
      diag += ai[j] * bi[j];
    }
    total += sa * sb - diag;
  }
  return total;
}

constexpr KernelTable kTable{Isa::Avx2, dot, axpy, cross_accumulate, rows_times,
                             offdiag_cross_sum};

}  // namespace

const KernelTable* table() noexcept { return &kTable; }

}  // namespace bkf::kernels::avx2
