#include "bkf/kernels/kernels.hpp"

namespace bkf::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void cross_accumulate(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                      std::size_t n, std::size_t pa, std::size_t pb, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * lda;
    const double* bi = b + i * ldb;
    for (std::size_t j = 0; j < pa; ++j) {
      const double aij = ai[j];
      double* row = out + j * pb;
      for (std::size_t k = 0; k < pb; ++k) row[k] += aij * bi[k];
    }
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
    double sa = 0.0, sb = 0.0, diag = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      sa += ai[j];
      sb += bi[j];
      diag += ai[j] * bi[j];
    }
    total += sa * sb - diag;
  }
  return total;
}

constexpr KernelTable kTable{Isa::Scalar, dot, axpy, cross_accumulate, rows_times,
                             offdiag_cross_sum};

}  // namespace

const KernelTable& table() noexcept { return kTable; }

}  // namespace bkf::kernels::scalar
