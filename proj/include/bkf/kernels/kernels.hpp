#pragma once

// Data-parallel inner loops used by the samplers. Every kernel has a scalar
// reference implementation; wider ISA variants must agree with it to rounding.
// Matrices are row-major with an explicit leading dimension.

#include <cstddef>
#include <string_view>

namespace bkf::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  Isa isa;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // out (pa x pb, leading dimension pb) += A^T B, where A is n x pa and B is n x pb.
  void (*cross_accumulate)(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                           std::size_t n, std::size_t pa, std::size_t pb, double* out);

  // For each row x_i of X (n x p): out_i = M x_i with M q x p. When lower is set,
  // M is treated as lower triangular (entries above the diagonal are ignored).
  void (*rows_times)(const double* m, std::size_t q, std::size_t p, const double* x,
                     std::size_t ldx, std::size_t n, double* out, std::size_t ldo, bool lower);

  // sum_i [ (sum_j a_ij) (sum_k b_ik) - sum_j a_ij b_ij ], i.e. sum over ordered j != k.
  double (*offdiag_cross_sum)(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                              std::size_t n, std::size_t p);
};

bool isa_supported(Isa isa) noexcept;

// Best ISA available on the running CPU. Honors BKF_ISA=scalar|avx2 when set.
Isa detect_best() noexcept;

const KernelTable& table_for(Isa isa);

// Process-wide table; resolved on first use.
const KernelTable& active();

// Throws bkf::Error(InvalidParameter) when the CPU lacks the ISA.
void select_isa(Isa isa);

namespace scalar {
const KernelTable& table() noexcept;
}
namespace avx2 {
const KernelTable* table() noexcept;  // nullptr when not compiled in
}

}  // namespace bkf::kernels
