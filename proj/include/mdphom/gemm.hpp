#pragma once

#include <cstddef>

namespace mdphom {

/// C = alpha * op(A) * op(B) + beta * C, row-major. Thin wrapper over BLAS so
/// the rest of the code never touches the cblas API directly.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc);

/// y = alpha * A * x + beta * y, A row-major (m x n).
void gemv(std::size_t m, std::size_t n, double alpha, const double* a, std::size_t lda,
          const double* x, double beta, double* y);

}  // namespace mdphom
