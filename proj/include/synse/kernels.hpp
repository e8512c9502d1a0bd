#pragma once

// Dense linear-algebra kernels used by every forward/backward pass.
//
// Two implementations are kept side by side: `serial` is the plain reference,
// `parallel` distributes output rows across OpenMP threads. Each output element
// is accumulated by a single thread in the same order as the serial loop, so
// both produce bit-identical results for any thread count. The unqualified
// functions in `synse::kernels` dispatch to `parallel`.

#include "synse/matrix.hpp"

namespace synse::kernels {

namespace serial {
Matrix gemm(const Matrix& a, const Matrix& b);     // a * b
Matrix gemm_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix gemm_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix affine(const Matrix& x, const Matrix& w, const Vector& bias);
Vector column_sums(const Matrix& m);
}  // namespace serial

namespace parallel {
Matrix gemm(const Matrix& a, const Matrix& b);
Matrix gemm_tn(const Matrix& a, const Matrix& b);
Matrix gemm_nt(const Matrix& a, const Matrix& b);
Matrix affine(const Matrix& x, const Matrix& w, const Vector& bias);
Vector column_sums(const Matrix& m);
}  // namespace parallel

inline Matrix gemm(const Matrix& a, const Matrix& b) { return parallel::gemm(a, b); }
inline Matrix gemm_tn(const Matrix& a, const Matrix& b) { return parallel::gemm_tn(a, b); }
inline Matrix gemm_nt(const Matrix& a, const Matrix& b) { return parallel::gemm_nt(a, b); }
inline Matrix affine(const Matrix& x, const Matrix& w, const Vector& bias) {
  return parallel::affine(x, w, bias);
}
inline Vector column_sums(const Matrix& m) { return parallel::column_sums(m); }

// Elementwise helpers; cheap enough that they stay serial.
void axpy(double alpha, const Matrix& x, Matrix& y);  // y += alpha * x
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hconcat(const Matrix& left, const Matrix& right);
Matrix column_block(const Matrix& m, std::size_t first, std::size_t count);
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

int max_threads();

}  // namespace synse::kernels
