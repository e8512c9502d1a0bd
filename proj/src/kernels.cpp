#include "synse/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdint>

namespace synse::kernels {

namespace {

// Below this many multiply-adds, thread startup costs more than it saves.
constexpr std::int64_t kParallelWork = 1 << 15;

void check_gemm(const Matrix& a, const Matrix& b, std::size_t a_inner, std::size_t b_inner,
                const char* name) {
  require_shape(a_inner == b_inner, std::string(name) + ": inner dimension mismatch " +
                                        shape_str(a) + " vs " + shape_str(b));
}

// Row kernels shared by both backends; the only difference is the loop driver.
inline void gemm_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t n = b.cols();
  double* out = c.data() + i * n;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = a(i, k);
    const double* brow = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += aik * brow[j];
  }
}

inline void gemm_tn_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t n = b.cols();
  double* out = c.data() + i * n;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double ari = a(r, i);
    const double* brow = b.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += ari * brow[j];
  }
}

inline void gemm_nt_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const double* arow = a.data() + i * a.cols();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* brow = b.data() + j * b.cols();
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
    c(i, j) = acc;
  }
}

inline void affine_row(const Matrix& x, const Matrix& w, const Vector& bias, Matrix& out,
                       std::size_t i) {
  std::copy(bias.begin(), bias.end(), out.row(i).begin());
  gemm_row(x, w, out, i);
}

inline void column_sum_col(const Matrix& m, Vector& out, std::size_t j) {
  double acc = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, j);
  out[j] = acc;
}

template <typename RowFn>
void for_rows_parallel(std::size_t rows, std::int64_t work, RowFn&& fn) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (work >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) fn(static_cast<std::size_t>(i));
}

template <typename RowFn>
void for_rows_serial(std::size_t rows, RowFn&& fn) {
  for (std::size_t i = 0; i < rows; ++i) fn(i);
}

std::int64_t work(std::size_t a, std::size_t b, std::size_t c) {
  return static_cast<std::int64_t>(a) * static_cast<std::int64_t>(b) *
         static_cast<std::int64_t>(c);
}

}  // namespace

namespace serial {

Matrix gemm(const Matrix& a, const Matrix& b) {
  check_gemm(a, b, a.cols(), b.rows(), "gemm");
  Matrix c(a.rows(), b.cols());
  for_rows_serial(a.rows(), [&](std::size_t i) { gemm_row(a, b, c, i); });
  return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  check_gemm(a, b, a.rows(), b.rows(), "gemm_tn");
  Matrix c(a.cols(), b.cols());
  for_rows_serial(a.cols(), [&](std::size_t i) { gemm_tn_row(a, b, c, i); });
  return c;
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  check_gemm(a, b, a.cols(), b.cols(), "gemm_nt");
  Matrix c(a.rows(), b.rows());
  for_rows_serial(a.rows(), [&](std::size_t i) { gemm_nt_row(a, b, c, i); });
  return c;
}

Matrix affine(const Matrix& x, const Matrix& w, const Vector& bias) {
  check_gemm(x, w, x.cols(), w.rows(), "affine");
  require_shape(bias.size() == w.cols(), "affine: bias width mismatch");
  Matrix out(x.rows(), w.cols());
  for_rows_serial(x.rows(), [&](std::size_t i) { affine_row(x, w, bias, out, i); });
  return out;
}

Vector column_sums(const Matrix& m) {
  Vector out(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) column_sum_col(m, out, j);
  return out;
}

}  // namespace serial

namespace parallel {

Matrix gemm(const Matrix& a, const Matrix& b) {
  check_gemm(a, b, a.cols(), b.rows(), "gemm");
  Matrix c(a.rows(), b.cols());
  for_rows_parallel(a.rows(), work(a.rows(), a.cols(), b.cols()),
                    [&](std::size_t i) { gemm_row(a, b, c, i); });
  return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  check_gemm(a, b, a.rows(), b.rows(), "gemm_tn");
  Matrix c(a.cols(), b.cols());
  for_rows_parallel(a.cols(), work(a.rows(), a.cols(), b.cols()),
                    [&](std::size_t i) { gemm_tn_row(a, b, c, i); });
  return c;
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  check_gemm(a, b, a.cols(), b.cols(), "gemm_nt");
  Matrix c(a.rows(), b.rows());
  for_rows_parallel(a.rows(), work(a.rows(), a.cols(), b.rows()),
                    [&](std::size_t i) { gemm_nt_row(a, b, c, i); });
  return c;
}

Matrix affine(const Matrix& x, const Matrix& w, const Vector& bias) {
  check_gemm(x, w, x.cols(), w.rows(), "affine");
  require_shape(bias.size() == w.cols(), "affine: bias width mismatch");
  Matrix out(x.rows(), w.cols());
  for_rows_parallel(x.rows(), work(x.rows(), x.cols(), w.cols()),
                    [&](std::size_t i) { affine_row(x, w, bias, out, i); });
  return out;
}

Vector column_sums(const Matrix& m) {
  Vector out(m.cols());
  for_rows_parallel(m.cols(), work(m.rows(), m.cols(), 1),
                    [&](std::size_t j) { column_sum_col(m, out, j); });
  return out;
}

}  // namespace parallel

void axpy(double alpha, const Matrix& x, Matrix& y) {
  require_shape(x.rows() == y.rows() && x.cols() == y.cols(),
                "axpy: " + shape_str(x) + " vs " + shape_str(y));
  auto xs = x.values();
  auto ys = y.values();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] += alpha * xs[i];
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                "subtract: " + shape_str(a) + " vs " + shape_str(b));
  Matrix out = a;
  axpy(-1.0, b, out);
  return out;
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
  require_shape(left.rows() == right.rows(), "hconcat: row count mismatch " + shape_str(left) +
                                                 " vs " + shape_str(right));
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(left.row(r).begin(), left.row(r).end(), dst.begin());
    std::copy(right.row(r).begin(), right.row(r).end(), dst.begin() + left.cols());
  }
  return out;
}

Matrix column_block(const Matrix& m, std::size_t first, std::size_t count) {
  require_shape(first + count <= m.cols(), "column_block out of range");
  Matrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r).subspan(first, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require_shape(rows[i] < m.rows(), "gather_rows index out of range");
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace synse::kernels
