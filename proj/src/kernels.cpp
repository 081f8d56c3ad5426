#include "hinpath/kernels.hpp"

#include <omp.h>

#include "hinpath/hin.hpp"

namespace hinpath::kernels {

void set_num_threads(int n) { omp_set_num_threads(n < 1 ? 1 : n); }
int num_threads() { return omp_get_max_threads(); }

namespace {

template <typename T>
void check_gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c, std::size_t m, std::size_t k1, std::size_t k2,
                std::size_t n) {
  require_shape(k1 == k2, "gemm inner dimensions");
  if (c.rows() != m || c.cols() != n) c = Matrix<T>(m, n);
  (void)a;
  (void)b;
}

// Row i of c = a.row(i) * b, accumulated over k in ascending order.
template <typename T>
inline void gemm_row(const T* arow, const Matrix<T>& b, T* crow) {
  const std::size_t inner = b.rows();
  const std::size_t n = b.cols();
  for (std::size_t j = 0; j < n; ++j) crow[j] = T{0};
  for (std::size_t k = 0; k < inner; ++k) {
    const T av = arow[k];
    const T* brow = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// OpenMP

template <typename T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_gemm(a, b, c, a.rows(), a.cols(), b.rows(), b.cols());
  const auto m = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) gemm_row(a.data() + i * a.cols(), b, c.data() + i * c.cols());
}

template <typename T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_gemm(a, b, c, a.cols(), a.rows(), b.rows(), b.cols());
  const auto kdim = static_cast<std::int64_t>(a.cols());
  const std::size_t rows = a.rows();
  const std::size_t n = b.cols();
  // Each thread owns whole output rows; the sum over a's rows stays ascending.
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < kdim; ++k) {
    T* crow = c.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = T{0};
    for (std::size_t i = 0; i < rows; ++i) {
      const T av = a(i, static_cast<std::size_t>(k));
      const T* brow = b.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_gemm(a, b, c, a.rows(), a.cols(), b.cols(), b.rows());
  const auto bt = transpose(b);
  const auto m = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) gemm_row(a.data() + i * a.cols(), bt, c.data() + i * c.cols());
}

void spmm(const SparseAdjacency& a, const Matrix<double>& x, Matrix<double>& y) {
  require_shape(a.cols() == x.rows(), "spmm inner dimensions");
  if (y.rows() != a.rows() || y.cols() != x.cols()) y = Matrix<double>(a.rows(), x.cols());
  const auto rows = static_cast<std::int64_t>(a.rows());
  const std::size_t f = x.cols();
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t r = 0; r < rows; ++r) {
    double* yrow = y.data() + r * f;
    for (std::size_t j = 0; j < f; ++j) yrow[j] = 0.0;
    for (auto p = offsets[r]; p < offsets[r + 1]; ++p) {
      const double v = vals[p];
      const double* xrow = x.data() + static_cast<std::size_t>(cols[p]) * f;
      for (std::size_t j = 0; j < f; ++j) yrow[j] += v * xrow[j];
    }
  }
}

// ---------------------------------------------------------------------------
// Serial reference

namespace reference {

template <typename T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_gemm(a, b, c, a.rows(), a.cols(), b.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      T s{0};
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
}

template <typename T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_gemm(a, b, c, a.cols(), a.rows(), b.rows(), b.cols());
  for (std::size_t k = 0; k < a.cols(); ++k) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      T s{0};
      for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, k) * b(i, j);
      c(k, j) = s;
    }
  }
}

template <typename T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_gemm(a, b, c, a.rows(), a.cols(), b.cols(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      T s{0};
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  }
}

void spmm(const SparseAdjacency& a, const Matrix<double>& x, Matrix<double>& y) {
  require_shape(a.cols() == x.rows(), "spmm inner dimensions");
  y = Matrix<double>(a.rows(), x.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto cols = a.row_cols(r);
    const auto vals = a.row_values(r);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < cols.size(); ++p) s += vals[p] * x(cols[p], j);
      y(r, j) = s;
    }
  }
}

template void gemm<float>(const Matrix<float>&, const Matrix<float>&, Matrix<float>&);
template void gemm<double>(const Matrix<double>&, const Matrix<double>&, Matrix<double>&);
template void gemm_tn<float>(const Matrix<float>&, const Matrix<float>&, Matrix<float>&);
template void gemm_tn<double>(const Matrix<double>&, const Matrix<double>&, Matrix<double>&);
template void gemm_nt<float>(const Matrix<float>&, const Matrix<float>&, Matrix<float>&);
template void gemm_nt<double>(const Matrix<double>&, const Matrix<double>&, Matrix<double>&);

}  // namespace reference

template void gemm<float>(const Matrix<float>&, const Matrix<float>&, Matrix<float>&);
template void gemm<double>(const Matrix<double>&, const Matrix<double>&, Matrix<double>&);
template void gemm_tn<float>(const Matrix<float>&, const Matrix<float>&, Matrix<float>&);
template void gemm_tn<double>(const Matrix<double>&, const Matrix<double>&, Matrix<double>&);
template void gemm_nt<float>(const Matrix<float>&, const Matrix<float>&, Matrix<float>&);
template void gemm_nt<double>(const Matrix<double>&, const Matrix<double>&, Matrix<double>&);

}  // namespace hinpath::kernels
