#pragma once

// Dense and sparse products used by propagation and the MLPs.
//
// Two implementations share one contract: `reference::` is a plain serial
// version kept for testing, the unqualified functions are OpenMP-parallel over
// output rows. Every output element is accumulated in the same order in both,
// so results are bit-identical for any thread count.

#include <cstddef>

#include "hinpath/matrix.hpp"

namespace hinpath {

class SparseAdjacency;

namespace kernels {

void set_num_threads(int n);
int num_threads();

/// c = a * b
template <typename T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c);
/// c = a^T * b
template <typename T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c);
/// c = a * b^T
template <typename T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c);

/// y = a * x with `a` in CSR form.
void spmm(const SparseAdjacency& a, const Matrix<double>& x, Matrix<double>& y);

namespace reference {

template <typename T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c);
template <typename T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c);
template <typename T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c);
void spmm(const SparseAdjacency& a, const Matrix<double>& x, Matrix<double>& y);

}  // namespace reference
}  // namespace kernels
}  // namespace hinpath
