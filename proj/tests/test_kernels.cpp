#include <gtest/gtest.h>

#include "hinpath/kernels.hpp"
#include "support.hpp"

namespace hinpath {
namespace {

template <typename T>
Matrix<double> naive(const Matrix<T>& a, const Matrix<T>& b, bool ta, bool tb) {
  const auto n = ta ? a.cols() : a.rows();
  const auto k = ta ? a.rows() : a.cols();
  const auto m = tb ? b.rows() : b.cols();
  Matrix<double> c(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += static_cast<double>(ta ? a(p, i) : a(i, p)) * (tb ? b(j, p) : b(p, j));
      c(i, j) = s;
    }
  return c;
}

template <typename T>
double max_diff(const Matrix<T>& a, const Matrix<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
  return d;
}

class KernelThreads : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { kernels::set_num_threads(GetParam()); }
  void TearDown() override { kernels::set_num_threads(1); }
};

TEST_P(KernelThreads, GemmVariantsMatchReferenceBitwise) {
  RngStream rng(41, RngPurpose::kSynth);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.uniform_below(40), k = 1 + rng.uniform_below(40), m = 1 + rng.uniform_below(40);
    const auto a = testing::random_matrix<float>(n, k, rng);
    const auto b = testing::random_matrix<float>(k, m, rng);
    const auto bt = testing::random_matrix<float>(m, k, rng);
    const auto at = testing::random_matrix<float>(k, n, rng);
    Matrix<float> c1, c2;
    kernels::gemm(a, b, c1);
    kernels::reference::gemm(a, b, c2);
    EXPECT_EQ(c1, c2);
    EXPECT_LT(max_diff(c1, naive(a, b, false, false)), 1e-4);
    kernels::gemm_tn(at, b, c1);
    kernels::reference::gemm_tn(at, b, c2);
    EXPECT_EQ(c1, c2);
    EXPECT_LT(max_diff(c1, naive(at, b, true, false)), 1e-4);
    kernels::gemm_nt(a, bt, c1);
    kernels::reference::gemm_nt(a, bt, c2);
    EXPECT_EQ(c1, c2);
    EXPECT_LT(max_diff(c1, naive(a, bt, false, true)), 1e-4);
  }
}

TEST_P(KernelThreads, DoubleGemmMatchesNaive) {
  RngStream rng(42, RngPurpose::kSynth);
  const auto a = testing::random_matrix<double>(17, 9, rng);
  const auto b = testing::random_matrix<double>(9, 23, rng);
  Matrix<double> c1, c2;
  kernels::gemm(a, b, c1);
  kernels::reference::gemm(a, b, c2);
  EXPECT_EQ(c1, c2);
  EXPECT_LT(max_diff(c1, naive(a, b, false, false)), 1e-12);
}

TEST_P(KernelThreads, SpmmMatchesReferenceAndDense) {
  RngStream rng(43, RngPurpose::kSynth);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t r = 1 + rng.uniform_below(60), c = 1 + rng.uniform_below(60), f = 1 + rng.uniform_below(8);
    std::vector<SparseAdjacency::Entry> e;
    for (std::uint32_t i = 0; i < r; ++i)
      for (std::uint32_t j = 0; j < c; ++j)
        if (rng.uniform() < 0.2) e.push_back({i, j, rng.uniform(0.1, 1.0)});
    const auto a = SparseAdjacency::from_entries(r, c, e);
    const auto x = testing::random_matrix<double>(c, f, rng);
    Matrix<double> y1, y2;
    kernels::spmm(a, x, y1);
    kernels::reference::spmm(a, x, y2);
    EXPECT_EQ(y1, y2);
    const auto want = testing::dense_product(testing::dense(a), x);
    EXPECT_LT(max_diff(y1, want), 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelThreads, ::testing::Values(1, 2, 4));

TEST(Kernels, ShapeMismatchIsNumericError) {
  Matrix<float> a(2, 3), b(4, 2), c;
  EXPECT_THROW(kernels::gemm(a, b, c), NumericError);
  EXPECT_THROW(kernels::reference::gemm(a, b, c), NumericError);
}

}  // namespace
}  // namespace hinpath
