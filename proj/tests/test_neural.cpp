#include <gtest/gtest.h>

#include <numeric>

#include "hinpath/kernels.hpp"
#include "hinpath/neural.hpp"
#include "support.hpp"

namespace hinpath {
namespace {

using testing::numeric_gradient;
using testing::relative_error;

// sum(y * r): its gradient with respect to y is r.
double weighted_sum(const Matrix<double>& y, const Matrix<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * r.data()[i];
  return s;
}

TEST(Mlp, ForwardSmallExample) {
  auto p = MlpParams<double>::zeros(2, 2, 1);
  p.w1(0, 0) = 1.0;
  p.w1(1, 1) = -1.0;
  p.b1(0, 1) = 0.5;
  p.w2(0, 0) = 2.0;
  p.w2(1, 0) = 3.0;
  p.b2(0, 0) = -1.0;
  Matrix<double> x(2, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;   // hidden = relu(1, -1.5) = (1, 0)
  x(1, 0) = -2.0;  // hidden = relu(-2, 0.5) = (0, 0.5)
  const auto y = mlp_forward(p, x, {}, nullptr);
  EXPECT_DOUBLE_EQ(y(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(y(1, 0), 0.5);
  const auto lin = mlp_forward(p, x, {Activation::kIdentity}, nullptr);
  EXPECT_DOUBLE_EQ(lin(0, 0), 2.0 * 1.0 + 3.0 * -1.5 - 1.0);
}

TEST(Mlp, XavierBoundsAndZeroBias) {
  RngStream rng(1, RngPurpose::kInit);
  const auto p = MlpParams<float>::xavier(30, 20, 5, rng);
  const float bound = static_cast<float>(std::sqrt(6.0 / 50.0));
  for (float v : p.w1.values()) EXPECT_LE(std::abs(v), bound);
  for (float v : p.b1.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Mlp, EvalModeIgnoresDropout) {
  RngStream rng(2, RngPurpose::kInit);
  const auto p = MlpParams<double>::xavier(4, 8, 3, rng);
  const auto x = testing::random_matrix<double>(5, 4, rng);
  const auto a = mlp_forward(p, x, {Activation::kRelu, 0.5, false}, nullptr);
  const auto b = mlp_forward(p, x, {Activation::kRelu, 0.0, false}, nullptr);
  EXPECT_EQ(a, b);
  EXPECT_THROW(mlp_forward(p, x, {Activation::kRelu, 0.5, true}, nullptr), NumericError);
}

class MlpGradient : public ::testing::TestWithParam<std::tuple<Activation, double>> {};

TEST_P(MlpGradient, MatchesFiniteDifferences) {
  const auto [act, dropout] = GetParam();
  RngStream rng(3, RngPurpose::kInit);
  auto p = MlpParams<double>::xavier(5, 7, 3, rng);
  for (auto& v : p.b1.values()) v = rng.uniform(-0.1, 0.1);
  auto x = testing::random_matrix<double>(6, 5, rng);
  const auto r = testing::random_matrix<double>(6, 3, rng);
  const MlpOptions opt{act, dropout, dropout > 0.0};
  auto loss = [&] {
    RngStream drop(9, RngPurpose::kDropout);
    return weighted_sum(mlp_forward(p, x, opt, &drop), r);
  };
  RngStream drop(9, RngPurpose::kDropout);
  MlpCache<double> cache;
  mlp_forward(p, x, opt, &drop, &cache);
  MlpParams<double> g;
  Matrix<double> dx;
  mlp_backward(p, x, cache, r, g, &dx);
  EXPECT_LT(relative_error(g.w1, numeric_gradient(p.w1, loss)), 1e-4);
  EXPECT_LT(relative_error(g.b1, numeric_gradient(p.b1, loss)), 1e-4);
  EXPECT_LT(relative_error(g.w2, numeric_gradient(p.w2, loss)), 1e-4);
  EXPECT_LT(relative_error(g.b2, numeric_gradient(p.b2, loss)), 1e-4);
  EXPECT_LT(relative_error(dx, numeric_gradient(x, loss)), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Variants, MlpGradient,
                         ::testing::Values(std::make_tuple(Activation::kRelu, 0.0),
                                           std::make_tuple(Activation::kIdentity, 0.0),
                                           std::make_tuple(Activation::kRelu, 0.3)));

TEST(CrossEntropy, UniformLogitsGiveLogClasses) {
  const Matrix<double> logits(4, 7, 0.25);
  const std::vector<std::uint32_t> y{0, 3, 6, 2};
  const auto r = cross_entropy(logits, y);
  EXPECT_NEAR(r.loss, std::log(7.0), 1e-12);
}

TEST(CrossEntropy, LargeLogitsStayFinite) {
  Matrix<double> logits(2, 2);
  logits(0, 0) = 1000.0;
  logits(1, 0) = 1000.0;
  const std::vector<std::uint32_t> y{0, 1};
  const auto r = cross_entropy(logits, y);
  EXPECT_NEAR(r.loss, 500.0, 1e-9);
  EXPECT_TRUE(r.grad.all_finite());
  const auto f = cross_entropy(logits.cast<float>(), y);
  EXPECT_NEAR(f.loss, 500.0, 1e-3);
}

TEST(CrossEntropy, MatchesDirectFormula) {
  RngStream rng(4, RngPurpose::kInit);
  const auto logits = testing::random_matrix<double>(5, 4, rng, -3, 3);
  const std::vector<std::uint32_t> y{1, 0, 3, 3, 2};
  double want = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    double z = 0.0;
    for (std::size_t c = 0; c < 4; ++c) z += std::exp(logits(i, c));
    want -= std::log(std::exp(logits(i, y[i])) / z);
  }
  EXPECT_NEAR(cross_entropy(logits, y).loss, want / 5.0, 1e-12);
  EXPECT_THROW(cross_entropy(logits, std::vector<std::uint32_t>{1, 0, 4, 3, 2}), DataError);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  RngStream rng(5, RngPurpose::kInit);
  auto logits = testing::random_matrix<double>(6, 3, rng, -2, 2);
  const std::vector<std::uint32_t> y{0, 1, 2, 2, 1, 0};
  const auto g = cross_entropy(logits, y).grad;
  EXPECT_LT(relative_error(g, numeric_gradient(logits, [&] { return cross_entropy(logits, y).loss; })), 1e-4);
}

TEST(Bce, MatchesDirectFormulaAndGradient) {
  RngStream rng(6, RngPurpose::kInit);
  auto logits = testing::random_matrix<double>(4, 3, rng, -4, 4);
  Matrix<std::uint8_t> t(4, 3);
  for (auto& v : t.values()) v = rng.uniform() < 0.5;
  double want = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-logits.data()[i]));
    want -= t.data()[i] ? std::log(s) : std::log(1.0 - s);
  }
  const auto r = bce_with_logits(logits, t);
  EXPECT_NEAR(r.loss, want / 12.0, 1e-12);
  EXPECT_LT(relative_error(r.grad, numeric_gradient(logits, [&] { return bce_with_logits(logits, t).loss; })), 1e-4);
  Matrix<double> big(1, 2);
  big(0, 0) = 800.0;
  big(0, 1) = -800.0;
  Matrix<std::uint8_t> tt(1, 2);
  tt(0, 0) = 0;
  tt(0, 1) = 1;
  EXPECT_NEAR(bce_with_logits(big, tt).loss, 800.0, 1e-9);
}

TEST(Softmax, NormalizedAndShiftInvariant) {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const auto s = softmax(x);
  EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(s[2] / s[1], std::exp(1.0), 1e-12);
  const std::vector<double> shifted{1001.0, 1002.0, 1003.0};
  const auto t = softmax(shifted);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s[i], t[i], 1e-12);
  const auto z = softmax(std::vector<double>{0.0, 0.0, 0.0, 0.0});
  for (double v : z) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  RngStream rng(7, RngPurpose::kInit);
  auto w = testing::random_matrix<double>(3, 3, rng);
  const auto before = w;
  const Matrix<double> g(3, 3);
  Adam<double> opt;
  for (int i = 0; i < 5; ++i) opt.step({&w}, {&g});
  EXPECT_EQ(w, before);
  EXPECT_EQ(opt.steps(), 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  RngStream rng(8, RngPurpose::kInit);
  auto w = testing::random_matrix<double>(4, 2, rng);
  const auto before = w;
  const auto g = testing::random_matrix<double>(4, 2, rng, -5, 5);
  Adam<double> opt(AdamConfig{.lr = 0.01});
  opt.step({&w}, {&g});
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double step = before.data()[i] - w.data()[i];
    EXPECT_NEAR(step, 0.01 * (g.data()[i] > 0 ? 1 : -1), 1e-8);
  }
}

TEST(Adam, RepeatedRunsAreIdentical) {
  auto run = [] {
    RngStream rng(9, RngPurpose::kInit);
    auto w = testing::random_matrix<float>(5, 5, rng);
    Adam<float> opt;
    for (int i = 0; i < 20; ++i) {
      const auto g = testing::random_matrix<float>(5, 5, rng);
      opt.step({&w}, {&g});
    }
    return w;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, NonFiniteGradientThrowsWithoutUpdating) {
  Matrix<double> a(2, 2, 1.0), b(2, 2, 1.0);
  Matrix<double> ga(2, 2, 0.5), gb(2, 2, 0.5);
  gb(1, 1) = std::nan("");
  Adam<double> opt;
  EXPECT_THROW(opt.step({&a, &b}, {&ga, &gb}), NumericError);
  EXPECT_EQ(a, Matrix<double>(2, 2, 1.0));
  EXPECT_EQ(opt.steps(), 0u);
}

TEST(EntryAdam, OnlyTouchesListedEntries) {
  std::vector<double> v(5, 0.0);
  EntryAdam opt(5, AdamConfig{.lr = 0.1});
  const std::vector<std::size_t> idx{1, 3};
  const std::vector<double> g{1.0, -2.0};
  opt.step(v, idx, g);
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_NEAR(v[1], -0.1, 1e-6);
  EXPECT_NEAR(v[3], 0.1, 1e-6);
  EXPECT_DOUBLE_EQ(v[4], 0.0);
}

TEST(Checkpoint, RoundTrip) {
  RngStream rng(10, RngPurpose::kInit);
  const auto p = MlpParams<float>::xavier(3, 4, 2, rng);
  std::vector<NamedTensor> t;
  append_tensors(t, "proj", p);
  const auto bytes = encode_checkpoint(t);
  EXPECT_EQ(bytes.substr(0, 4), "HINP");
  const auto back = decode_checkpoint(bytes, "ckpt");
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(back[0].first, "proj.w1");
  EXPECT_EQ(mlp_from_tensors<float>(back, "proj"), p);
  EXPECT_THROW(mlp_from_tensors<float>(back, "other"), DataError);
}

TEST(Checkpoint, CorruptInputIsDataError) {
  std::vector<NamedTensor> t{{"x", Matrix<float>(2, 2, 1.0f)}};
  const auto bytes = encode_checkpoint(t);
  EXPECT_THROW(decode_checkpoint("HINQ" + bytes.substr(4), "c"), DataError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 2), "c"), DataError);
  EXPECT_THROW(decode_checkpoint(bytes + "x", "c"), DataError);
}

}  // namespace
}  // namespace hinpath
