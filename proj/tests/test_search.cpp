#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "hinpath/search.hpp"
#include "support.hpp"

namespace hinpath {
namespace {

using testing::numeric_gradient;
using testing::relative_error;

// K random feature matrices over n nodes, labels partly explained by path 0.
struct Toy {
  PathFeatureSet feats;
  Labels labels;
  std::vector<Split> splits;
  Supervision sup() const { return {labels, splits}; }
};

Toy make_toy(std::size_t k, std::size_t n, std::uint64_t seed) {
  Toy t;
  RngStream rng(seed, RngPurpose::kSynth);
  for (std::size_t i = 0; i < k; ++i) {
    t.feats.names.push_back("P" + std::to_string(i));
    t.feats.paths.push_back(MetaPath{{0}, {}});
    t.feats.matrices.push_back(testing::random_matrix<float>(n, 3 + i % 3, rng));
  }
  t.labels.num_classes = 3;
  for (std::size_t i = 0; i < n; ++i) {
    t.labels.classes.push_back(t.feats.matrices[0](i, 0) > 0.3f ? 2 : t.feats.matrices[0](i, 1) > 0.0f ? 1 : 0);
    t.splits.push_back(i % 3 == 0 ? Split::kVal : i % 3 == 1 ? Split::kTrain : Split::kTest);
  }
  return t;
}

TEST(SamplePaths, SortedDistinctAndCapped) {
  RngStream rng(1, RngPurpose::kSample);
  for (int i = 0; i < 100; ++i) {
    const auto s = sample_paths(10, 4, rng);
    ASSERT_EQ(s.size(), 4u);
    for (std::size_t j = 1; j < s.size(); ++j) EXPECT_LT(s[j - 1], s[j]);
    EXPECT_LT(s.back(), 10u);
  }
  EXPECT_EQ(sample_paths(5, 5, rng), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(sample_paths(3, 8, rng).size(), 3u);
  EXPECT_THROW(sample_paths(3, 0, rng), UsageError);
}

TEST(SamplePaths, ReplayableFromSeed) {
  RngStream a(7, RngPurpose::kSample), b(7, RngPurpose::kSample);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_paths(20, 6, a), sample_paths(20, 6, b));
}

TEST(SamplePaths, UniformOverSubsets) {
  // All 10 two-subsets of five indices should be equally likely.
  RngStream rng(3, RngPurpose::kSample);
  std::map<std::vector<std::size_t>, int> counts;
  const int draws = 100000;
  std::vector<int> per_index(5, 0);
  for (int i = 0; i < draws; ++i) {
    const auto s = sample_paths(5, 2, rng);
    ++counts[s];
    for (auto k : s) ++per_index[k];
  }
  ASSERT_EQ(counts.size(), 10u);
  double chi2 = 0.0;
  for (const auto& [_, c] : counts) chi2 += std::pow(c - draws / 10.0, 2) / (draws / 10.0);
  EXPECT_LT(chi2, 21.666);  // chi-square(9) at p = 0.01
  for (int c : per_index) EXPECT_NEAR(c / static_cast<double>(draws), 0.4, 0.01);
}

TEST(SuperNet, SinglePathFusionIsItsProjection) {
  auto toy = make_toy(3, 12, 1);
  SearchConfig cfg;
  cfg.hidden = 6;
  SuperNet<double> net({3, 4, 5}, 3, cfg, 1);
  net.alpha()[1] = 2.5;
  const auto x = toy.feats.matrices[1].cast<double>();
  const std::vector<std::size_t> s{1};
  const std::vector<const Matrix<double>*> in{&x};
  const auto pass = net.forward(s, in, {}, nullptr);
  ASSERT_EQ(pass.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(pass.weights[0], 1.0);
  EXPECT_EQ(pass.fused, pass.projected[0]);
  EXPECT_TRUE(net.has_projector(1));
  EXPECT_FALSE(net.has_projector(0));
}

TEST(SuperNet, ZeroAlphaGivesEqualWeightsAndRecomputes) {
  auto toy = make_toy(4, 10, 2);
  SearchConfig cfg;
  cfg.hidden = 5;
  SuperNet<double> net({3, 4, 5, 3}, 3, cfg, 2);
  std::vector<Matrix<double>> xs;
  for (auto& m : toy.feats.matrices) xs.push_back(m.cast<double>());
  const std::vector<std::size_t> s{0, 2, 3};
  const std::vector<const Matrix<double>*> in{&xs[0], &xs[2], &xs[3]};
  const auto a = net.forward(s, in, {}, nullptr);
  for (double w : a.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
  const auto b = net.forward(s, in, {}, nullptr);
  EXPECT_EQ(a.logits, b.logits);
}

TEST(SuperNet, ProjectorInitDoesNotDependOnSamplingOrder) {
  SearchConfig cfg;
  cfg.hidden = 4;
  SuperNet<float> a({3, 3, 3}, 2, cfg, 5), b({3, 3, 3}, 2, cfg, 5);
  const auto p2 = a.projector(2);
  b.projector(0);
  b.projector(1);
  EXPECT_EQ(b.projector(2), p2);
}

TEST(SuperNet, GradientsMatchFiniteDifferences) {
  auto toy = make_toy(4, 9, 3);
  SearchConfig cfg;
  cfg.hidden = 5;
  SuperNet<double> net({3, 4, 5, 3}, 3, cfg, 3);
  net.alpha() = {0.3, -0.7, 0.1, 1.2};
  std::vector<Matrix<double>> xs;
  for (auto& m : toy.feats.matrices) xs.push_back(m.cast<double>());
  const std::vector<std::size_t> s{0, 1, 3};
  const std::vector<const Matrix<double>*> in{&xs[0], &xs[1], &xs[3]};
  const std::vector<std::uint32_t> y(toy.labels.classes.begin(), toy.labels.classes.end());
  auto loss = [&] { return cross_entropy(net.forward(s, in, {}, nullptr).logits, y).loss; };

  const auto pass = net.forward(s, in, {}, nullptr);
  const auto g = net.backward(pass, cross_entropy(pass.logits, y).grad, true, true);

  EXPECT_LT(relative_error(g.classifier.w1, numeric_gradient(net.classifier().w1, loss)), 1e-4);
  EXPECT_LT(relative_error(g.classifier.b2, numeric_gradient(net.classifier().b2, loss)), 1e-4);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LT(relative_error(g.projectors[i].w1, numeric_gradient(net.projector(s[i]).w1, loss)), 1e-4);
    EXPECT_LT(relative_error(g.projectors[i].b1, numeric_gradient(net.projector(s[i]).b1, loss)), 1e-4);
    EXPECT_LT(relative_error(g.projectors[i].w2, numeric_gradient(net.projector(s[i]).w2, loss)), 1e-4);
  }

  Matrix<double> alpha(1, s.size()), analytic(1, s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    alpha(0, i) = net.alpha()[s[i]];
    analytic(0, i) = g.alpha[i];
  }
  auto alpha_loss = [&] {
    for (std::size_t i = 0; i < s.size(); ++i) net.alpha()[s[i]] = alpha(0, i);
    return loss();
  };
  EXPECT_LT(relative_error(analytic, numeric_gradient(alpha, alpha_loss)), 1e-4);
  // The softmax Jacobian makes alpha gradients sum to zero.
  EXPECT_NEAR(std::accumulate(g.alpha.begin(), g.alpha.end(), 0.0), 0.0, 1e-12);
}

std::vector<Matrix<double>> snapshot(const SuperNet<double>& net) {
  std::vector<Matrix<double>> out;
  for (const auto* t : net.omega_tensors()) out.push_back(*t);
  return out;
}

TEST(Search, BilevelPhasesAreIsolated) {
  auto toy = make_toy(8, 30, 4);
  SearchConfig cfg;
  cfg.hidden = 8;
  cfg.sample_size = 3;
  cfg.epochs = 50;
  std::vector<double> alpha;
  std::vector<Matrix<double>> omega;
  std::size_t checks = 0;
  SearchObserver<double> obs = [&](std::size_t, SearchPhase phase, const SuperNet<double>& net) {
    switch (phase) {
      case SearchPhase::kBeforeOmega:
        alpha = net.alpha();
        break;
      case SearchPhase::kAfterOmega:
        EXPECT_EQ(net.alpha(), alpha);
        ++checks;
        break;
      case SearchPhase::kBeforeAlpha:
        omega = snapshot(net);
        break;
      case SearchPhase::kAfterAlpha:
        EXPECT_EQ(snapshot(net), omega);
        ++checks;
        break;
    }
  };
  train_supernet<double>(toy.feats, toy.sup(), cfg, 9, obs);
  EXPECT_EQ(checks, 100u);
}

TEST(Search, UnsampledAlphaStaysAtInit) {
  auto toy = make_toy(12, 30, 5);
  SearchConfig cfg;
  cfg.hidden = 4;
  cfg.sample_size = 2;
  cfg.epochs = 3;
  const auto r = train_supernet<float>(toy.feats, toy.sup(), cfg, 1);
  std::size_t unsampled = 0;
  for (std::size_t k = 0; k < 12; ++k) {
    if (r.sample_counts[k] == 0) {
      ++unsampled;
      EXPECT_EQ(r.scores[k].alpha, 0.0);
    } else {
      EXPECT_NE(r.scores[k].alpha, 0.0);
    }
  }
  EXPECT_GE(unsampled, 6u);
}

TEST(Search, SameSeedSameReport) {
  auto toy = make_toy(6, 30, 6);
  SearchConfig cfg;
  cfg.hidden = 8;
  cfg.sample_size = 3;
  cfg.epochs = 10;
  const auto a = train_supernet<float>(toy.feats, toy.sup(), cfg, 2);
  const auto b = train_supernet<float>(toy.feats, toy.sup(), cfg, 2);
  EXPECT_EQ(a.to_tsv(), b.to_tsv());
  EXPECT_EQ(a.trace_csv(), b.trace_csv());
  EXPECT_NE(a.to_tsv(), train_supernet<float>(toy.feats, toy.sup(), cfg, 3).to_tsv());
}

TEST(Search, EmptySplitIsDataError) {
  auto toy = make_toy(3, 6, 7);
  for (auto& s : toy.splits) s = Split::kTrain;
  EXPECT_THROW(train_supernet<float>(toy.feats, toy.sup(), SearchConfig{}, 1), DataError);
}

SearchReport report_with(const std::vector<std::string>& names, const std::vector<double>& alpha, double val = 0.0) {
  SearchReport r;
  r.scores = score_paths(names, alpha);
  r.val_metric = val;
  return r;
}

TEST(DeriveTopM, OrdersByAlphaThenName) {
  const auto r = report_with({"AP", "APA", "APV"}, {3.0, 1.0, 2.0});
  EXPECT_EQ(derive_top_m(r, 2), (std::vector<std::string>{"AP", "APV"}));
  EXPECT_EQ(derive_top_m(r, 10).size(), 3u);
  const auto tie = report_with({"APV", "AP", "APT"}, {1.0, 1.0, 1.0});
  EXPECT_EQ(derive_top_m(tie, 3), (std::vector<std::string>{"AP", "APT", "APV"}));
  EXPECT_EQ(tie.scores[1].rank, 1u);
}

TEST(SelectBestReport, HighestValidationMetricEarliestOnTies) {
  std::vector<SearchReport> rs{report_with({"A"}, {0}, 0.5), report_with({"A"}, {0}, 0.9),
                               report_with({"A"}, {0}, 0.7)};
  EXPECT_EQ(select_best_report(rs), 1u);
  rs[2].val_metric = 0.9;
  EXPECT_EQ(select_best_report(rs), 1u);
}

TEST(MultiSeed, SingleSeedIsChosen) {
  auto toy = make_toy(4, 24, 8);
  SearchConfig cfg;
  cfg.hidden = 4;
  cfg.sample_size = 2;
  cfg.epochs = 2;
  const auto r = multi_seed_search<float>(toy.feats, toy.sup(), cfg, {11});
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  EXPECT_EQ(r.chosen().seed, 11u);
  EXPECT_THROW(multi_seed_search<float>(toy.feats, toy.sup(), cfg, {}), UsageError);
}

TEST(ScorePaths, StrengthsSumToOneAndIgnoreShift) {
  const std::vector<std::string> names{"a", "b", "c", "d"};
  const std::vector<double> alpha{0.2, -1.0, 0.7, 0.0};
  const auto s = score_paths(names, alpha);
  double sum = 0.0;
  for (const auto& p : s) sum += p.strength;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  std::vector<double> shifted = alpha;
  for (auto& a : shifted) a += 5.0;
  const auto t = score_paths(names, shifted);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(s[i].strength, t[i].strength, 1e-15);
    EXPECT_EQ(s[i].rank, t[i].rank);
  }
  EXPECT_EQ(s[2].rank, 1u);
  EXPECT_EQ(s[1].rank, 4u);
}

TEST(SearchReport, TsvInRankOrder) {
  const auto r = report_with({"x", "y"}, {-0.5, 0.5});
  EXPECT_EQ(r.to_tsv().substr(0, 2), "y\t");
}

}  // namespace
}  // namespace hinpath
