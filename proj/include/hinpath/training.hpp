#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hinpath/aggregate.hpp"
#include "hinpath/hin.hpp"
#include "hinpath/neural.hpp"

namespace hinpath {

/// Labels of one node subset, in subset order.
struct LabelView {
  LabelMode mode = LabelMode::kSingle;
  std::size_t num_classes = 0;
  std::vector<std::uint32_t> classes;
  Matrix<std::uint8_t> multi_hot;

  static LabelView gather(const Labels& labels, std::span<const std::uint32_t> nodes);
  std::size_t size() const { return mode == LabelMode::kSingle ? classes.size() : multi_hot.rows(); }
};

struct Predictions {
  LabelMode mode = LabelMode::kSingle;
  std::vector<std::uint32_t> classes;
  Matrix<std::uint8_t> multi_hot;
};

/// Argmax for single-label, logit > 0 (sigmoid > 0.5) for multi-label.
template <typename Real>
Predictions predict(const Matrix<Real>& logits, LabelMode mode);

template <typename Real>
LossResult<Real> task_loss(const Matrix<Real>& logits, const LabelView& labels);

struct EvalResult {
  double accuracy = 0.0;  // exact-match ratio for multi-label
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::string split;
};

/// Micro-F1 pools TP/FP/FN over classes; macro-F1 averages per-class F1 over
/// classes that occur in the labels or the predictions.
EvalResult evaluate(const Predictions& pred, const LabelView& labels);

/// Model-selection metric: accuracy for single-label, micro-F1 for multi-label.
double selection_metric(const EvalResult& r, LabelMode mode);

/// Stops once `patience` epochs pass without a strict improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Records one epoch's metric; returns true when it is the new best.
  bool update(double metric);
  bool should_stop() const { return epochs_ > 0 && since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based
  double best_metric() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t since_best_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = 0.0;
};

/// Labels and split assignment of the target nodes.
struct Supervision {
  const Labels& labels;
  const std::vector<Split>& splits;

  static Supervision of(const Hin& h) { return {h.labels, h.splits}; }
  std::vector<std::uint32_t> indices(Split s) const;
};

/// Rows of each path's feature matrix restricted to one split, converted to
/// the compute precision on first use.
template <typename Real>
class SplitInputs {
 public:
  SplitInputs(const PathFeatureSet& feats, std::vector<std::uint32_t> nodes) : feats_(feats), nodes_(std::move(nodes)) {}

  const Matrix<Real>& get(std::size_t path) {
    auto it = cache_.find(path);
    if (it == cache_.end()) {
      it = cache_.emplace(path, feats_.matrices.at(path).gather_rows(nodes_).template cast<Real>()).first;
    }
    return it->second;
  }
  const std::vector<std::uint32_t>& nodes() const { return nodes_; }

 private:
  const PathFeatureSet& feats_;
  std::vector<std::uint32_t> nodes_;
  std::map<std::size_t, Matrix<Real>> cache_;
};

std::string format_mean_std(double mean, double std);

}  // namespace hinpath
