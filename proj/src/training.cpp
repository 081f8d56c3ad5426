#include "hinpath/training.hpp"

#include <cmath>
#include <cstdio>

namespace hinpath {

LabelView LabelView::gather(const Labels& labels, std::span<const std::uint32_t> nodes) {
  LabelView v;
  v.mode = labels.mode;
  v.num_classes = labels.num_classes;
  if (labels.mode == LabelMode::kSingle) {
    v.classes.reserve(nodes.size());
    for (auto n : nodes) v.classes.push_back(labels.classes.at(n));
  } else {
    v.multi_hot = labels.multi_hot.gather_rows(nodes);
  }
  return v;
}

template <typename Real>
Predictions predict(const Matrix<Real>& logits, LabelMode mode) {
  Predictions p;
  p.mode = mode;
  if (mode == LabelMode::kSingle) {
    p.classes.resize(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      const auto r = logits.row(i);
      std::size_t best = 0;
      for (std::size_t c = 1; c < r.size(); ++c) {
        if (r[c] > r[best]) best = c;
      }
      p.classes[i] = static_cast<std::uint32_t>(best);
    }
  } else {
    p.multi_hot = Matrix<std::uint8_t>(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.size(); ++i) p.multi_hot.data()[i] = logits.data()[i] > Real{0};
  }
  return p;
}

template <typename Real>
LossResult<Real> task_loss(const Matrix<Real>& logits, const LabelView& labels) {
  if (labels.mode == LabelMode::kSingle) return cross_entropy(logits, std::span<const std::uint32_t>(labels.classes));
  return bce_with_logits(logits, labels.multi_hot);
}

EvalResult evaluate(const Predictions& pred, const LabelView& labels) {
  const std::size_t n = labels.size();
  const std::size_t c = labels.num_classes;
  const std::size_t pn = pred.mode == LabelMode::kSingle ? pred.classes.size() : pred.multi_hot.rows();
  if (pn != n || pred.mode != labels.mode) throw DataError("evaluate: label/prediction length mismatch");

  std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0), seen(c, 0);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels.mode == LabelMode::kSingle) {
      const auto y = labels.classes[i];
      const auto p = pred.classes[i];
      if (p >= c) throw DataError("evaluate: predicted class out of range");
      ++seen[y];
      ++seen[p];
      if (p == y) {
        ++tp[y];
        ++exact;
      } else {
        ++fp[p];
        ++fn[y];
      }
    } else {
      bool all = true;
      for (std::size_t k = 0; k < c; ++k) {
        const bool y = labels.multi_hot(i, k) != 0;
        const bool p = pred.multi_hot(i, k) != 0;
        if (y || p) ++seen[k];
        if (y && p) ++tp[k];
        if (!y && p) ++fp[k];
        if (y && !p) ++fn[k];
        all = all && (y == p);
      }
      exact += all;
    }
  }

  EvalResult r;
  r.accuracy = n > 0 ? static_cast<double>(exact) / static_cast<double>(n) : 0.0;
  std::size_t tp_all = 0, fp_all = 0, fn_all = 0, counted = 0;
  double f1_sum = 0.0;
  r.precision.resize(c);
  r.recall.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    tp_all += tp[k];
    fp_all += fp[k];
    fn_all += fn[k];
    r.precision[k] = tp[k] + fp[k] > 0 ? static_cast<double>(tp[k]) / static_cast<double>(tp[k] + fp[k]) : 0.0;
    r.recall[k] = tp[k] + fn[k] > 0 ? static_cast<double>(tp[k]) / static_cast<double>(tp[k] + fn[k]) : 0.0;
    if (seen[k] == 0) continue;
    ++counted;
    const auto denom = 2 * tp[k] + fp[k] + fn[k];
    f1_sum += denom > 0 ? 2.0 * static_cast<double>(tp[k]) / static_cast<double>(denom) : 0.0;
  }
  const auto denom = 2 * tp_all + fp_all + fn_all;
  r.micro_f1 = denom > 0 ? 2.0 * static_cast<double>(tp_all) / static_cast<double>(denom) : 0.0;
  r.macro_f1 = counted > 0 ? f1_sum / static_cast<double>(counted) : 0.0;
  return r;
}

double selection_metric(const EvalResult& r, LabelMode mode) {
  return mode == LabelMode::kSingle ? r.accuracy : r.micro_f1;
}

bool EarlyStopper::update(double metric) {
  ++epochs_;
  if (best_epoch_ == 0 || metric > best_) {
    best_ = metric;
    best_epoch_ = epochs_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::vector<std::uint32_t> Supervision::indices(Split s) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f±%.4f", mean, std);
  return buf;
}

template Predictions predict<float>(const Matrix<float>&, LabelMode);
template Predictions predict<double>(const Matrix<double>&, LabelMode);
template LossResult<float> task_loss<float>(const Matrix<float>&, const LabelView&);
template LossResult<double> task_loss<double>(const Matrix<double>&, const LabelView&);

}  // namespace hinpath
