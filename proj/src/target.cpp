#include "hinpath/target.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "hinpath/io.hpp"

namespace hinpath {

template <typename Real>
TargetNet<Real>::TargetNet(const std::vector<std::size_t>& in_dims, std::size_t num_classes, std::size_t hidden,
                           std::uint64_t seed, AdamConfig adam)
    : adam_cfg_(adam), projector_adam_(in_dims.size(), Adam<Real>(adam)), classifier_adam_(adam) {
  if (in_dims.empty()) throw UsageError("target net needs at least one path");
  RngStream init(seed, RngPurpose::kInit);
  for (std::size_t i = 0; i < in_dims.size(); ++i) {
    auto rng = init.substream(i);
    projectors_.push_back(MlpParams<Real>::xavier(in_dims[i], hidden, hidden, rng));
  }
  auto rng = init.substream("classifier");
  classifier_ = MlpParams<Real>::xavier(in_dims.size() * hidden, hidden, num_classes, rng);
}

template <typename Real>
TargetNet<Real>::TargetNet(std::vector<MlpParams<Real>> projectors, MlpParams<Real> classifier, AdamConfig adam)
    : projectors_(std::move(projectors)),
      classifier_(std::move(classifier)),
      adam_cfg_(adam),
      projector_adam_(projectors_.size(), Adam<Real>(adam)),
      classifier_adam_(adam) {
  if (projectors_.empty()) throw UsageError("target net needs at least one path");
  std::size_t width = 0;
  for (const auto& p : projectors_) width += p.out_dim();
  if (width != classifier_.in_dim()) throw DataError("target net: classifier input does not match projector widths");
}

template <typename Real>
Matrix<Real> TargetNet<Real>::forward(std::span<const Matrix<Real>* const> inputs, const MlpOptions& opt,
                                      RngStream* dropout_rng, TargetPass<Real>* pass) const {
  require_shape(inputs.size() == projectors_.size(), "target net inputs per path");
  TargetPass<Real> local;
  TargetPass<Real>& p = pass ? *pass : local;
  p.inputs.assign(inputs.begin(), inputs.end());
  p.projected.resize(inputs.size());
  p.projector_caches.resize(inputs.size());

  const std::size_t rows = inputs.front()->rows();
  p.concat = Matrix<Real>(rows, classifier_.in_dim());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    require_shape(inputs[i]->rows() == rows, "target net input rows");
    p.projected[i] = mlp_forward(projectors_[i], *inputs[i], opt, dropout_rng, &p.projector_caches[i]);
    const auto& h = p.projected[i];
    for (std::size_t r = 0; r < rows; ++r) {
      const auto src = h.row(r);
      auto dst = p.concat.row(r);
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += h.cols();
  }
  p.logits = mlp_forward(classifier_, p.concat, opt, dropout_rng, &p.classifier_cache);
  return p.logits;
}

template <typename Real>
TargetGrads<Real> TargetNet<Real>::backward(const TargetPass<Real>& pass, const Matrix<Real>& dlogits) const {
  TargetGrads<Real> g;
  Matrix<Real> dconcat;
  mlp_backward(classifier_, pass.concat, pass.classifier_cache, dlogits, g.classifier, &dconcat);
  g.projectors.resize(projectors_.size());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < projectors_.size(); ++i) {
    const std::size_t w = projectors_[i].out_dim();
    Matrix<Real> dp(dconcat.rows(), w);
    for (std::size_t r = 0; r < dconcat.rows(); ++r) {
      const auto src = dconcat.row(r);
      std::copy(src.begin() + static_cast<std::ptrdiff_t>(offset),
                src.begin() + static_cast<std::ptrdiff_t>(offset + w), dp.row(r).begin());
    }
    mlp_backward(projectors_[i], *pass.inputs[i], pass.projector_caches[i], dp, g.projectors[i],
                 static_cast<Matrix<Real>*>(nullptr));
    offset += w;
  }
  return g;
}

template <typename Real>
void TargetNet<Real>::step(const TargetGrads<Real>& g) {
  require_shape(g.projectors.size() == projectors_.size(), "target gradients per path");
  // Validate everything first so a non-finite gradient leaves all parameters untouched.
  for (const auto* t : g.classifier.tensors()) {
    if (!t->all_finite()) throw NumericError("non-finite gradient");
  }
  for (const auto& p : g.projectors) {
    for (const auto* t : p.tensors()) {
      if (!t->all_finite()) throw NumericError("non-finite gradient");
    }
  }
  classifier_adam_.step(classifier_.tensors(), g.classifier.tensors());
  for (std::size_t i = 0; i < projectors_.size(); ++i) {
    projector_adam_[i].step(projectors_[i].tensors(), g.projectors[i].tensors());
  }
}

template <typename Real>
std::vector<NamedTensor> TargetNet<Real>::checkpoint() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < projectors_.size(); ++i) append_tensors(out, "path" + std::to_string(i), projectors_[i]);
  append_tensors(out, "classifier", classifier_);
  return out;
}

template <typename Real>
TargetNet<Real> TargetNet<Real>::from_checkpoint(const std::vector<NamedTensor>& tensors, AdamConfig adam) {
  std::set<std::size_t> ids;
  for (const auto& [name, m] : tensors) {
    if (name.rfind("path", 0) != 0) continue;
    const auto dot = name.find('.');
    ids.insert(std::stoul(name.substr(4, dot - 4)));
  }
  std::vector<MlpParams<Real>> projectors;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    projectors.push_back(mlp_from_tensors<Real>(tensors, "path" + std::to_string(i)));
  }
  return TargetNet(std::move(projectors), mlp_from_tensors<Real>(tensors, "classifier"), adam);
}

template <typename Real>
std::size_t TargetNet<Real>::parameter_bytes() const {
  std::size_t n = 0;
  for (const auto& p : projectors_) {
    for (const auto* t : p.tensors()) n += t->size();
  }
  for (const auto* t : classifier_.tensors()) n += t->size();
  return n * sizeof(Real);
}

namespace {

template <typename Real>
std::vector<const Matrix<Real>*> all_inputs(SplitInputs<Real>& in, std::size_t k) {
  std::vector<const Matrix<Real>*> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(&in.get(i));
  return out;
}

}  // namespace

template <typename Real>
EvalResult evaluate_target(const TargetNet<Real>& net, const PathFeatureSet& feats, const Supervision& sup, Split split,
                           Activation act) {
  const auto nodes = sup.indices(split);
  SplitInputs<Real> in(feats, nodes);
  const auto inputs = all_inputs(in, feats.size());
  const auto logits = net.forward(inputs, MlpOptions{act, 0.0, false}, nullptr);
  auto r = evaluate(predict(logits, sup.labels.mode), LabelView::gather(sup.labels, nodes));
  r.split = split == Split::kTrain ? "train" : split == Split::kVal ? "val" : "test";
  return r;
}

template <typename Real>
TargetRun train_target(const PathFeatureSet& feats, const Supervision& sup, const TargetConfig& cfg,
                       std::uint64_t seed) {
  if (feats.size() == 0) throw UsageError("target training needs at least one path");
  const auto train_nodes = sup.indices(Split::kTrain);
  const auto val_nodes = sup.indices(Split::kVal);
  if (train_nodes.empty() || val_nodes.empty()) throw DataError("target training needs nonempty train and val splits");

  std::vector<std::size_t> in_dims;
  for (const auto& m : feats.matrices) in_dims.push_back(m.cols());
  TargetNet<Real> net(in_dims, sup.labels.num_classes, cfg.hidden, seed, cfg.adam);

  SplitInputs<Real> train_in(feats, train_nodes);
  SplitInputs<Real> val_in(feats, val_nodes);
  const auto train_x = all_inputs(train_in, feats.size());
  const auto val_x = all_inputs(val_in, feats.size());
  const auto train_labels = LabelView::gather(sup.labels, train_nodes);
  const auto val_labels = LabelView::gather(sup.labels, val_nodes);

  RngStream dropout_rng(seed, RngPurpose::kDropout);
  RngStream batch_rng = RngStream(seed, RngPurpose::kSample).substream("batches");
  const MlpOptions train_opt{cfg.activation, cfg.dropout, true};
  const MlpOptions eval_opt{cfg.activation, 0.0, false};
  const std::size_t n_train = train_nodes.size();
  const std::size_t batch = cfg.batch_size == 0 ? n_train : std::min(cfg.batch_size, n_train);
  std::vector<std::uint32_t> order(n_train);
  for (std::uint32_t i = 0; i < n_train; ++i) order[i] = i;

  TargetRun run;
  run.paths = feats.names;
  EarlyStopper stopper(cfg.patience);
  std::optional<TargetNet<Real>> best;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double train_loss = 0.0;
    try {
      if (batch == n_train) {
        TargetPass<Real> pass;
        net.forward(train_x, train_opt, &dropout_rng, &pass);
        const auto loss = task_loss(pass.logits, train_labels);
        net.step(net.backward(pass, loss.grad));
        train_loss = loss.loss;
      } else {
        for (std::size_t i = n_train; i > 1; --i) std::swap(order[i - 1], order[batch_rng.uniform_below(i)]);
        for (std::size_t start = 0; start < n_train; start += batch) {
          const std::span<const std::uint32_t> pos(order.data() + start, std::min(batch, n_train - start));
          std::vector<Matrix<Real>> xb;
          std::vector<const Matrix<Real>*> xp;
          for (const auto* x : train_x) xb.push_back(x->gather_rows(pos));
          for (const auto& x : xb) xp.push_back(&x);
          std::vector<std::uint32_t> nodes;
          for (auto p : pos) nodes.push_back(train_nodes[p]);
          TargetPass<Real> pass;
          net.forward(xp, train_opt, &dropout_rng, &pass);
          const auto loss = task_loss(pass.logits, LabelView::gather(sup.labels, nodes));
          net.step(net.backward(pass, loss.grad));
          train_loss += loss.loss * static_cast<double>(pos.size()) / static_cast<double>(n_train);
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("target epoch " + std::to_string(epoch) + ": " + e.what());
    }
    const auto val_logits = net.forward(val_x, eval_opt, nullptr);
    const double metric = selection_metric(evaluate(predict(val_logits, sup.labels.mode), val_labels), sup.labels.mode);
    if (stopper.update(metric)) best = net;
    run.trace.push_back({epoch, train_loss, metric});
    run.epoch_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    run.epochs_run = epoch;
    if (!cfg.fixed_epochs && stopper.should_stop()) break;
  }

  run.best_epoch = stopper.best_epoch();
  if (best) {
    run.val = evaluate_target(*best, feats, sup, Split::kVal, cfg.activation);
    run.test = evaluate_target(*best, feats, sup, Split::kTest, cfg.activation);
    run.best_checkpoint = best->checkpoint();
  }
  return run;
}

AblationMode AblationMode::parse(std::string_view text) {
  AblationMode m;
  if (text == "all") return m;
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw UsageError("ablation mode must be all, drop:<paths> or keep:<paths>");
  const auto kind = text.substr(0, colon);
  if (kind == "drop") {
    m.kind = Kind::kDrop;
  } else if (kind == "keep") {
    m.kind = Kind::kKeep;
  } else {
    throw UsageError("unknown ablation mode '" + std::string(kind) + "'");
  }
  for (auto& p : io::split(text.substr(colon + 1), ',')) {
    auto t = std::string(io::trim(p));
    if (!t.empty()) m.paths.push_back(t);
  }
  if (m.kind == Kind::kKeep && m.paths.empty()) throw UsageError("keep: needs at least one path");
  return m;
}

std::string AblationMode::label() const {
  std::string out = kind == Kind::kDrop ? "drop:" : "keep:";
  for (std::size_t i = 0; i < paths.size(); ++i) out += (i ? "," : "") + paths[i];
  return out;
}

std::vector<std::string> AblationMode::apply(const std::vector<std::string>& candidates) const {
  const std::set<std::string> known(candidates.begin(), candidates.end());
  for (const auto& p : paths) {
    if (!known.count(p)) throw DataError("unknown path '" + p + "'");
  }
  const std::set<std::string> named(paths.begin(), paths.end());
  std::vector<std::string> out;
  for (const auto& c : candidates) {
    if ((kind == Kind::kKeep) == (named.count(c) > 0)) out.push_back(c);
  }
  if (out.empty()) throw UsageError("ablation leaves no paths");
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

template <typename Real>
AblationRow ablate_run(const PathFeatureSet& feats, const Supervision& sup, const AblationMode& mode,
                       const TargetConfig& cfg, std::size_t repeats, std::uint64_t base_seed) {
  if (repeats < 1) throw UsageError("ablation needs at least one repeat");
  AblationRow row;
  row.mode = mode.label();
  row.paths = mode.apply(feats.names);
  const auto subset = feats.select(row.paths);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto run = train_target<Real>(subset, sup, cfg, base_seed + r);
    row.accuracy.push_back(run.test.accuracy);
    row.macro_f1.push_back(run.test.macro_f1);
    row.micro_f1.push_back(run.test.micro_f1);
  }
  return row;
}

std::string ablation_tsv(const std::vector<AblationRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    std::string paths;
    for (std::size_t i = 0; i < r.paths.size(); ++i) paths += (i ? "," : "") + r.paths[i];
    const auto [ma, sa] = mean_std(r.macro_f1);
    const auto [mi, si] = mean_std(r.micro_f1);
    out += r.mode + "\t" + paths + "\t" + format_mean_std(ma, sa) + "\t" + format_mean_std(mi, si) + "\n";
  }
  return out;
}

#define HINPATH_INSTANTIATE(Real)                                                                                 \
  template class TargetNet<Real>;                                                                                \
  template TargetRun train_target<Real>(const PathFeatureSet&, const Supervision&, const TargetConfig&,         \
                                        std::uint64_t);                                                          \
  template EvalResult evaluate_target<Real>(const TargetNet<Real>&, const PathFeatureSet&, const Supervision&,  \
                                            Split, Activation);                                                  \
  template AblationRow ablate_run<Real>(const PathFeatureSet&, const Supervision&, const AblationMode&,         \
                                        const TargetConfig&, std::size_t, std::uint64_t);

HINPATH_INSTANTIATE(float)
HINPATH_INSTANTIATE(double)

#undef HINPATH_INSTANTIATE

}  // namespace hinpath
