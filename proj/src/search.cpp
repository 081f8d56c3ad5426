#include "hinpath/search.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "hinpath/io.hpp"

namespace hinpath {

std::vector<std::size_t> sample_paths(std::size_t k, std::size_t m, RngStream& rng) {
  if (m < 1) throw UsageError("sample size M must be at least 1");
  m = std::min(m, k);
  std::vector<std::size_t> pool(k);
  std::iota(pool.begin(), pool.end(), 0);
  // Partial Fisher-Yates: the first m slots are a uniform m-subset.
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + rng.uniform_below(k - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

template <typename Real>
SuperNet<Real>::SuperNet(std::vector<std::size_t> in_dims, std::size_t num_classes, const SearchConfig& cfg,
                         std::uint64_t seed)
    : in_dims_(std::move(in_dims)),
      num_classes_(num_classes),
      cfg_(cfg),
      init_(seed, RngPurpose::kInit),
      alpha_(in_dims_.size(), 0.0),
      projectors_(in_dims_.size()),
      projector_adam_(in_dims_.size()),
      classifier_adam_(cfg.omega_adam),
      alpha_adam_(in_dims_.size(), cfg.alpha_adam) {
  auto rng = init_.substream("classifier");
  classifier_ = MlpParams<Real>::xavier(cfg_.hidden, cfg_.hidden, num_classes_, rng);
}

template <typename Real>
MlpParams<Real>& SuperNet<Real>::projector(std::size_t k) {
  if (!projectors_[k]) {
    // Keyed by path index, so initial weights do not depend on sampling order.
    auto rng = init_.substream(k);
    projectors_[k] = MlpParams<Real>::xavier(in_dims_[k], cfg_.hidden, cfg_.hidden, rng);
  }
  return *projectors_[k];
}

template <typename Real>
SuperNetPass<Real> SuperNet<Real>::forward(std::span<const std::size_t> sampled,
                                           std::span<const Matrix<Real>* const> inputs, const MlpOptions& opt,
                                           RngStream* dropout_rng) {
  if (sampled.empty()) throw UsageError("super-net forward needs at least one sampled path");
  require_shape(sampled.size() == inputs.size(), "super-net inputs per sampled path");
  SuperNetPass<Real> pass;
  pass.sampled.assign(sampled.begin(), sampled.end());
  pass.inputs.assign(inputs.begin(), inputs.end());

  std::vector<double> a;
  a.reserve(sampled.size());
  for (auto k : sampled) a.push_back(alpha_[k]);
  pass.weights = softmax(a);

  const std::size_t rows = inputs.front()->rows();
  pass.fused = Matrix<Real>(rows, cfg_.hidden);
  pass.projected.resize(sampled.size());
  pass.projector_caches.resize(sampled.size());
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    require_shape(inputs[i]->rows() == rows, "super-net input rows");
    pass.projected[i] = mlp_forward(projector(sampled[i]), *inputs[i], opt, dropout_rng, &pass.projector_caches[i]);
    const auto w = static_cast<Real>(pass.weights[i]);
    Real* f = pass.fused.data();
    const Real* p = pass.projected[i].data();
    for (std::size_t j = 0; j < pass.fused.size(); ++j) f[j] += w * p[j];
  }
  pass.logits = mlp_forward(classifier_, pass.fused, opt, dropout_rng, &pass.classifier_cache);
  return pass;
}

template <typename Real>
SuperNetGrads<Real> SuperNet<Real>::backward(const SuperNetPass<Real>& pass, const Matrix<Real>& dlogits,
                                             bool want_omega, bool want_alpha) const {
  SuperNetGrads<Real> g;
  Matrix<Real> dfused;
  mlp_backward(classifier_, pass.fused, pass.classifier_cache, dlogits, g.classifier, &dfused);

  const std::size_t s = pass.sampled.size();
  if (want_alpha) {
    // d loss / d w_i = <dfused, projected_i>; softmax Jacobian maps it to alpha.
    std::vector<double> dw(s, 0.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      const Real* d = dfused.data();
      const Real* p = pass.projected[i].data();
      double acc = 0.0;
      for (std::size_t j = 0; j < dfused.size(); ++j) acc += static_cast<double>(d[j]) * static_cast<double>(p[j]);
      dw[i] = acc;
      mean += pass.weights[i] * acc;
    }
    g.alpha.resize(s);
    for (std::size_t i = 0; i < s; ++i) g.alpha[i] = pass.weights[i] * (dw[i] - mean);
  }
  if (want_omega) {
    g.projectors.resize(s);
    Matrix<Real> dp(dfused.rows(), dfused.cols());
    for (std::size_t i = 0; i < s; ++i) {
      const auto w = static_cast<Real>(pass.weights[i]);
      for (std::size_t j = 0; j < dfused.size(); ++j) dp.data()[j] = w * dfused.data()[j];
      mlp_backward(*projectors_[pass.sampled[i]], *pass.inputs[i], pass.projector_caches[i], dp, g.projectors[i],
                   static_cast<Matrix<Real>*>(nullptr));
    }
  }
  return g;
}

template <typename Real>
void SuperNet<Real>::step_omega(const SuperNetPass<Real>& pass, const SuperNetGrads<Real>& g) {
  require_shape(g.projectors.size() == pass.sampled.size(), "omega gradients per sampled path");
  classifier_adam_.step(classifier_.tensors(), g.classifier.tensors());
  for (std::size_t i = 0; i < pass.sampled.size(); ++i) {
    const auto k = pass.sampled[i];
    if (!projector_adam_[k]) projector_adam_[k].emplace(cfg_.omega_adam);
    projector_adam_[k]->step(projectors_[k]->tensors(), g.projectors[i].tensors());
  }
}

template <typename Real>
void SuperNet<Real>::step_alpha(const SuperNetPass<Real>& pass, const SuperNetGrads<Real>& g) {
  alpha_adam_.step(alpha_, pass.sampled, g.alpha);
}

template <typename Real>
std::vector<const Matrix<Real>*> SuperNet<Real>::omega_tensors() const {
  std::vector<const Matrix<Real>*> out = classifier_.tensors();
  for (const auto& p : projectors_) {
    if (!p) continue;
    for (const auto* t : p->tensors()) out.push_back(t);
  }
  return out;
}

template <typename Real>
std::size_t SuperNet<Real>::parameter_bytes() const {
  std::size_t n = 0;
  for (const auto* t : omega_tensors()) n += t->size() * sizeof(Real);
  return n + alpha_.size() * sizeof(double);
}

// ---------------------------------------------------------------------------
// Reports

std::vector<PathScore> score_paths(const std::vector<std::string>& names, const std::vector<double>& alpha) {
  require_shape(names.size() == alpha.size(), "path names per alpha");
  const auto strength = softmax(alpha);
  std::vector<PathScore> out(names.size());
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (alpha[a] != alpha[b]) return alpha[a] > alpha[b];
    return names[a] < names[b];
  });
  for (std::size_t i = 0; i < names.size(); ++i) out[i] = {names[i], alpha[i], strength[i], 0};
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]].rank = r + 1;
  return out;
}

std::string SearchReport::to_tsv() const {
  std::vector<const PathScore*> ranked;
  for (const auto& s : scores) ranked.push_back(&s);
  std::sort(ranked.begin(), ranked.end(), [](const PathScore* a, const PathScore* b) { return a->rank < b->rank; });
  std::string out;
  for (const auto* s : ranked) {
    out += s->path + "\t" + io::format_double(s->alpha) + "\t" + io::format_double(s->strength) + "\t" +
           std::to_string(s->rank) + "\n";
  }
  return out;
}

std::string SearchReport::trace_csv() const {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const auto& t : trace) {
    out += std::to_string(t.epoch) + "," + io::format_double(t.train_loss) + "," + io::format_double(t.val_loss) + "\n";
  }
  return out;
}

std::vector<std::string> derive_top_m(const SearchReport& report, std::size_t m) {
  std::vector<const PathScore*> ranked;
  for (const auto& s : report.scores) ranked.push_back(&s);
  std::sort(ranked.begin(), ranked.end(), [](const PathScore* a, const PathScore* b) {
    if (a->alpha != b->alpha) return a->alpha > b->alpha;
    return a->path < b->path;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(m, ranked.size()); ++i) out.push_back(ranked[i]->path);
  return out;
}

std::size_t select_best_report(const std::vector<SearchReport>& reports) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].val_metric > reports[best].val_metric) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Training

template <typename Real>
SearchReport train_supernet(const PathFeatureSet& feats, const Supervision& sup, const SearchConfig& cfg,
                            std::uint64_t seed, const SearchObserver<Real>& observer) {
  const std::size_t k = feats.size();
  if (k == 0) throw UsageError("search needs at least one candidate path");
  const auto train_nodes = sup.indices(Split::kTrain);
  const auto val_nodes = sup.indices(Split::kVal);
  if (train_nodes.empty() || val_nodes.empty()) throw DataError("search needs nonempty train and val splits");

  std::vector<std::size_t> in_dims;
  for (const auto& m : feats.matrices) in_dims.push_back(m.cols());
  SuperNet<Real> net(in_dims, sup.labels.num_classes, cfg, seed);

  SplitInputs<Real> train_in(feats, train_nodes);
  SplitInputs<Real> val_in(feats, val_nodes);
  const auto train_labels = LabelView::gather(sup.labels, train_nodes);
  const auto val_labels = LabelView::gather(sup.labels, val_nodes);

  RngStream sample_rng(seed, RngPurpose::kSample);
  RngStream dropout_rng(seed, RngPurpose::kDropout);
  const MlpOptions train_opt{cfg.activation, cfg.dropout, true};
  const MlpOptions eval_opt{cfg.activation, 0.0, false};
  auto notify = [&](std::size_t epoch, SearchPhase phase) {
    if (observer) observer(epoch, phase, net);
  };

  SearchReport report;
  report.seed = seed;
  report.sample_counts.assign(k, 0);
  std::vector<std::size_t> sampled;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    sampled = sample_paths(k, cfg.sample_size, sample_rng);
    for (auto s : sampled) ++report.sample_counts[s];

    std::vector<const Matrix<Real>*> inputs;
    for (auto s : sampled) inputs.push_back(&train_in.get(s));
    notify(epoch, SearchPhase::kBeforeOmega);
    EpochTrace trace{epoch, 0.0, 0.0};
    try {
      auto pass = net.forward(sampled, inputs, train_opt, &dropout_rng);
      const auto loss = task_loss(pass.logits, train_labels);
      auto grads = net.backward(pass, loss.grad, true, false);
      net.step_omega(pass, grads);
      trace.train_loss = loss.loss;
      notify(epoch, SearchPhase::kAfterOmega);

      inputs.clear();
      for (auto s : sampled) inputs.push_back(&val_in.get(s));
      notify(epoch, SearchPhase::kBeforeAlpha);
      auto vpass = net.forward(sampled, inputs, eval_opt, nullptr);
      const auto vloss = task_loss(vpass.logits, val_labels);
      auto vgrads = net.backward(vpass, vloss.grad, false, true);
      net.step_alpha(vpass, vgrads);
      trace.val_loss = vloss.loss;
      notify(epoch, SearchPhase::kAfterAlpha);
    } catch (const NumericError& e) {
      throw NumericError("search seed " + std::to_string(seed) + " epoch " + std::to_string(epoch) + ": " + e.what());
    }
    report.trace.push_back(trace);
    report.epoch_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }

  if (!sampled.empty()) {
    std::vector<const Matrix<Real>*> inputs;
    for (auto s : sampled) inputs.push_back(&val_in.get(s));
    const auto pass = net.forward(sampled, inputs, eval_opt, nullptr);
    report.val_metric = selection_metric(evaluate(predict(pass.logits, sup.labels.mode), val_labels), sup.labels.mode);
  }
  report.scores = score_paths(feats.names, net.alpha());
  return report;
}

template <typename Real>
MultiSeedResult multi_seed_search(const PathFeatureSet& feats, const Supervision& sup, const SearchConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw UsageError("multi-seed search needs at least one seed");
  MultiSeedResult out;
  for (auto seed : seeds) out.reports.push_back(train_supernet<Real>(feats, sup, cfg, seed));
  out.best = select_best_report(out.reports);
  return out;
}

template class SuperNet<float>;
template class SuperNet<double>;
template SearchReport train_supernet<float>(const PathFeatureSet&, const Supervision&, const SearchConfig&,
                                            std::uint64_t, const SearchObserver<float>&);
template SearchReport train_supernet<double>(const PathFeatureSet&, const Supervision&, const SearchConfig&,
                                             std::uint64_t, const SearchObserver<double>&);
template MultiSeedResult multi_seed_search<float>(const PathFeatureSet&, const Supervision&, const SearchConfig&,
                                                  const std::vector<std::uint64_t>&);
template MultiSeedResult multi_seed_search<double>(const PathFeatureSet&, const Supervision&, const SearchConfig&,
                                                   const std::vector<std::uint64_t>&);

}  // namespace hinpath
