#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hinpath/aggregate.hpp"
#include "hinpath/neural.hpp"
#include "hinpath/training.hpp"

namespace hinpath {

struct TargetConfig {
  std::size_t hidden = 512;
  double dropout = 0.5;
  Activation activation = Activation::kRelu;
  AdamConfig adam{};
  std::size_t patience = 30;
  std::size_t max_epochs = 500;
  bool fixed_epochs = false;  // ignore patience and run max_epochs (benchmarks)
  std::size_t batch_size = 64;  // training nodes per Adam step; 0 = full batch
};

template <typename Real>
struct TargetPass {
  std::vector<const Matrix<Real>*> inputs;  // caller-owned
  std::vector<Matrix<Real>> projected;
  std::vector<MlpCache<Real>> projector_caches;
  Matrix<Real> concat;  // rows x (paths * hidden), path-major blocks
  MlpCache<Real> classifier_cache;
  Matrix<Real> logits;
};

template <typename Real>
struct TargetGrads {
  std::vector<MlpParams<Real>> projectors;
  MlpParams<Real> classifier;
};

/// One projector per selected path, concatenation fusion in path order, then
/// a classifier over the concatenated hidden vectors.
template <typename Real>
class TargetNet {
 public:
  TargetNet(const std::vector<std::size_t>& in_dims, std::size_t num_classes, std::size_t hidden, std::uint64_t seed,
            AdamConfig adam = {});
  TargetNet(std::vector<MlpParams<Real>> projectors, MlpParams<Real> classifier, AdamConfig adam = {});

  std::size_t num_paths() const { return projectors_.size(); }
  std::size_t hidden() const { return classifier_.in_dim() / std::max<std::size_t>(1, projectors_.size()); }
  std::vector<MlpParams<Real>>& projectors() { return projectors_; }
  const std::vector<MlpParams<Real>>& projectors() const { return projectors_; }
  MlpParams<Real>& classifier() { return classifier_; }
  const MlpParams<Real>& classifier() const { return classifier_; }

  Matrix<Real> forward(std::span<const Matrix<Real>* const> inputs, const MlpOptions& opt, RngStream* dropout_rng,
                       TargetPass<Real>* pass = nullptr) const;
  TargetGrads<Real> backward(const TargetPass<Real>& pass, const Matrix<Real>& dlogits) const;
  void step(const TargetGrads<Real>& g);

  /// Names: path<i>.{w1,b1,w2,b2} and classifier.{w1,b1,w2,b2}.
  std::vector<NamedTensor> checkpoint() const;
  static TargetNet from_checkpoint(const std::vector<NamedTensor>& tensors, AdamConfig adam = {});

  std::size_t parameter_bytes() const;

 private:
  std::vector<MlpParams<Real>> projectors_;
  MlpParams<Real> classifier_;
  AdamConfig adam_cfg_;
  std::vector<Adam<Real>> projector_adam_;
  Adam<Real> classifier_adam_;
};

struct TargetEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
};

struct TargetRun {
  std::vector<std::string> paths;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  EvalResult val;   // at the best checkpoint
  EvalResult test;  // at the best checkpoint
  std::vector<TargetEpoch> trace;
  std::vector<double> epoch_seconds;
  std::vector<NamedTensor> best_checkpoint;
};

/// Mini-batch Adam on the train split (shuffled per epoch), validation after every epoch, best
/// checkpoint kept; test metrics come from that checkpoint. `feats` holds the
/// selected paths in concatenation order.
template <typename Real>
TargetRun train_target(const PathFeatureSet& feats, const Supervision& sup, const TargetConfig& cfg,
                       std::uint64_t seed);

/// Evaluates a trained net on one split.
template <typename Real>
EvalResult evaluate_target(const TargetNet<Real>& net, const PathFeatureSet& feats, const Supervision& sup, Split split,
                           Activation act = Activation::kRelu);

struct AblationMode {
  enum class Kind { kDrop, kKeep };
  Kind kind = Kind::kDrop;
  std::vector<std::string> paths;

  /// "all", "drop:<p>[,<p>...]", "drop:" (nothing) or "keep:<p>[,<p>...]".
  static AblationMode parse(std::string_view text);
  std::string label() const;
  /// Paths retained from `candidates`, in candidate order. Throws DataError on unknown names.
  std::vector<std::string> apply(const std::vector<std::string>& candidates) const;
};

struct AblationRow {
  std::string mode;
  std::vector<std::string> paths;
  std::vector<double> accuracy;
  std::vector<double> macro_f1;
  std::vector<double> micro_f1;
};

/// Mean and sample standard deviation (0 for fewer than two values).
std::pair<double, double> mean_std(const std::vector<double>& v);

/// Trains `repeats` target nets with seeds base_seed, base_seed+1, ... on the reduced path set.
template <typename Real>
AblationRow ablate_run(const PathFeatureSet& feats, const Supervision& sup, const AblationMode& mode,
                       const TargetConfig& cfg, std::size_t repeats, std::uint64_t base_seed);

/// <mode>\t<paths>\t<macro_f1 mean±std>\t<micro_f1 mean±std>
std::string ablation_tsv(const std::vector<AblationRow>& rows);

}  // namespace hinpath
