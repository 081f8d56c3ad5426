#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hinpath/aggregate.hpp"
#include "hinpath/neural.hpp"
#include "hinpath/training.hpp"

namespace hinpath {

/// Uniform size-min(M, K) subset of {0..K-1} without replacement, ascending.
std::vector<std::size_t> sample_paths(std::size_t k, std::size_t m, RngStream& rng);

struct SearchConfig {
  std::size_t sample_size = 20;  // M
  std::size_t hidden = 512;
  std::size_t epochs = 50;
  double dropout = 0.5;
  Activation activation = Activation::kRelu;
  AdamConfig omega_adam{};
  AdamConfig alpha_adam{};
};

/// Forward state of one super-net evaluation over a sampled set.
template <typename Real>
struct SuperNetPass {
  std::vector<std::size_t> sampled;
  std::vector<const Matrix<Real>*> inputs;  // caller-owned, parallel to `sampled`
  std::vector<double> weights;              // softmax of alpha restricted to `sampled`
  std::vector<Matrix<Real>> projected;
  std::vector<MlpCache<Real>> projector_caches;
  Matrix<Real> fused;
  MlpCache<Real> classifier_cache;
  Matrix<Real> logits;
};

template <typename Real>
struct SuperNetGrads {
  std::vector<MlpParams<Real>> projectors;  // parallel to pass.sampled
  MlpParams<Real> classifier;
  std::vector<double> alpha;  // parallel to pass.sampled
};

/// Candidate-path weighting network: one projector MLP per path, a softmax
/// over architecture parameters of the sampled paths, sum fusion and a
/// classifier MLP. Projectors and their optimizer state exist only for paths
/// that have been sampled.
template <typename Real>
class SuperNet {
 public:
  SuperNet(std::vector<std::size_t> in_dims, std::size_t num_classes, const SearchConfig& cfg, std::uint64_t seed);

  std::size_t num_paths() const { return in_dims_.size(); }
  const std::vector<double>& alpha() const { return alpha_; }
  std::vector<double>& alpha() { return alpha_; }
  bool has_projector(std::size_t k) const { return projectors_[k].has_value(); }
  MlpParams<Real>& projector(std::size_t k);
  MlpParams<Real>& classifier() { return classifier_; }
  const MlpParams<Real>& classifier() const { return classifier_; }

  /// `inputs[i]` holds the rows of path `sampled[i]`; must outlive the pass.
  SuperNetPass<Real> forward(std::span<const std::size_t> sampled, std::span<const Matrix<Real>* const> inputs,
                             const MlpOptions& opt, RngStream* dropout_rng);

  SuperNetGrads<Real> backward(const SuperNetPass<Real>& pass, const Matrix<Real>& dlogits, bool want_omega,
                               bool want_alpha) const;

  /// Adam on the classifier and the sampled projectors.
  void step_omega(const SuperNetPass<Real>& pass, const SuperNetGrads<Real>& g);
  /// Adam on the sampled alpha entries only.
  void step_alpha(const SuperNetPass<Real>& pass, const SuperNetGrads<Real>& g);

  /// Every network weight, in a fixed order (for snapshots).
  std::vector<const Matrix<Real>*> omega_tensors() const;
  std::size_t parameter_bytes() const;

 private:
  std::vector<std::size_t> in_dims_;
  std::size_t num_classes_;
  SearchConfig cfg_;
  RngStream init_;
  std::vector<double> alpha_;
  std::vector<std::optional<MlpParams<Real>>> projectors_;
  std::vector<std::optional<Adam<Real>>> projector_adam_;
  MlpParams<Real> classifier_;
  Adam<Real> classifier_adam_;
  EntryAdam alpha_adam_;
};

struct PathScore {
  std::string path;
  double alpha = 0.0;
  double strength = 0.0;  // softmax over all candidates
  std::size_t rank = 0;   // 1 = strongest
};

struct EpochTrace {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct SearchReport {
  std::uint64_t seed = 0;
  std::vector<PathScore> scores;  // candidate order
  std::vector<EpochTrace> trace;
  std::vector<std::size_t> sample_counts;
  double val_metric = 0.0;
  std::vector<double> epoch_seconds;

  std::string to_tsv() const;   // rank order: <path>\t<alpha>\t<strength>\t<rank>
  std::string trace_csv() const;
};

/// Fills strengths and ranks from alphas; ties rank by path string.
std::vector<PathScore> score_paths(const std::vector<std::string>& names, const std::vector<double>& alpha);

enum class SearchPhase { kBeforeOmega, kAfterOmega, kBeforeAlpha, kAfterAlpha };

template <typename Real>
using SearchObserver = std::function<void(std::size_t epoch, SearchPhase, const SuperNet<Real>&)>;

/// Alternating first-order bilevel optimization: per epoch, one sampled set,
/// one weight step on the training loss with alpha frozen, then one alpha step
/// on the validation loss with weights frozen.
template <typename Real>
SearchReport train_supernet(const PathFeatureSet& feats, const Supervision& sup, const SearchConfig& cfg,
                            std::uint64_t seed, const SearchObserver<Real>& observer = {});

/// The `m` paths with largest alpha, strongest first; ties by path string.
std::vector<std::string> derive_top_m(const SearchReport& report, std::size_t m);

struct MultiSeedResult {
  std::vector<SearchReport> reports;
  std::size_t best = 0;
  const SearchReport& chosen() const { return reports[best]; }
};

/// Index of the report with the highest validation metric; earliest wins ties.
std::size_t select_best_report(const std::vector<SearchReport>& reports);

template <typename Real>
MultiSeedResult multi_seed_search(const PathFeatureSet& feats, const Supervision& sup, const SearchConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds);

}  // namespace hinpath
