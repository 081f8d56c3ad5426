#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hinpath/matrix.hpp"
#include "hinpath/rng.hpp"

namespace hinpath {

enum class Activation { kRelu, kIdentity };

/// Uniform in +-sqrt(6 / (rows + cols)).
template <typename Real>
Matrix<Real> xavier_init(std::size_t rows, std::size_t cols, RngStream& rng);

/// Two-layer perceptron: act(x w1 + b1) -> dropout -> w2 + b2.
template <typename Real>
struct MlpParams {
  Matrix<Real> w1;  // in x hidden
  Matrix<Real> b1;  // 1 x hidden
  Matrix<Real> w2;  // hidden x out
  Matrix<Real> b2;  // 1 x out

  static MlpParams xavier(std::size_t in, std::size_t hidden, std::size_t out, RngStream& rng);
  static MlpParams zeros(std::size_t in, std::size_t hidden, std::size_t out);

  std::size_t in_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t out_dim() const { return w2.cols(); }

  std::vector<Matrix<Real>*> tensors() { return {&w1, &b1, &w2, &b2}; }
  std::vector<const Matrix<Real>*> tensors() const { return {&w1, &b1, &w2, &b2}; }

  bool operator==(const MlpParams&) const = default;
};

struct MlpOptions {
  Activation activation = Activation::kRelu;
  double dropout = 0.0;
  bool train = false;
};

/// Forward intermediates for one call.
template <typename Real>
struct MlpCache {
  Matrix<Real> pre_activation;  // x w1 + b1
  Matrix<Real> hidden;          // after activation and dropout
  Matrix<Real> dropout_scale;   // empty when dropout is off
  Activation activation = Activation::kRelu;
};

template <typename Real>
Matrix<Real> mlp_forward(const MlpParams<Real>& p, const Matrix<Real>& x, const MlpOptions& opt, RngStream* dropout_rng,
                         MlpCache<Real>* cache = nullptr);

/// Writes parameter gradients into `grads` (overwriting) and, when `dx` is
/// non-null, the gradient with respect to the input. `x` is the input of the
/// forward call that filled `cache`.
template <typename Real>
void mlp_backward(const MlpParams<Real>& p, const Matrix<Real>& x, const MlpCache<Real>& cache, const Matrix<Real>& dy,
                  MlpParams<Real>& grads, Matrix<Real>* dx);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Adam with bias correction over a fixed list of tensors. Moment buffers are
/// created on the first step.
template <typename Real>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Throws NumericError, leaving parameters untouched, if any gradient is non-finite.
  void step(const std::vector<Matrix<Real>*>& params, const std::vector<const Matrix<Real>*>& grads);

  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  std::size_t state_bytes() const;

 private:
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<Matrix<Real>> m_;
  std::vector<Matrix<Real>> v_;
};

/// Adam over a vector where only some entries get a gradient per step. Each
/// entry keeps its own step count for bias correction.
class EntryAdam {
 public:
  EntryAdam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0), t_(n, 0) {}

  void step(std::vector<double>& values, std::span<const std::size_t> idx, std::span<const double> grads);
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<std::uint64_t> t_;
};

template <typename Real>
struct LossResult {
  double loss = 0.0;
  Matrix<Real> grad;  // d loss / d logits
};

/// Mean softmax cross-entropy over rows.
template <typename Real>
LossResult<Real> cross_entropy(const Matrix<Real>& logits, std::span<const std::uint32_t> classes);

/// Mean binary cross-entropy over all entries, computed in logit space.
template <typename Real>
LossResult<Real> bce_with_logits(const Matrix<Real>& logits, const Matrix<std::uint8_t>& targets);

std::vector<double> softmax(std::span<const double> x);

// HINP checkpoint: "HINP", u32 tensor count, then per tensor u32 name length,
// name bytes, u32 rows, u32 cols; then every tensor's f32 data in order.
using NamedTensor = std::pair<std::string, Matrix<float>>;
std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(std::string_view bytes, const std::string& source);

template <typename Real>
void append_tensors(std::vector<NamedTensor>& out, const std::string& prefix, const MlpParams<Real>& p);
template <typename Real>
MlpParams<Real> mlp_from_tensors(const std::vector<NamedTensor>& in, const std::string& prefix);

}  // namespace hinpath
