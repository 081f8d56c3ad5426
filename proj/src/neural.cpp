#include "hinpath/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hinpath/kernels.hpp"

namespace hinpath {

template <typename Real>
Matrix<Real> xavier_init(std::size_t rows, std::size_t cols, RngStream& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix<Real> m(rows, cols);
  for (auto& v : m.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
  return m;
}

template <typename Real>
MlpParams<Real> MlpParams<Real>::xavier(std::size_t in, std::size_t hidden, std::size_t out, RngStream& rng) {
  MlpParams p;
  p.w1 = xavier_init<Real>(in, hidden, rng);
  p.b1 = Matrix<Real>(1, hidden);
  p.w2 = xavier_init<Real>(hidden, out, rng);
  p.b2 = Matrix<Real>(1, out);
  return p;
}

template <typename Real>
MlpParams<Real> MlpParams<Real>::zeros(std::size_t in, std::size_t hidden, std::size_t out) {
  return {Matrix<Real>(in, hidden), Matrix<Real>(1, hidden), Matrix<Real>(hidden, out), Matrix<Real>(1, out)};
}

namespace {

template <typename Real>
void add_row_bias(Matrix<Real>& m, const Matrix<Real>& b) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += b.data()[j];
  }
}

template <typename Real>
void column_sums(const Matrix<Real>& m, Matrix<Real>& out) {
  out = Matrix<Real>(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out.data()[j] += r[j];
  }
}

}  // namespace

template <typename Real>
Matrix<Real> mlp_forward(const MlpParams<Real>& p, const Matrix<Real>& x, const MlpOptions& opt, RngStream* dropout_rng,
                         MlpCache<Real>* cache) {
  require_shape(x.cols() == p.in_dim(), "mlp input columns");
  Matrix<Real> z1;
  kernels::gemm(x, p.w1, z1);
  add_row_bias(z1, p.b1);

  Matrix<Real> h = z1;
  if (opt.activation == Activation::kRelu) {
    for (auto& v : h.values()) v = v > Real{0} ? v : Real{0};
  }
  Matrix<Real> scale;
  if (opt.train && opt.dropout > 0.0) {
    if (dropout_rng == nullptr) throw NumericError("dropout requires a random stream");
    const auto keep = static_cast<Real>(1.0 / (1.0 - opt.dropout));
    scale = Matrix<Real>(h.rows(), h.cols());
    for (std::size_t i = 0; i < h.size(); ++i) {
      const Real s = dropout_rng->uniform() < opt.dropout ? Real{0} : keep;
      scale.data()[i] = s;
      h.data()[i] *= s;
    }
  }

  Matrix<Real> y;
  kernels::gemm(h, p.w2, y);
  add_row_bias(y, p.b2);

  if (cache != nullptr) {
    cache->pre_activation = std::move(z1);
    cache->hidden = std::move(h);
    cache->dropout_scale = std::move(scale);
    cache->activation = opt.activation;
  }
  return y;
}

template <typename Real>
void mlp_backward(const MlpParams<Real>& p, const Matrix<Real>& x, const MlpCache<Real>& cache, const Matrix<Real>& dy,
                  MlpParams<Real>& grads, Matrix<Real>* dx) {
  require_shape(dy.rows() == cache.hidden.rows() && dy.cols() == p.out_dim(), "mlp_backward upstream gradient");
  require_shape(cache.hidden.cols() == p.hidden_dim() && x.cols() == p.in_dim() && x.rows() == cache.hidden.rows(),
                "mlp_backward stale cache");

  kernels::gemm_tn(cache.hidden, dy, grads.w2);
  column_sums(dy, grads.b2);

  Matrix<Real> dh;
  kernels::gemm_nt(dy, p.w2, dh);
  if (!cache.dropout_scale.empty()) {
    for (std::size_t i = 0; i < dh.size(); ++i) dh.data()[i] *= cache.dropout_scale.data()[i];
  }
  if (cache.activation == Activation::kRelu) {
    for (std::size_t i = 0; i < dh.size(); ++i) {
      if (!(cache.pre_activation.data()[i] > Real{0})) dh.data()[i] = Real{0};
    }
  }
  kernels::gemm_tn(x, dh, grads.w1);
  column_sums(dh, grads.b1);
  if (dx != nullptr) kernels::gemm_nt(dh, p.w1, *dx);
}

template <typename Real>
void Adam<Real>::step(const std::vector<Matrix<Real>*>& params, const std::vector<const Matrix<Real>*>& grads) {
  require_shape(params.size() == grads.size(), "adam parameter/gradient count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(params[i]->same_shape(*grads[i]), "adam parameter/gradient shape");
    if (!grads[i]->all_finite()) throw NumericError("non-finite gradient");
  }
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  require_shape(m_.size() == params.size(), "adam state size");
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Real* w = params[i]->data();
    const Real* g = grads[i]->data();
    Real* m = m_[i].data();
    Real* v = v_[i].data();
    for (std::size_t k = 0; k < params[i]->size(); ++k) {
      const double gk = static_cast<double>(g[k]) + cfg_.weight_decay * static_cast<double>(w[k]);
      const double mk = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
      const double vk = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
      m[k] = static_cast<Real>(mk);
      v[k] = static_cast<Real>(vk);
      w[k] = static_cast<Real>(w[k] - cfg_.lr * (mk / c1) / (std::sqrt(vk / c2) + cfg_.eps));
    }
  }
}

template <typename Real>
std::size_t Adam<Real>::state_bytes() const {
  std::size_t n = 0;
  for (const auto& m : m_) n += 2 * m.size() * sizeof(Real);
  return n;
}

void EntryAdam::step(std::vector<double>& values, std::span<const std::size_t> idx, std::span<const double> grads) {
  require_shape(idx.size() == grads.size(), "entry adam index/gradient count");
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient");
  }
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto k = idx[n];
    const double g = grads[n] + cfg_.weight_decay * values[k];
    ++t_[k];
    m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
    v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g * g;
    const double mhat = m_[k] / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_[k])));
    const double vhat = v_[k] / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t_[k])));
    values[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

template <typename Real>
LossResult<Real> cross_entropy(const Matrix<Real>& logits, std::span<const std::uint32_t> classes) {
  require_shape(logits.rows() == classes.size(), "cross_entropy label count");
  LossResult<Real> out;
  out.grad = Matrix<Real>(logits.rows(), logits.cols());
  const double inv_n = logits.rows() > 0 ? 1.0 / static_cast<double>(logits.rows()) : 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (classes[i] >= logits.cols()) throw DataError("cross_entropy: class index out of range");
    const auto z = logits.row(i);
    double mx = z[0];
    for (auto v : z) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    for (auto v : z) sum += std::exp(static_cast<double>(v) - mx);
    const double lse = mx + std::log(sum);
    total += lse - static_cast<double>(z[classes[i]]);
    auto g = out.grad.row(i);
    for (std::size_t c = 0; c < z.size(); ++c) {
      const double p = std::exp(static_cast<double>(z[c]) - lse);
      g[c] = static_cast<Real>((p - (c == classes[i] ? 1.0 : 0.0)) * inv_n);
    }
  }
  out.loss = total * inv_n;
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");
  return out;
}

template <typename Real>
LossResult<Real> bce_with_logits(const Matrix<Real>& logits, const Matrix<std::uint8_t>& targets) {
  require_shape(logits.rows() == targets.rows() && logits.cols() == targets.cols(), "bce target shape");
  LossResult<Real> out;
  out.grad = Matrix<Real>(logits.rows(), logits.cols());
  const double inv = logits.size() > 0 ? 1.0 / static_cast<double>(logits.size()) : 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits.data()[i];
    const double y = targets.data()[i] ? 1.0 : 0.0;
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    out.grad.data()[i] = static_cast<Real>((sig - y) * inv);
  }
  out.loss = total * inv;
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");
  return out;
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof(v)); }

std::uint32_t get_u32(std::string_view bytes, std::size_t& pos, const std::string& source) {
  if (pos + 4 > bytes.size()) throw DataError(source + ": offset " + std::to_string(pos) + ": truncated checkpoint");
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::string out = "HINP";
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
  }
  for (const auto& [name, m] : tensors) out.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(float));
  return out;
}

std::vector<NamedTensor> decode_checkpoint(std::string_view bytes, const std::string& source) {
  if (bytes.substr(0, 4) != "HINP") throw DataError(source + ": offset 0: missing HINP magic");
  std::size_t pos = 4;
  const auto count = get_u32(bytes, pos, source);
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_u32(bytes, pos, source);
    if (pos + len > bytes.size()) throw DataError(source + ": offset " + std::to_string(pos) + ": truncated name");
    std::string name(bytes.substr(pos, len));
    pos += len;
    const auto rows = get_u32(bytes, pos, source);
    const auto cols = get_u32(bytes, pos, source);
    out.emplace_back(std::move(name), Matrix<float>(rows, cols));
  }
  for (auto& [name, m] : out) {
    const auto n = m.size() * sizeof(float);
    if (pos + n > bytes.size()) throw DataError(source + ": offset " + std::to_string(pos) + ": truncated tensor " + name);
    std::memcpy(m.data(), bytes.data() + pos, n);
    pos += n;
  }
  if (pos != bytes.size()) throw DataError(source + ": offset " + std::to_string(pos) + ": trailing bytes");
  return out;
}

template <typename Real>
void append_tensors(std::vector<NamedTensor>& out, const std::string& prefix, const MlpParams<Real>& p) {
  static const char* kNames[] = {"w1", "b1", "w2", "b2"};
  const auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) out.emplace_back(prefix + "." + kNames[i], ts[i]->template cast<float>());
}

template <typename Real>
MlpParams<Real> mlp_from_tensors(const std::vector<NamedTensor>& in, const std::string& prefix) {
  auto find = [&](const char* suffix) {
    const auto name = prefix + "." + suffix;
    for (const auto& [n, m] : in) {
      if (n == name) return m.template cast<Real>();
    }
    throw DataError("checkpoint: missing tensor " + name);
  };
  return {find("w1"), find("b1"), find("w2"), find("b2")};
}

#define HINPATH_INSTANTIATE(Real)                                                                                   \
  template Matrix<Real> xavier_init<Real>(std::size_t, std::size_t, RngStream&);                                   \
  template struct MlpParams<Real>;                                                                                 \
  template Matrix<Real> mlp_forward<Real>(const MlpParams<Real>&, const Matrix<Real>&, const MlpOptions&,         \
                                          RngStream*, MlpCache<Real>*);                                            \
  template void mlp_backward<Real>(const MlpParams<Real>&, const Matrix<Real>&, const MlpCache<Real>&,           \
                                   const Matrix<Real>&, MlpParams<Real>&, Matrix<Real>*);                          \
  template class Adam<Real>;                                                                                       \
  template LossResult<Real> cross_entropy<Real>(const Matrix<Real>&, std::span<const std::uint32_t>);              \
  template LossResult<Real> bce_with_logits<Real>(const Matrix<Real>&, const Matrix<std::uint8_t>&);               \
  template void append_tensors<Real>(std::vector<NamedTensor>&, const std::string&, const MlpParams<Real>&);       \
  template MlpParams<Real> mlp_from_tensors<Real>(const std::vector<NamedTensor>&, const std::string&);

HINPATH_INSTANTIATE(float)
HINPATH_INSTANTIATE(double)

#undef HINPATH_INSTANTIATE

}  // namespace hinpath
