#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hinpath/hin.hpp"
#include "hinpath/matrix.hpp"
#include "hinpath/rng.hpp"

namespace hinpath::testing {

inline std::filesystem::path fixture_dir() { return HINPATH_FIXTURE_DIR; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("hinpath_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Matrix<double> dense(const SparseAdjacency& a) {
  Matrix<double> d(a.rows(), a.cols());
  for (const auto& e : a.entries()) d(e.row, e.col) += e.value;
  return d;
}

inline Matrix<double> dense_product(const Matrix<double>& a, const Matrix<double>& b) {
  Matrix<double> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

template <typename T>
Matrix<T> random_matrix(std::size_t r, std::size_t c, RngStream& rng, double lo = -1.0, double hi = 1.0) {
  Matrix<T> m(r, c);
  for (auto& v : m.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return m;
}

/// Random small HIN: 2-4 node types, at most `max_nodes` nodes in total, a
/// random subset of directed edge types (self-relations allowed), features
/// on every type and single-label targets with nonempty train and val splits.
inline Hin random_hin(RngStream& rng, std::size_t max_nodes = 50) {
  Hin h;
  const std::size_t nt = 2 + rng.uniform_below(3);
  const std::size_t per = max_nodes / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t count = 1 + rng.uniform_below(per);
    h.schema.node_types.push_back({"t" + std::to_string(t), count, 1 + rng.uniform_below(4), static_cast<char>('A' + t)});
  }
  h.schema.node_types[0].count = std::max<std::size_t>(h.schema.node_types[0].count, 4);
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t b = 0; b < nt; ++b) {
      if (rng.uniform() < 0.55 || (a == 1 && b == 0) || (a == 0 && b == 1)) {
        h.schema.edge_types.push_back({"e" + std::to_string(a) + std::to_string(b), a, b});
      }
    }
  h.schema.target = 0;
  for (const auto& et : h.schema.edge_types) {
    const auto rows = h.schema.node_types[et.src].count;
    const auto cols = h.schema.node_types[et.dst].count;
    std::vector<SparseAdjacency::Entry> entries;
    const double density = rng.uniform(0.05, 0.6);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) {
        if (rng.uniform() < density) entries.push_back({i, j, rng.uniform() < 0.3 ? rng.uniform(0.5, 3.0) : 1.0});
      }
    h.adjacency.push_back(SparseAdjacency::from_entries(rows, cols, std::move(entries)));
  }
  for (const auto& t : h.schema.node_types) {
    h.features.push_back(random_matrix<float>(t.count, t.feature_dim, rng));
  }
  const auto n = h.schema.node_types[0].count;
  h.labels.mode = LabelMode::kSingle;
  h.labels.num_classes = 2;
  h.schema.num_classes = 2;
  for (std::size_t i = 0; i < n; ++i) h.labels.classes.push_back(static_cast<std::uint32_t>(rng.uniform_below(2)));
  h.splits.assign(n, Split::kTest);
  h.splits[0] = Split::kTrain;
  h.splits[1] = Split::kVal;
  for (std::size_t i = 2; i < n; ++i) h.splits[i] = static_cast<Split>(rng.uniform_below(3));
  return h;
}

/// Central finite difference of `f` with respect to every entry of `m`.
template <typename T>
Matrix<double> numeric_gradient(Matrix<T>& m, const std::function<double()>& f, double h = 1e-5) {
  Matrix<double> g(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const T saved = m.data()[i];
    m.data()[i] = saved + static_cast<T>(h);
    const double up = f();
    m.data()[i] = saved - static_cast<T>(h);
    const double down = f();
    m.data()[i] = saved;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max |a - b| / max(1e-6, max |b|) over all entries.
inline double relative_error(const Matrix<double>& analytic, const Matrix<double>& numeric) {
  double diff = 0.0, scale = 1e-6;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic.data()[i] - numeric.data()[i]));
    scale = std::max(scale, std::abs(numeric.data()[i]));
  }
  return diff / scale;
}

}  // namespace hinpath::testing
