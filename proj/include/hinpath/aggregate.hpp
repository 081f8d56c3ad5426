#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hinpath/hin.hpp"
#include "hinpath/metapath.hpp"

namespace hinpath {

/// Per-path aggregated features; rows are target nodes.
struct PathFeatureSet {
  std::vector<MetaPath> paths;
  std::vector<std::string> names;  // formatted path strings, parallel to `paths`
  std::vector<FeatureMatrix> matrices;
  std::string dataset_hash;
  std::size_t max_hop = 0;
  bool normalized = true;

  std::size_t size() const { return paths.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Subset in the given order. Throws DataError on unknown names.
  PathFeatureSet select(const std::vector<std::string>& names) const;
  std::size_t bytes() const;
};

struct AggregateStats {
  std::size_t spmm_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_writes = 0;
};

/// Computes X_k = A(c,c1) A(c1,c2) ... A(c_{l-1},c_l) X(c_l) right to left,
/// one sparse-times-dense product per hop. A(u,v) is the row-normalized
/// matrix that averages v-neighbours into u nodes.
class Aggregator {
 public:
  explicit Aggregator(const Hin& h, bool normalize = true);

  /// One path, no memoization.
  FeatureMatrix compute(const MetaPath& p);

  /// All paths, sharing suffix products across paths. With a cache directory,
  /// matrices are loaded from / written to `<cache_dir>/<dataset_hash>/`.
  PathFeatureSet precompute_all(const std::vector<MetaPath>& paths,
                                const std::optional<std::filesystem::path>& cache_dir = std::nullopt,
                                bool memoize = true);

  /// Propagation matrix for one hop along `edge_type` (rows = dst nodes).
  const SparseAdjacency& step_matrix(std::size_t edge_type) const { return steps_[edge_type]; }

  const AggregateStats& stats() const { return stats_; }
  const std::string& dataset_hash() const { return hash_; }

 private:
  Matrix<double> end_features(std::size_t node_type) const;

  const Hin& hin_;
  bool normalize_;
  std::vector<SparseAdjacency> steps_;
  std::string hash_;
  AggregateStats stats_;
};

inline FeatureMatrix compute_path_features(const Hin& h, const MetaPath& p) { return Aggregator(h).compute(p); }

}  // namespace hinpath
