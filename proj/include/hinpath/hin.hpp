#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hinpath/matrix.hpp"

namespace hinpath {

struct NodeType {
  std::string name;
  std::size_t count = 0;
  std::size_t feature_dim = 0;  // 0 = featureless
  char letter = '\0';           // single-letter alias used in path strings
};

/// Directed relation; messages flow from `src` nodes to `dst` nodes.
struct EdgeType {
  std::string name;
  std::size_t src = 0;
  std::size_t dst = 0;
};

enum class LabelMode { kSingle, kMulti };

struct SchemaGraph {
  std::vector<NodeType> node_types;
  std::vector<EdgeType> edge_types;
  std::size_t target = 0;
  LabelMode label_mode = LabelMode::kSingle;
  std::size_t num_classes = 0;  // 0 = infer from labels.tsv
  // Edge types that win when two edge types connect the same type pair.
  std::vector<std::size_t> preferred_edges;

  std::optional<std::size_t> find_node_type(std::string_view name) const;
  std::optional<std::size_t> find_edge_type(std::string_view name) const;
  std::optional<std::size_t> node_type_by_letter(char letter) const;

  const NodeType& target_type() const { return node_types[target]; }

  /// Throws DataError when names repeat, letters collide, or references dangle.
  void validate() const;

  /// Parses the `schema.tsv` grammar. `source` names the file in errors.
  static SchemaGraph parse(std::string_view text, const std::string& source = "schema.tsv");
  std::string to_text() const;
};

/// Compressed sparse row matrix. Column indices within a row are strictly increasing.
class SparseAdjacency {
 public:
  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };

  SparseAdjacency() = default;
  /// Validating constructor.
  SparseAdjacency(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> row_offsets,
                  std::vector<std::uint32_t> col_indices, std::vector<double> values);

  /// Builds from unordered entries; repeated (row, col) pairs are summed.
  static SparseAdjacency from_entries(std::size_t rows, std::size_t cols, std::vector<Entry> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_indices_.size(); }

  std::span<const std::uint64_t> row_offsets() const { return row_offsets_; }
  std::span<const std::uint32_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return std::span(col_indices_).subspan(row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]);
  }
  std::span<const double> row_values(std::size_t r) const {
    return std::span(values_).subspan(row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]);
  }
  std::vector<Entry> entries() const;

  bool operator==(const SparseAdjacency&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint64_t> row_offsets_{0};
  std::vector<std::uint32_t> col_indices_;
  std::vector<double> values_;
};

/// Scales every nonempty row to sum to one. Throws DataError on negative values.
SparseAdjacency row_normalize(const SparseAdjacency& a);

/// Transpose with sorted rows; values carried over unnormalized.
SparseAdjacency reverse_adjacency(const SparseAdjacency& a);

enum class Split : std::uint8_t { kTrain, kVal, kTest };

struct Labels {
  LabelMode mode = LabelMode::kSingle;
  std::size_t num_classes = 0;
  std::vector<std::uint32_t> classes;  // single-label
  Matrix<std::uint8_t> multi_hot;      // multi-label, rows = target count
};

/// Heterogeneous information network. Immutable once loaded.
struct Hin {
  SchemaGraph schema;
  std::vector<SparseAdjacency> adjacency;            // per edge type, rows = src nodes
  std::vector<std::optional<FeatureMatrix>> features;  // per node type
  Labels labels;
  std::vector<Split> splits;  // per target node

  std::size_t target_count() const { return schema.target_type().count; }
  std::vector<std::uint32_t> split_indices(Split s) const;
  bool is_featureless(std::size_t node_type) const { return !features[node_type].has_value(); }
  std::size_t edge_count() const;

  void validate() const;
};

Hin load_dataset(const std::filesystem::path& dir);
void save_dataset(const Hin& h, const std::filesystem::path& dir);

/// SHA-256 over a canonical serialization of schema, edges, features, labels and splits.
std::string content_hash(const Hin& h);

/// Keeps at most `cap` incoming edges per destination node and edge type.
Hin sparsify_by_in_degree_cap(const Hin& h, std::size_t cap, std::uint64_t seed);

/// Deterministic uniform(-1, 1) features for a node type without stored features.
FeatureMatrix synth_features_for_featureless(const Hin& h, std::string_view type, std::size_t dim,
                                             std::uint64_t seed);

/// Returns a copy where every featureless node type receives synthesized features.
Hin with_synthesized_features(const Hin& h, std::size_t dim, std::uint64_t seed);

// HINF binary feature format: "HINF", u32 rows, u32 cols, rows*cols f32, all little-endian.
void write_hinf(const FeatureMatrix& m, const std::filesystem::path& file);
FeatureMatrix read_hinf(const std::filesystem::path& file);
std::string encode_hinf(const FeatureMatrix& m);
FeatureMatrix decode_hinf(std::string_view bytes, const std::string& source);

}  // namespace hinpath
