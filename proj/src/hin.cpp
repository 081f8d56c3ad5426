#include "hinpath/hin.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hinpath/io.hpp"
#include "hinpath/rng.hpp"

namespace hinpath {
namespace {

static_assert(std::endian::native == std::endian::little, "HINF I/O assumes a little-endian host");

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  s = io::trim(s);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  s = io::trim(s);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Calls fn(line_number, line) for every non-blank, non-comment line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    const auto line = text.substr(start, end - start);
    const auto t = io::trim(line);
    if (!t.empty() && t.front() != '#') fn(lineno, line);
    if (end == text.size()) break;
    start = end + 1;
  }
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

}  // namespace

// ---------------------------------------------------------------------------
// SchemaGraph

std::optional<std::size_t> SchemaGraph::find_node_type(std::string_view name) const {
  for (std::size_t i = 0; i < node_types.size(); ++i) {
    if (node_types[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> SchemaGraph::find_edge_type(std::string_view name) const {
  for (std::size_t i = 0; i < edge_types.size(); ++i) {
    if (edge_types[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> SchemaGraph::node_type_by_letter(char letter) const {
  for (std::size_t i = 0; i < node_types.size(); ++i) {
    if (node_types[i].letter == letter) return i;
  }
  return std::nullopt;
}

void SchemaGraph::validate() const {
  std::set<std::string> names;
  std::set<char> letters;
  for (const auto& nt : node_types) {
    if (nt.name.empty()) throw DataError("schema: empty node type name");
    if (!names.insert(nt.name).second) throw DataError("schema: duplicate node type '" + nt.name + "'");
    if (nt.letter == '\0' || nt.letter == '@' || nt.letter == ',')
      throw DataError("schema: invalid letter for node type '" + nt.name + "'");
    if (!letters.insert(nt.letter).second)
      throw DataError(std::string("schema: letter '") + nt.letter + "' used by two node types");
  }
  std::set<std::string> edge_names;
  for (const auto& et : edge_types) {
    if (!edge_names.insert(et.name).second) throw DataError("schema: duplicate edge type '" + et.name + "'");
    if (et.src >= node_types.size() || et.dst >= node_types.size())
      throw DataError("schema: edge type '" + et.name + "' references an undeclared node type");
  }
  if (node_types.empty()) throw DataError("schema: no node types");
  if (target >= node_types.size()) throw DataError("schema: target is not a declared node type");
  std::set<std::pair<std::size_t, std::size_t>> preferred_pairs;
  for (auto e : preferred_edges) {
    if (e >= edge_types.size()) throw DataError("schema: preferred edge type out of range");
    if (!preferred_pairs.insert({edge_types[e].src, edge_types[e].dst}).second)
      throw DataError("schema: two preferred edge types share the type pair of '" + edge_types[e].name + "'");
  }
}

SchemaGraph SchemaGraph::parse(std::string_view text, const std::string& source) {
  SchemaGraph s;
  std::optional<std::string> target_name;
  std::vector<std::pair<std::size_t, std::string>> prefer_names;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    const auto tok = tokens(line);
    const auto& kw = tok[0];
    if (kw == "nodetype") {
      if (tok.size() != 4 && tok.size() != 5) throw DataError(source, lineno, "expected: nodetype <name> <count> <feat_dim> [<letter>]");
      NodeType nt;
      nt.name = std::string(tok[1]);
      if (!parse_int(tok[2], nt.count)) throw DataError(source, lineno, "bad node count");
      if (!parse_int(tok[3], nt.feature_dim)) throw DataError(source, lineno, "bad feature dimension");
      if (tok.size() == 5) {
        if (tok[4].size() != 1) throw DataError(source, lineno, "letter alias must be one character");
        nt.letter = tok[4][0];
      } else {
        nt.letter = static_cast<char>(std::toupper(static_cast<unsigned char>(nt.name[0])));
      }
      s.node_types.push_back(std::move(nt));
    } else if (kw == "edgetype") {
      if (tok.size() != 4) throw DataError(source, lineno, "expected: edgetype <name> <src_type> <dst_type>");
      const auto src = s.find_node_type(tok[2]);
      const auto dst = s.find_node_type(tok[3]);
      if (!src || !dst) throw DataError(source, lineno, "edge type references an undeclared node type");
      s.edge_types.push_back({std::string(tok[1]), *src, *dst});
    } else if (kw == "target") {
      if (tok.size() != 2) throw DataError(source, lineno, "expected: target <name>");
      if (target_name) throw DataError(source, lineno, "target declared twice");
      target_name = std::string(tok[1]);
    } else if (kw == "labels") {
      if (tok.size() != 3) throw DataError(source, lineno, "expected: labels single|multi <num_classes>");
      if (tok[1] == "single") {
        s.label_mode = LabelMode::kSingle;
      } else if (tok[1] == "multi") {
        s.label_mode = LabelMode::kMulti;
      } else {
        throw DataError(source, lineno, "label mode must be single or multi");
      }
      if (!parse_int(tok[2], s.num_classes) || s.num_classes == 0) throw DataError(source, lineno, "bad class count");
    } else if (kw == "prefer") {
      if (tok.size() != 2) throw DataError(source, lineno, "expected: prefer <edgetype>");
      prefer_names.emplace_back(lineno, std::string(tok[1]));
    } else {
      throw DataError(source, lineno, "unknown directive '" + std::string(kw) + "'");
    }
  });
  if (!target_name) throw DataError(source + ": missing 'target' line");
  const auto t = s.find_node_type(*target_name);
  if (!t) throw DataError(source + ": target '" + *target_name + "' is not a declared node type");
  s.target = *t;
  for (const auto& [lineno, name] : prefer_names) {
    const auto e = s.find_edge_type(name);
    if (!e) throw DataError(source, lineno, "unknown edge type '" + name + "'");
    s.preferred_edges.push_back(*e);
  }
  s.validate();
  return s;
}

std::string SchemaGraph::to_text() const {
  std::ostringstream out;
  for (const auto& nt : node_types) {
    out << "nodetype\t" << nt.name << '\t' << nt.count << '\t' << nt.feature_dim << '\t' << nt.letter << '\n';
  }
  for (const auto& et : edge_types) {
    out << "edgetype\t" << et.name << '\t' << node_types[et.src].name << '\t' << node_types[et.dst].name << '\n';
  }
  out << "target\t" << node_types[target].name << '\n';
  if (num_classes > 0) {
    out << "labels\t" << (label_mode == LabelMode::kMulti ? "multi" : "single") << '\t' << num_classes << '\n';
  }
  for (auto e : preferred_edges) out << "prefer\t" << edge_types[e].name << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// SparseAdjacency

SparseAdjacency::SparseAdjacency(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> row_offsets,
                                 std::vector<std::uint32_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != rows_ + 1 || row_offsets_.front() != 0 || row_offsets_.back() != col_indices_.size())
    throw DataError("sparse adjacency: bad row offsets");
  if (values_.size() != col_indices_.size()) throw DataError("sparse adjacency: values/indices length differ");
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1]) throw DataError("sparse adjacency: row offsets not monotone");
    for (auto p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      if (col_indices_[p] >= cols_) throw DataError("sparse adjacency: column index out of range");
      if (p > row_offsets_[r] && col_indices_[p] <= col_indices_[p - 1])
        throw DataError("sparse adjacency: column indices not strictly increasing");
    }
  }
}

SparseAdjacency SparseAdjacency::from_entries(std::size_t rows, std::size_t cols, std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  std::vector<std::uint64_t> offsets(rows + 1, 0);
  std::vector<std::uint32_t> cols_out;
  std::vector<double> vals;
  cols_out.reserve(entries.size());
  vals.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.row >= rows || e.col >= cols) throw DataError("sparse adjacency: entry out of range");
    if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
      vals.back() += e.value;
      continue;
    }
    cols_out.push_back(e.col);
    vals.push_back(e.value);
    ++offsets[e.row + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return SparseAdjacency(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

std::vector<SparseAdjacency::Entry> SparseAdjacency::entries() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (auto p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      out.push_back({static_cast<std::uint32_t>(r), col_indices_[p], values_[p]});
    }
  }
  return out;
}

SparseAdjacency row_normalize(const SparseAdjacency& a) {
  std::vector<double> vals(a.values().begin(), a.values().end());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto begin = a.row_offsets()[r];
    const auto end = a.row_offsets()[r + 1];
    double sum = 0.0;
    for (auto p = begin; p < end; ++p) {
      if (vals[p] < 0.0 || !std::isfinite(vals[p])) throw DataError("row_normalize: negative or non-finite value");
      sum += vals[p];
    }
    if (sum > 0.0) {
      for (auto p = begin; p < end; ++p) vals[p] /= sum;
    }
  }
  return SparseAdjacency(a.rows(), a.cols(), {a.row_offsets().begin(), a.row_offsets().end()},
                         {a.col_indices().begin(), a.col_indices().end()}, std::move(vals));
}

SparseAdjacency reverse_adjacency(const SparseAdjacency& a) {
  std::vector<std::uint64_t> offsets(a.cols() + 1, 0);
  for (auto c : a.col_indices()) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<std::uint32_t> cols(a.nnz());
  std::vector<double> vals(a.nnz());
  std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
  // Walking source rows in order leaves each output row sorted.
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (auto p = a.row_offsets()[r]; p < a.row_offsets()[r + 1]; ++p) {
      const auto dst = cursor[a.col_indices()[p]]++;
      cols[dst] = static_cast<std::uint32_t>(r);
      vals[dst] = a.values()[p];
    }
  }
  return SparseAdjacency(a.cols(), a.rows(), std::move(offsets), std::move(cols), std::move(vals));
}

// ---------------------------------------------------------------------------
// Hin

std::vector<std::uint32_t> Hin::split_indices(Split s) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::size_t Hin::edge_count() const {
  std::size_t n = 0;
  for (const auto& a : adjacency) n += a.nnz();
  return n;
}

void Hin::validate() const {
  schema.validate();
  if (adjacency.size() != schema.edge_types.size()) throw DataError("hin: adjacency count differs from edge types");
  for (std::size_t e = 0; e < adjacency.size(); ++e) {
    const auto& et = schema.edge_types[e];
    if (adjacency[e].rows() != schema.node_types[et.src].count || adjacency[e].cols() != schema.node_types[et.dst].count)
      throw DataError("hin: adjacency shape of '" + et.name + "' disagrees with node counts");
  }
  if (features.size() != schema.node_types.size()) throw DataError("hin: feature slot count differs from node types");
  for (std::size_t t = 0; t < features.size(); ++t) {
    if (!features[t]) continue;
    const auto& nt = schema.node_types[t];
    if (features[t]->rows() != nt.count || features[t]->cols() != nt.feature_dim)
      throw DataError("hin: feature shape of '" + nt.name + "' disagrees with schema");
    if (!features[t]->all_finite()) throw DataError("hin: non-finite feature in '" + nt.name + "'");
  }
  const auto n = target_count();
  if (splits.size() != n) throw DataError("hin: split count differs from target count");
  if (labels.mode == LabelMode::kSingle) {
    if (labels.classes.size() != n) throw DataError("hin: label count differs from target count");
    for (auto c : labels.classes) {
      if (c >= labels.num_classes) throw DataError("hin: label out of range");
    }
  } else if (labels.multi_hot.rows() != n || labels.multi_hot.cols() != labels.num_classes) {
    throw DataError("hin: multi-hot label shape mismatch");
  }
}

// ---------------------------------------------------------------------------
// HINF

std::string encode_hinf(const FeatureMatrix& m) {
  std::string out = "HINF";
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  out.append(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(float));
  return out;
}

FeatureMatrix decode_hinf(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "HINF") throw DataError(source + ": offset 0: missing HINF magic");
  std::uint32_t dims[2];
  std::memcpy(dims, bytes.data() + 4, sizeof(dims));
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1];
  if (bytes.size() != 12 + n * sizeof(float))
    throw DataError(source + ": offset 12: payload size does not match " + std::to_string(dims[0]) + "x" +
                    std::to_string(dims[1]));
  FeatureMatrix m(dims[0], dims[1]);
  std::memcpy(m.data(), bytes.data() + 12, n * sizeof(float));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(m.data()[i]))
      throw DataError(source + ": offset " + std::to_string(12 + i * sizeof(float)) + ": non-finite feature");
  }
  return m;
}

void write_hinf(const FeatureMatrix& m, const std::filesystem::path& file) {
  io::write_file_atomic(file, encode_hinf(m));
}

FeatureMatrix read_hinf(const std::filesystem::path& file) { return decode_hinf(io::read_file(file), file.string()); }

// ---------------------------------------------------------------------------
// Dataset directory I/O

namespace {

FeatureMatrix read_feature_tsv(const std::filesystem::path& file, std::size_t rows, std::size_t cols) {
  const auto text = io::read_file(file);
  const auto source = file.string();
  FeatureMatrix m(rows, cols);
  std::size_t r = 0;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (r >= rows) throw DataError(source, lineno, "shape mismatch: more than " + std::to_string(rows) + " rows");
    const auto tok = tokens(line);
    if (tok.size() != cols) throw DataError(source, lineno, "shape mismatch: expected " + std::to_string(cols) + " columns");
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_real(tok[c], v)) throw DataError(source, lineno, "bad number");
      if (!std::isfinite(v)) throw DataError(source, lineno, "non-finite feature");
      m(r, c) = static_cast<float>(v);
    }
    ++r;
  });
  if (r != rows) throw DataError(source + ": shape mismatch: expected " + std::to_string(rows) + " rows, got " + std::to_string(r));
  return m;
}

}  // namespace

Hin load_dataset(const std::filesystem::path& dir) {
  Hin h;
  h.schema = SchemaGraph::parse(io::read_file(dir / "schema.tsv"), (dir / "schema.tsv").string());
  const auto& schema = h.schema;

  for (const auto& et : schema.edge_types) {
    const auto file = dir / "edges" / (et.name + ".tsv");
    const auto source = file.string();
    const auto text = io::read_file(file);
    const auto rows = schema.node_types[et.src].count;
    const auto cols = schema.node_types[et.dst].count;
    std::vector<SparseAdjacency::Entry> entries;
    for_each_line(text, [&](std::size_t lineno, std::string_view line) {
      const auto tok = tokens(line);
      if (tok.size() != 2 && tok.size() != 3) throw DataError(source, lineno, "expected <src>\\t<dst>[\\t<weight>]");
      std::uint64_t s = 0, d = 0;
      if (!parse_int(tok[0], s) || !parse_int(tok[1], d)) throw DataError(source, lineno, "bad node id");
      if (s >= rows || d >= cols) throw DataError(source, lineno, "dangling edge endpoint");
      double w = 1.0;
      if (tok.size() == 3) {
        if (!parse_real(tok[2], w) || !std::isfinite(w) || w < 0.0) throw DataError(source, lineno, "bad edge weight");
      }
      entries.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(d), w});
    });
    h.adjacency.push_back(SparseAdjacency::from_entries(rows, cols, std::move(entries)));
  }

  for (const auto& nt : schema.node_types) {
    if (nt.feature_dim == 0) {
      h.features.emplace_back(std::nullopt);
      continue;
    }
    const auto bin = dir / "features" / (nt.name + ".bin");
    const auto tsv = dir / "features" / (nt.name + ".tsv");
    FeatureMatrix m;
    if (std::filesystem::exists(bin)) {
      m = read_hinf(bin);
      if (m.rows() != nt.count || m.cols() != nt.feature_dim)
        throw DataError(bin.string() + ": offset 4: shape mismatch, schema says " + std::to_string(nt.count) + "x" +
                        std::to_string(nt.feature_dim));
    } else if (std::filesystem::exists(tsv)) {
      m = read_feature_tsv(tsv, nt.count, nt.feature_dim);
    } else {
      throw DataError(bin.string() + ": missing file");
    }
    h.features.emplace_back(std::move(m));
  }

  const auto n = schema.target_type().count;
  {
    const auto file = dir / "labels.tsv";
    const auto source = file.string();
    const auto text = io::read_file(file);
    std::vector<std::optional<std::string>> raw(n);
    for_each_line(text, [&](std::size_t lineno, std::string_view line) {
      const auto tok = tokens(line);
      if (tok.size() != 2) throw DataError(source, lineno, "expected <node_id>\\t<label>");
      std::uint64_t id = 0;
      if (!parse_int(tok[0], id) || id >= n) throw DataError(source, lineno, "node id out of range");
      if (raw[id]) throw DataError(source, lineno, "duplicate label");
      raw[id] = std::string(tok[1]);
    });
    h.labels.mode = schema.label_mode;
    if (schema.label_mode == LabelMode::kSingle) {
      h.labels.classes.resize(n);
      std::uint32_t max_class = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!raw[i]) throw DataError(source + ": missing label for node " + std::to_string(i));
        if (!parse_int(*raw[i], h.labels.classes[i])) throw DataError(source + ": bad class for node " + std::to_string(i));
        max_class = std::max(max_class, h.labels.classes[i]);
      }
      h.labels.num_classes = schema.num_classes > 0 ? schema.num_classes : (n > 0 ? max_class + 1 : 0);
    } else {
      const auto c = schema.num_classes;
      h.labels.num_classes = c;
      h.labels.multi_hot = Matrix<std::uint8_t>(n, c);
      for (std::size_t i = 0; i < n; ++i) {
        if (!raw[i]) throw DataError(source + ": missing label for node " + std::to_string(i));
        if (raw[i]->size() != c) throw DataError(source + ": bitstring length differs from class count for node " + std::to_string(i));
        for (std::size_t k = 0; k < c; ++k) {
          const char b = (*raw[i])[k];
          if (b != '0' && b != '1') throw DataError(source + ": bitstring must contain only 0/1 for node " + std::to_string(i));
          h.labels.multi_hot(i, k) = b == '1';
        }
      }
    }
  }

  {
    const auto file = dir / "splits.tsv";
    const auto source = file.string();
    const auto text = io::read_file(file);
    std::vector<std::optional<Split>> raw(n);
    for_each_line(text, [&](std::size_t lineno, std::string_view line) {
      const auto tok = tokens(line);
      if (tok.size() != 2) throw DataError(source, lineno, "expected <node_id>\\t{train|val|test}");
      std::uint64_t id = 0;
      if (!parse_int(tok[0], id) || id >= n) throw DataError(source, lineno, "node id out of range");
      if (raw[id]) throw DataError(source, lineno, "duplicate split assignment");
      if (tok[1] == "train") {
        raw[id] = Split::kTrain;
      } else if (tok[1] == "val") {
        raw[id] = Split::kVal;
      } else if (tok[1] == "test") {
        raw[id] = Split::kTest;
      } else {
        throw DataError(source, lineno, "split must be train, val or test");
      }
    });
    h.splits.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!raw[i]) throw DataError(source + ": missing split for node " + std::to_string(i));
      h.splits[i] = *raw[i];
    }
  }

  h.validate();
  return h;
}

void save_dataset(const Hin& h, const std::filesystem::path& dir) {
  h.validate();
  std::filesystem::create_directories(dir / "edges");
  std::filesystem::create_directories(dir / "features");
  auto schema = h.schema;
  if (schema.num_classes == 0) schema.num_classes = h.labels.num_classes;
  io::write_file_atomic(dir / "schema.tsv", schema.to_text());

  for (std::size_t e = 0; e < h.adjacency.size(); ++e) {
    const auto& a = h.adjacency[e];
    const bool weighted = std::any_of(a.values().begin(), a.values().end(), [](double v) { return v != 1.0; });
    std::string out;
    for (const auto& en : a.entries()) {
      out += std::to_string(en.row);
      out += '\t';
      out += std::to_string(en.col);
      if (weighted) {
        out += '\t';
        out += io::format_double(en.value);
      }
      out += '\n';
    }
    io::write_file_atomic(dir / "edges" / (h.schema.edge_types[e].name + ".tsv"), out);
  }

  for (std::size_t t = 0; t < h.features.size(); ++t) {
    if (h.features[t]) write_hinf(*h.features[t], dir / "features" / (h.schema.node_types[t].name + ".bin"));
  }

  std::string labels;
  std::string splits;
  for (std::size_t i = 0; i < h.target_count(); ++i) {
    labels += std::to_string(i);
    labels += '\t';
    if (h.labels.mode == LabelMode::kSingle) {
      labels += std::to_string(h.labels.classes[i]);
    } else {
      for (std::size_t k = 0; k < h.labels.num_classes; ++k) labels += h.labels.multi_hot(i, k) ? '1' : '0';
    }
    labels += '\n';
    splits += std::to_string(i);
    splits += '\t';
    splits += split_name(h.splits[i]);
    splits += '\n';
  }
  io::write_file_atomic(dir / "labels.tsv", labels);
  io::write_file_atomic(dir / "splits.tsv", splits);
}

std::string content_hash(const Hin& h) {
  io::Sha256 sha;
  auto bytes = [&](const void* p, std::size_t n) { sha.update(std::string_view(static_cast<const char*>(p), n)); };
  auto u64 = [&](std::uint64_t v) { bytes(&v, sizeof(v)); };
  sha.update(h.schema.to_text());
  for (const auto& a : h.adjacency) {
    u64(a.rows());
    u64(a.cols());
    bytes(a.row_offsets().data(), a.row_offsets().size_bytes());
    bytes(a.col_indices().data(), a.col_indices().size_bytes());
    bytes(a.values().data(), a.values().size_bytes());
  }
  for (const auto& f : h.features) {
    if (!f) {
      u64(0);
      continue;
    }
    u64(f->rows());
    u64(f->cols());
    bytes(f->data(), f->size() * sizeof(float));
  }
  u64(h.labels.num_classes);
  bytes(h.labels.classes.data(), h.labels.classes.size() * sizeof(std::uint32_t));
  bytes(h.labels.multi_hot.data(), h.labels.multi_hot.size());
  bytes(h.splits.data(), h.splits.size());
  return sha.hex_digest();
}

// ---------------------------------------------------------------------------
// Derived graphs

Hin sparsify_by_in_degree_cap(const Hin& h, std::size_t cap, std::uint64_t seed) {
  if (cap == 0) throw UsageError("sparsify: cap must be at least 1");
  Hin out = h;
  const RngStream base(seed, RngPurpose::kSample);
  for (std::size_t e = 0; e < h.adjacency.size(); ++e) {
    // Rows of the transpose are destinations; their columns are sources.
    const auto by_dst = reverse_adjacency(h.adjacency[e]);
    const auto edge_stream = base.substream(h.schema.edge_types[e].name);
    std::vector<SparseAdjacency::Entry> kept;
    kept.reserve(h.adjacency[e].nnz());
    std::vector<std::size_t> order;
    for (std::size_t d = 0; d < by_dst.rows(); ++d) {
      const auto srcs = by_dst.row_cols(d);
      const auto vals = by_dst.row_values(d);
      order.resize(srcs.size());
      std::iota(order.begin(), order.end(), 0);
      if (srcs.size() > cap) {
        auto rng = edge_stream.substream(d);
        for (std::size_t i = 0; i < cap; ++i) {
          const auto j = i + rng.uniform_below(order.size() - i);
          std::swap(order[i], order[j]);
        }
        order.resize(cap);
      }
      for (auto k : order) kept.push_back({srcs[k], static_cast<std::uint32_t>(d), vals[k]});
    }
    out.adjacency[e] = SparseAdjacency::from_entries(h.adjacency[e].rows(), h.adjacency[e].cols(), std::move(kept));
  }
  return out;
}

FeatureMatrix synth_features_for_featureless(const Hin& h, std::string_view type, std::size_t dim, std::uint64_t seed) {
  const auto t = h.schema.find_node_type(type);
  if (!t) throw DataError("synth features: unknown node type '" + std::string(type) + "'");
  if (!h.is_featureless(*t)) throw DataError("synth features: node type '" + std::string(type) + "' already has features");
  const auto n = h.schema.node_types[*t].count;
  FeatureMatrix m(n, dim);
  const auto type_stream = RngStream(seed, RngPurpose::kSynth).substream(type);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = type_stream.substream(i);
    for (std::size_t c = 0; c < dim; ++c) m(i, c) = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  return m;
}

Hin with_synthesized_features(const Hin& h, std::size_t dim, std::uint64_t seed) {
  Hin out = h;
  for (std::size_t t = 0; t < h.schema.node_types.size(); ++t) {
    if (!h.is_featureless(t)) continue;
    out.features[t] = synth_features_for_featureless(h, h.schema.node_types[t].name, dim, seed);
    out.schema.node_types[t].feature_dim = dim;
  }
  return out;
}

}  // namespace hinpath
