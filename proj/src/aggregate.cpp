#include "hinpath/aggregate.hpp"

#include <algorithm>

#include "hinpath/io.hpp"
#include "hinpath/kernels.hpp"

namespace hinpath {

std::optional<std::size_t> PathFeatureSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

PathFeatureSet PathFeatureSet::select(const std::vector<std::string>& wanted) const {
  PathFeatureSet out;
  out.dataset_hash = dataset_hash;
  out.max_hop = max_hop;
  out.normalized = normalized;
  for (const auto& name : wanted) {
    const auto i = index_of(name);
    if (!i) throw DataError("unknown path '" + name + "'");
    out.paths.push_back(paths[*i]);
    out.names.push_back(names[*i]);
    out.matrices.push_back(matrices[*i]);
  }
  return out;
}

std::size_t PathFeatureSet::bytes() const {
  std::size_t n = 0;
  for (const auto& m : matrices) n += m.size() * sizeof(float);
  return n;
}

Aggregator::Aggregator(const Hin& h, bool normalize) : hin_(h), normalize_(normalize), hash_(content_hash(h)) {
  steps_.reserve(h.adjacency.size());
  for (const auto& a : h.adjacency) {
    auto t = reverse_adjacency(a);
    steps_.push_back(normalize ? row_normalize(t) : std::move(t));
  }
}

Matrix<double> Aggregator::end_features(std::size_t node_type) const {
  if (hin_.is_featureless(node_type))
    throw DataError("missing features for end type '" + hin_.schema.node_types[node_type].name + "'");
  return hin_.features[node_type]->cast<double>();
}

FeatureMatrix Aggregator::compute(const MetaPath& p) {
  auto x = end_features(p.end_type());
  Matrix<double> next;
  for (std::size_t j = p.hops(); j-- > 0;) {
    kernels::spmm(steps_[p.edge_types[j]], x, next);
    ++stats_.spmm_calls;
    std::swap(x, next);
  }
  return x.cast<float>();
}

namespace {

struct ManifestEntry {
  std::string shape;
  std::string sha;
};

struct Manifest {
  std::string dataset_hash;
  bool normalized = true;
  std::size_t max_hop = 0;
  std::map<std::string, ManifestEntry> entries;
};

Manifest read_manifest(const std::filesystem::path& file) {
  Manifest m;
  const auto text = io::read_file(file);
  std::size_t lineno = 0;
  for (auto line : io::split(text, '\n')) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const auto f = io::split(line, '\t');
    if (f.size() == 2 && f[0] == "# dataset") {
      m.dataset_hash = std::string(f[1]);
    } else if (f.size() == 2 && f[0] == "# normalized") {
      m.normalized = f[1] == "1";
    } else if (f.size() == 2 && f[0] == "# max_hop") {
      m.max_hop = std::stoul(std::string(f[1]));
    } else if (f.size() == 3 && !f[0].starts_with("#")) {
      m.entries[std::string(f[0])] = {std::string(f[1]), std::string(f[2])};
    } else {
      throw DataError(file.string(), lineno, "malformed manifest line");
    }
  }
  return m;
}

std::string manifest_text(const Manifest& m) {
  std::string out = "# dataset\t" + m.dataset_hash + "\n# normalized\t" + (m.normalized ? "1" : "0") +
                    "\n# max_hop\t" + std::to_string(m.max_hop) + "\n";
  for (const auto& [path, e] : m.entries) out += path + "\t" + e.shape + "\t" + e.sha + "\n";
  return out;
}

std::string shape_string(const FeatureMatrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

PathFeatureSet Aggregator::precompute_all(const std::vector<MetaPath>& paths,
                                          const std::optional<std::filesystem::path>& cache_dir, bool memoize) {
  PathFeatureSet out;
  out.dataset_hash = hash_;
  out.normalized = normalize_;
  for (const auto& p : paths) out.max_hop = std::max(out.max_hop, p.hops());

  std::optional<std::filesystem::path> dir;
  Manifest manifest{hash_, normalize_, out.max_hop, {}};
  if (cache_dir) {
    dir = *cache_dir / hash_;
    const auto mf = *dir / "manifest.tsv";
    if (std::filesystem::exists(mf)) {
      manifest = read_manifest(mf);
      if (manifest.dataset_hash != hash_)
        throw DataError("stale cache: " + mf.string() + " was written for dataset " + manifest.dataset_hash);
      if (manifest.normalized != normalize_)
        throw DataError("stale cache: " + mf.string() + " normalization flag differs");
      manifest.max_hop = std::max(manifest.max_hop, out.max_hop);
    }
  }

  // Suffix products keyed by the trailing edge-type sequence.
  std::map<std::vector<std::size_t>, Matrix<double>> memo;
  bool manifest_dirty = false;
  const auto target_rows = hin_.target_count();

  for (const auto& p : paths) {
    const auto name = format_path(p, hin_.schema);
    out.paths.push_back(p);
    out.names.push_back(name);

    if (dir) {
      const auto it = manifest.entries.find(name);
      const auto file = *dir / (name + ".hinf");
      if (it != manifest.entries.end() && std::filesystem::exists(file)) {
        const auto bytes = io::read_file(file);
        if (io::sha256_hex(bytes) != it->second.sha)
          throw DataError("stale cache: content hash of " + file.string() + " does not match manifest");
        auto m = decode_hinf(bytes, file.string());
        if (shape_string(m) != it->second.shape || m.rows() != target_rows)
          throw DataError("stale cache: shape of " + file.string() + " does not match manifest");
        out.matrices.push_back(std::move(m));
        ++stats_.cache_hits;
        continue;
      }
    }

    FeatureMatrix result;
    if (!memoize) {
      result = compute(p);
    } else {
      const Matrix<double>* x = nullptr;
      Matrix<double> base;
      std::size_t j = p.hops();
      // Longest cached suffix first.
      for (std::size_t k = 0; k < p.hops(); ++k) {
        const std::vector<std::size_t> key(p.edge_types.begin() + static_cast<std::ptrdiff_t>(k), p.edge_types.end());
        if (const auto it = memo.find(key); it != memo.end()) {
          x = &it->second;
          j = k;
          break;
        }
      }
      if (x == nullptr) {
        base = end_features(p.end_type());
        x = &base;
      }
      while (j-- > 0) {
        std::vector<std::size_t> key(p.edge_types.begin() + static_cast<std::ptrdiff_t>(j), p.edge_types.end());
        Matrix<double> next;
        kernels::spmm(steps_[p.edge_types[j]], *x, next);
        ++stats_.spmm_calls;
        x = &memo.emplace(std::move(key), std::move(next)).first->second;
      }
      result = x->cast<float>();
    }
    if (!result.all_finite()) throw NumericError("non-finite aggregated feature for path " + name);

    if (dir) {
      const auto bytes = encode_hinf(result);
      io::write_file_atomic(*dir / (name + ".hinf"), bytes);
      manifest.entries[name] = {shape_string(result), io::sha256_hex(bytes)};
      manifest_dirty = true;
      ++stats_.cache_writes;
    }
    out.matrices.push_back(std::move(result));
  }

  if (dir && manifest_dirty) io::write_file_atomic(*dir / "manifest.tsv", manifest_text(manifest));
  return out;
}

}  // namespace hinpath
