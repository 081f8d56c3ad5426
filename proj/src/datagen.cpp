#include "hinpath/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "hinpath/errors.hpp"
#include "hinpath/io.hpp"
#include "hinpath/rng.hpp"

namespace hinpath {

namespace {

template <typename T>
T parse_number(std::string_view s, const std::string& source, std::size_t line, const char* what) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw DataError(source, line, std::string("invalid ") + what + " '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const auto start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

SynthConfig SynthConfig::parse(std::string_view text, const std::string& source) {
  SynthConfig cfg;
  cfg.node_types.clear();
  std::size_t lineno = 0;
  for (auto raw : io::split(text, '\n')) {
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = io::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError(source, lineno, "expected key = value");
    const auto key = io::trim(line.substr(0, eq));
    const auto value = io::trim(line.substr(eq + 1));
    const auto tok = words(value);
    if (key == "nodetype") {
      if (tok.size() != 4 || tok[1].size() != 1) throw DataError(source, lineno, "expected: nodetype = <name> <letter> <count> <dim>");
      cfg.node_types.push_back({std::string(tok[0]), tok[1][0], parse_number<std::size_t>(tok[2], source, lineno, "count"),
                                parse_number<std::size_t>(tok[3], source, lineno, "dim")});
    } else if (key == "relation") {
      if (tok.size() != 4) throw DataError(source, lineno, "expected: relation = <name> <type_a> <type_b> <degree>");
      cfg.relations.push_back({std::string(tok[0]), std::string(tok[1]), std::string(tok[2]),
                               parse_number<std::size_t>(tok[3], source, lineno, "degree")});
    } else if (key == "target") {
      cfg.target = std::string(value);
    } else if (key == "planted_path") {
      cfg.planted_path = std::string(value);
    } else if (key == "noise_path") {
      cfg.noise_paths.emplace_back(value);
    } else if (key == "num_classes") {
      cfg.num_classes = parse_number<std::size_t>(value, source, lineno, "num_classes");
    } else if (key == "signal_strength") {
      cfg.signal_strength = parse_number<double>(value, source, lineno, "signal_strength");
    } else if (key == "noise_scale") {
      cfg.noise_scale = parse_number<double>(value, source, lineno, "noise_scale");
    } else if (key == "train_frac") {
      cfg.train_frac = parse_number<double>(value, source, lineno, "train_frac");
    } else if (key == "val_frac") {
      cfg.val_frac = parse_number<double>(value, source, lineno, "val_frac");
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, source, lineno, "seed");
    } else {
      throw DataError(source, lineno, "unknown key '" + std::string(key) + "'");
    }
  }
  return cfg;
}

std::string SynthConfig::to_text() const {
  std::ostringstream out;
  for (const auto& n : node_types) out << "nodetype = " << n.name << ' ' << n.letter << ' ' << n.count << ' ' << n.feature_dim << '\n';
  for (const auto& r : relations) out << "relation = " << r.name << ' ' << r.a << ' ' << r.b << ' ' << r.degree << '\n';
  out << "target = " << target << '\n';
  out << "planted_path = " << planted_path << '\n';
  for (const auto& p : noise_paths) out << "noise_path = " << p << '\n';
  out << "num_classes = " << num_classes << '\n';
  out << "signal_strength = " << io::format_double(signal_strength) << '\n';
  out << "noise_scale = " << io::format_double(noise_scale) << '\n';
  out << "train_frac = " << io::format_double(train_frac) << '\n';
  out << "val_frac = " << io::format_double(val_frac) << '\n';
  out << "seed = " << seed << '\n';
  return out.str();
}

SynthConfig SynthConfig::preset(std::string_view name) {
  SynthConfig c;
  if (name == "planted") {
    c.node_types = {{"author", 'A', 2000, 16}, {"paper", 'P', 2000, 16}, {"venue", 'V', 200, 16},
                    {"conference", 'C', 60, 16}, {"term", 'T', 400, 16}};
    c.relations = {{"writes", "author", "paper", 1}, {"published", "paper", "venue", 1},
                   {"held", "venue", "conference", 1}, {"mentions", "paper", "term", 2}};
    c.target = "author";
    c.planted_path = "APVC";
    c.noise_paths = {"AP", "APT", "APV"};
    c.num_classes = 3;
    return c;
  }
  if (name == "bench") {
    c.node_types = {{"author", 'A', 2000, 32}, {"paper", 'P', 4000, 32}, {"term", 'T', 1000, 32}, {"venue", 'V', 20, 32}};
    c.relations = {{"writes", "author", "paper", 2}, {"mentions", "paper", "term", 3}, {"published", "paper", "venue", 1}};
    c.target = "author";
    c.planted_path = "APV";
    c.noise_paths = {"AP", "APT"};
    return c;
  }
  throw UsageError("unknown synth preset '" + std::string(name) + "' (expected planted or bench)");
}

SchemaGraph SynthConfig::schema() const {
  SchemaGraph s;
  for (const auto& n : node_types) s.node_types.push_back({n.name, n.count, n.feature_dim, n.letter});
  auto type_of = [&](const std::string& name) {
    const auto t = s.find_node_type(name);
    if (!t) throw DataError("synth config: relation references unknown node type '" + name + "'");
    return *t;
  };
  for (const auto& r : relations) {
    const auto a = type_of(r.a);
    const auto b = type_of(r.b);
    s.edge_types.push_back({r.name, a, b});
    s.edge_types.push_back({r.name + "_rev", b, a});
  }
  const auto t = s.find_node_type(target);
  if (!t) throw DataError("synth config: unknown target type '" + target + "'");
  s.target = *t;
  s.num_classes = num_classes;
  s.validate();
  return s;
}

void SynthConfig::validate() const {
  const auto s = schema();
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) throw DataError("synth config: signal_strength must be in [0,1]");
  if (!(noise_scale > 0.0)) throw DataError("synth config: noise_scale must be positive");
  if (num_classes < 2) throw DataError("synth config: num_classes must be at least 2");
  if (!(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0))
    throw DataError("synth config: train_frac and val_frac must be positive and sum below 1");
  for (const auto& n : node_types) {
    if (n.count == 0) throw DataError("synth config: node type '" + n.name + "' has no nodes");
  }
  for (const auto& r : relations) {
    const auto b = *s.find_node_type(r.b);
    if (r.degree < 1 || r.degree > s.node_types[b].count)
      throw DataError("synth config: relation '" + r.name + "' degree out of range");
  }
  const auto planted = parse_path(planted_path, s);
  if (planted.hops() == 0) throw DataError("synth config: planted path needs at least one hop");
  if (s.node_types[planted.end_type()].feature_dim == 0)
    throw DataError("synth config: planted path ends at a featureless type");
  for (const auto& n : noise_paths) {
    const auto p = parse_path(n, s);
    if (p.end_type() == planted.end_type())
      throw DataError("synth config: noise path '" + n + "' ends at the planted path's end type");
  }
}

SynthDataset generate_planted_hin(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset ds;
  Hin& h = ds.hin;
  h.schema = cfg.schema();
  const auto& schema = h.schema;
  ds.planted = parse_path(cfg.planted_path, schema);
  for (const auto& n : cfg.noise_paths) ds.noise.push_back(parse_path(n, schema));

  const RngStream root(cfg.seed, RngPurpose::kSynth);

  // Edges: `degree` distinct b-neighbours per a node, then one link for every b left uncovered.
  for (std::size_t r = 0; r < cfg.relations.size(); ++r) {
    const auto& rel = cfg.relations[r];
    const auto& fwd = schema.edge_types[2 * r];
    const std::size_t na = schema.node_types[fwd.src].count;
    const std::size_t nb = schema.node_types[fwd.dst].count;
    auto rng = root.substream("edges").substream(rel.name);
    std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<bool> covered(nb, false);
    for (std::uint32_t a = 0; a < na; ++a) {
      std::set<std::uint32_t> picked;
      while (picked.size() < rel.degree) picked.insert(static_cast<std::uint32_t>(rng.uniform_below(nb)));
      for (auto b : picked) {
        pairs.emplace(a, b);
        covered[b] = true;
      }
    }
    for (std::uint32_t b = 0; b < nb; ++b) {
      if (!covered[b]) pairs.emplace(static_cast<std::uint32_t>(rng.uniform_below(na)), b);
    }
    std::vector<SparseAdjacency::Entry> ab, ba;
    for (const auto& [a, b] : pairs) {
      ab.push_back({a, b, 1.0});
      ba.push_back({b, a, 1.0});
    }
    h.adjacency.push_back(SparseAdjacency::from_entries(na, nb, std::move(ab)));
    h.adjacency.push_back(SparseAdjacency::from_entries(nb, na, std::move(ba)));
  }

  const std::size_t end = ds.planted.end_type();
  const std::size_t dim = schema.node_types[end].feature_dim;
  const double s = cfg.signal_strength;
  const double sigma = cfg.noise_scale;

  // Class centroids, pairwise at least 2 sigma apart.
  std::vector<std::vector<double>> centroids;
  auto crng = root.substream("centroids");
  while (centroids.size() < cfg.num_classes) {
    std::vector<double> c(dim);
    for (auto& v : c) v = crng.normal();
    const bool far = std::all_of(centroids.begin(), centroids.end(), [&](const std::vector<double>& o) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) d2 += (c[j] - o[j]) * (c[j] - o[j]);
      return std::sqrt(d2) >= 2.0 * sigma;
    });
    if (far) centroids.push_back(std::move(c));
  }

  // Latent class and weight per end-type node.
  const std::size_t n_end = schema.node_types[end].count;
  std::vector<std::uint32_t> latent(n_end);
  std::vector<double> weight(n_end);
  auto lrng = root.substream("latent");
  for (std::size_t i = 0; i < n_end; ++i) {
    latent[i] = static_cast<std::uint32_t>(lrng.uniform_below(cfg.num_classes));
    weight[i] = lrng.uniform(0.5, 1.5);
  }

  h.features.resize(schema.node_types.size());
  for (std::size_t t = 0; t < schema.node_types.size(); ++t) {
    const auto& nt = schema.node_types[t];
    if (nt.feature_dim == 0) continue;
    FeatureMatrix f(nt.count, nt.feature_dim);
    auto frng = root.substream("features").substream(nt.name);
    for (std::size_t i = 0; i < nt.count; ++i) {
      for (std::size_t j = 0; j < nt.feature_dim; ++j) {
        const double noise = sigma * frng.normal();
        const double v = t == end ? s * weight[i] * centroids[latent[i]][j] + (1.0 - s) * noise : noise;
        f(i, j) = static_cast<float>(v);
      }
    }
    h.features[t] = std::move(f);
  }

  // Labels: walk every planted-path instance from each target node, weighting
  // each step by 1/(number of neighbours), and take the heaviest class.
  const auto& path = ds.planted;
  std::vector<std::vector<std::vector<std::uint32_t>>> in_nbrs(path.hops());
  for (std::size_t i = 0; i < path.hops(); ++i) {
    const auto& adj = h.adjacency[path.edge_types[i]];
    in_nbrs[i].resize(adj.cols());
    for (std::size_t src = 0; src < adj.rows(); ++src) {
      for (auto dst : adj.row_cols(src)) in_nbrs[i][dst].push_back(static_cast<std::uint32_t>(src));
    }
  }
  std::vector<double> mass(cfg.num_classes);
  auto walk = [&](auto&& self, std::size_t step, std::uint32_t node, double coeff) -> void {
    if (step == path.hops()) {
      mass[latent[node]] += coeff * weight[node];
      return;
    }
    const auto& nb = in_nbrs[step][node];
    for (auto next : nb) self(self, step + 1, next, coeff / static_cast<double>(nb.size()));
  };
  const std::size_t n = schema.target_type().count;
  h.labels.mode = LabelMode::kSingle;
  h.labels.num_classes = cfg.num_classes;
  h.labels.classes.resize(n);
  for (std::uint32_t v = 0; v < n; ++v) {
    std::fill(mass.begin(), mass.end(), 0.0);
    walk(walk, 0, v, 1.0);
    h.labels.classes[v] = static_cast<std::uint32_t>(std::max_element(mass.begin(), mass.end()) - mass.begin());
  }

  // Splits from a seeded permutation.
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) perm[i] = i;
  auto srng = root.substream("splits");
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[srng.uniform_below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_frac * static_cast<double>(n)));
  h.splits.assign(n, Split::kTest);
  for (std::size_t i = 0; i < n_train && i < n; ++i) h.splits[perm[i]] = Split::kTrain;
  for (std::size_t i = n_train; i < n_train + n_val && i < n; ++i) h.splits[perm[i]] = Split::kVal;

  h.validate();

  std::string gt;
  auto row = [&](const char* kind, const MetaPath& p) {
    std::string edges;
    for (std::size_t i = 0; i < p.edge_types.size(); ++i) edges += (i ? "," : "") + schema.edge_types[p.edge_types[i]].name;
    gt += std::string(kind) + "\t" + format_path(p, schema) + "\t" + std::to_string(p.hops()) + "\t" + edges + "\n";
  };
  row("planted", ds.planted);
  for (const auto& p : ds.noise) row("noise", p);
  gt += "signal_strength\t" + io::format_double(cfg.signal_strength) + "\n";
  gt += "num_classes\t" + std::to_string(cfg.num_classes) + "\n";
  gt += "seed\t" + std::to_string(cfg.seed) + "\n";
  ds.ground_truth_tsv = std::move(gt);
  return ds;
}

void write_synth_dataset(const SynthDataset& ds, const std::filesystem::path& dir) {
  save_dataset(ds.hin, dir);
  io::write_file_atomic(dir / "ground_truth.tsv", ds.ground_truth_tsv);
}

}  // namespace hinpath
