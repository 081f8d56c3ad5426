#include "hinpath/metapath.hpp"

#include <algorithm>
#include <set>

#include "hinpath/io.hpp"

namespace hinpath {

std::string path_letters(const MetaPath& p, const SchemaGraph& schema) {
  std::string s;
  s.reserve(p.node_types.size());
  for (auto t : p.node_types) s.push_back(schema.node_types[t].letter);
  return s;
}

namespace {

// Edge types that aggregate `src` nodes into `dst` nodes.
std::vector<std::size_t> connecting_edges(const SchemaGraph& schema, std::size_t dst, std::size_t src) {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < schema.edge_types.size(); ++e) {
    if (schema.edge_types[e].dst == dst && schema.edge_types[e].src == src) out.push_back(e);
  }
  return out;
}

std::size_t letter_type(const SchemaGraph& schema, char c, std::string_view s) {
  const auto t = schema.node_type_by_letter(c);
  if (!t) throw DataError("path '" + std::string(s) + "': unknown letter '" + std::string(1, c) + "'");
  return *t;
}

}  // namespace

MetaPath parse_path(std::string_view s, const SchemaGraph& schema) {
  const auto at = s.find('@');
  const auto letters = s.substr(0, at);
  if (letters.empty()) throw DataError("path '" + std::string(s) + "': empty");
  MetaPath p;
  for (char c : letters) p.node_types.push_back(letter_type(schema, c, s));
  if (p.node_types.front() != schema.target)
    throw DataError("path '" + std::string(s) + "': must start at the target type '" + schema.target_type().name + "'");

  if (at != std::string_view::npos) {
    const auto names = io::split(s.substr(at + 1), ',');
    if (names.size() != p.node_types.size() - 1)
      throw DataError("path '" + std::string(s) + "': edge list length differs from hop count");
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto e = schema.find_edge_type(names[i]);
      if (!e) throw DataError("path '" + std::string(s) + "': unknown edge type '" + std::string(names[i]) + "'");
      const auto& et = schema.edge_types[*e];
      if (et.dst != p.node_types[i] || et.src != p.node_types[i + 1])
        throw DataError("path '" + std::string(s) + "': edge type '" + et.name + "' does not connect " +
                        std::string(1, letters[i]) + " and " + std::string(1, letters[i + 1]));
      p.edge_types.push_back(*e);
    }
    return p;
  }

  for (std::size_t i = 0; i + 1 < p.node_types.size(); ++i) {
    auto edges = connecting_edges(schema, p.node_types[i], p.node_types[i + 1]);
    const auto pair = std::string(1, letters[i]) + std::string(1, letters[i + 1]);
    if (edges.empty()) throw DataError("path '" + std::string(s) + "': no edge type connecting " + pair);
    if (edges.size() > 1) {
      std::vector<std::size_t> preferred;
      for (auto e : edges) {
        if (std::find(schema.preferred_edges.begin(), schema.preferred_edges.end(), e) != schema.preferred_edges.end())
          preferred.push_back(e);
      }
      if (preferred.size() != 1) throw DataError("path '" + std::string(s) + "': ambiguous letter pair " + pair);
      edges = preferred;
    }
    p.edge_types.push_back(edges.front());
  }
  return p;
}

std::string format_path(const MetaPath& p, const SchemaGraph& schema) {
  auto letters = path_letters(p, schema);
  try {
    if (parse_path(letters, schema) == p) return letters;
  } catch (const DataError&) {
  }
  letters.push_back('@');
  for (std::size_t i = 0; i < p.edge_types.size(); ++i) {
    if (i > 0) letters.push_back(',');
    letters += schema.edge_types[p.edge_types[i]].name;
  }
  return letters;
}

std::vector<MetaPath> enumerate_metapaths(const SchemaGraph& schema, std::size_t max_hop,
                                          const std::vector<std::string>& exclude_types) {
  std::vector<bool> excluded(schema.node_types.size(), false);
  for (const auto& name : exclude_types) {
    const auto t = schema.find_node_type(name);
    if (!t) throw DataError("enumerate: unknown excluded node type '" + name + "'");
    excluded[*t] = true;
  }
  std::vector<MetaPath> out;
  if (excluded[schema.target]) return out;

  std::vector<MetaPath> frontier{MetaPath{{schema.target}, {}}};
  for (std::size_t hop = 0;; ++hop) {
    out.insert(out.end(), frontier.begin(), frontier.end());
    if (hop == max_hop) break;
    std::vector<MetaPath> next;
    for (const auto& p : frontier) {
      for (std::size_t e = 0; e < schema.edge_types.size(); ++e) {
        const auto& et = schema.edge_types[e];
        if (et.dst != p.end_type() || excluded[et.src]) continue;
        MetaPath q = p;
        q.node_types.push_back(et.src);
        q.edge_types.push_back(e);
        next.push_back(std::move(q));
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }

  std::vector<std::pair<std::string, MetaPath>> keyed;
  keyed.reserve(out.size());
  for (auto& p : out) keyed.emplace_back(format_path(p, schema), std::move(p));
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.second.hops() != b.second.hops()) return a.second.hops() < b.second.hops();
    return a.first < b.first;
  });
  out.clear();
  for (auto& [_, p] : keyed) out.push_back(std::move(p));
  return out;
}

std::string paths_to_tsv(const std::vector<MetaPath>& paths, const SchemaGraph& schema) {
  std::string out;
  for (const auto& p : paths) {
    out += format_path(p, schema);
    out += '\t';
    out += std::to_string(p.hops());
    out += '\t';
    for (std::size_t i = 0; i < p.edge_types.size(); ++i) {
      if (i > 0) out += ',';
      out += schema.edge_types[p.edge_types[i]].name;
    }
    out += '\n';
  }
  return out;
}

std::vector<MetaPath> parse_path_list(std::string_view text, const SchemaGraph& schema, const std::string& source) {
  std::vector<MetaPath> out;
  std::size_t lineno = 0;
  for (auto line : io::split(text, '\n')) {
    ++lineno;
    line = io::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto field = io::trim(io::split(line, '\t').front());
    try {
      out.push_back(parse_path(field, schema));
    } catch (const DataError& e) {
      throw DataError(source, lineno, e.what());
    }
  }
  return out;
}

}  // namespace hinpath
