#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "hinpath/hin.hpp"

namespace hinpath {

/// Typed relation chain read target <- ... <- source. Step i aggregates
/// node_types[i+1] into node_types[i] along edge_types[i], so that edge type's
/// dst is node_types[i] and its src is node_types[i+1].
struct MetaPath {
  std::vector<std::size_t> node_types;  // node_types.front() is the target type
  std::vector<std::size_t> edge_types;

  std::size_t hops() const { return edge_types.size(); }
  std::size_t end_type() const { return node_types.back(); }

  auto operator<=>(const MetaPath&) const = default;
};

/// Concatenated node-type letters, e.g. "APV".
std::string path_letters(const MetaPath& p, const SchemaGraph& schema);

/// Letters, plus "@edge1,edge2,..." when the letters alone would parse to a
/// different path (two edge types joining the same type pair).
std::string format_path(const MetaPath& p, const SchemaGraph& schema);

/// Inverse of format_path. Throws DataError on unknown letters, missing or
/// ambiguous connections.
MetaPath parse_path(std::string_view s, const SchemaGraph& schema);

/// All paths rooted at the target type with at most `max_hop` hops, sorted by
/// (hop count, formatted string). Paths visiting an excluded type are dropped.
std::vector<MetaPath> enumerate_metapaths(const SchemaGraph& schema, std::size_t max_hop,
                                          const std::vector<std::string>& exclude_types = {});

/// `<string>\t<hop>\t<edge types comma-joined>` per line.
std::string paths_to_tsv(const std::vector<MetaPath>& paths, const SchemaGraph& schema);

/// Reads one path per line; only the first tab-separated field is used, blank
/// lines and '#' comments are skipped.
std::vector<MetaPath> parse_path_list(std::string_view text, const SchemaGraph& schema, const std::string& source);

}  // namespace hinpath
