#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hinpath/hin.hpp"
#include "hinpath/metapath.hpp"

namespace hinpath {

struct SynthNodeType {
  std::string name;
  char letter = '\0';
  std::size_t count = 0;
  std::size_t feature_dim = 0;
};

/// Symmetric relation between two node types, stored as two directed edge
/// types `<name>` (a -> b) and `<name>_rev` (b -> a).
struct SynthRelation {
  std::string name;
  std::string a;
  std::string b;
  std::size_t degree = 1;  // edges drawn per `a` node
};

/// Generator settings. Text form is `key = value` lines with `#` comments;
/// `nodetype`, `relation` and `noise_path` may repeat:
///   nodetype = <name> <letter> <count> <feature_dim>
///   relation = <name> <type_a> <type_b> <degree>
///   target = <name>
///   planted_path = <letters>
///   noise_path = <letters>
///   num_classes, signal_strength, noise_scale, train_frac, val_frac, seed
struct SynthConfig {
  std::vector<SynthNodeType> node_types;
  std::vector<SynthRelation> relations;
  std::string target;
  std::string planted_path;
  std::vector<std::string> noise_paths;
  std::size_t num_classes = 4;
  double signal_strength = 0.9;
  double noise_scale = 1.0;
  double train_frac = 0.24;
  double val_frac = 0.06;
  std::uint64_t seed = 1;

  static SynthConfig parse(std::string_view text, const std::string& source = "synth config");
  std::string to_text() const;

  /// "planted": author/paper/venue/conference/term graph, 2000 targets,
  /// planted APVC. "bench": DBLP-shaped author/paper/term/venue graph.
  static SynthConfig preset(std::string_view name);

  SchemaGraph schema() const;
  /// Throws DataError when a path does not fit the schema or the config is out of range.
  void validate() const;
};

struct SynthDataset {
  Hin hin;
  MetaPath planted;
  std::vector<MetaPath> noise;
  std::string ground_truth_tsv;
};

/// Random symmetric relations (every node gets at least one neighbour per
/// relation), class-bearing features on the planted path's end type, noise
/// features elsewhere, and labels = argmax class of the planted path's
/// aggregated class weights, computed by enumerating path instances.
SynthDataset generate_planted_hin(const SynthConfig& cfg);

/// Dataset layout plus `ground_truth.tsv`.
void write_synth_dataset(const SynthDataset& ds, const std::filesystem::path& dir);

}  // namespace hinpath
