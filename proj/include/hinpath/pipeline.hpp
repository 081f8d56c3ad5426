#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hinpath/aggregate.hpp"
#include "hinpath/hin.hpp"
#include "hinpath/metapath.hpp"
#include "hinpath/search.hpp"
#include "hinpath/target.hpp"

namespace hinpath {

inline constexpr const char* kVersion = "0.1.0";

enum class Precision { kFloat, kDouble };

struct RunConfig {
  std::filesystem::path dataset;
  std::size_t max_hop = 3;
  std::vector<std::string> exclude_types;
  std::size_t m = 20;
  std::size_t hidden = 512;
  double lr = 1e-3;
  double weight_decay = 0.0;
  double dropout = 0.5;
  std::size_t search_epochs = 50;
  std::size_t n_seeds = 3;
  std::vector<std::uint64_t> seeds;  // empty: 1..n_seeds
  std::size_t patience = 30;
  std::size_t max_epochs = 500;
  std::size_t batch_size = 64;  // target training; 0 = full batch
  std::size_t threads = 1;
  Precision precision = Precision::kFloat;
  bool normalize = true;
  std::optional<std::filesystem::path> cache_dir;
  std::size_t synth_dim = 0;  // > 0: give featureless types pseudo-random features of this width
  std::uint64_t synth_seed = 0;

  std::vector<std::uint64_t> seed_list() const;
  SearchConfig search_config() const;
  TargetConfig target_config() const;

  /// Canonical `key = value` text; its SHA-256 is the config hash.
  std::string to_text() const;
  std::string hash() const;
};

struct Prepared {
  Hin hin;
  std::vector<MetaPath> paths;
  PathFeatureSet feats;
  double precompute_seconds = 0.0;
  AggregateStats stats;
};

/// Load, optionally synthesize features, enumerate and precompute.
Prepared prepare(const RunConfig& cfg);
/// Same, on a graph already in memory.
Prepared prepare(Hin hin, const RunConfig& cfg);

struct SearchOutcome {
  MultiSeedResult result;
  std::vector<std::string> derived;  // top-M of the chosen report, strongest first
};

SearchOutcome run_search(const PathFeatureSet& feats, const Supervision& sup, const RunConfig& cfg);
TargetRun run_train(const PathFeatureSet& selected, const Supervision& sup, const RunConfig& cfg, std::uint64_t seed);
AblationRow run_ablate(const PathFeatureSet& feats, const Supervision& sup, const AblationMode& mode,
                       const RunConfig& cfg, std::size_t repeats);

/// search_report.tsv, derived_paths.txt, search_seeds.tsv and one
/// search_trace_seed<seed>.csv per seed.
void write_search_artifacts(const SearchOutcome& s, const std::filesystem::path& out);
/// checkpoint.hinp, train_report.tsv and train_trace.csv.
void write_train_artifacts(const TargetRun& r, const std::filesystem::path& out);

std::string train_report_tsv(const TargetRun& r);

/// command, argv, config hash, seeds, thread count, precision and versions.
std::string run_meta_tsv(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& argv);

struct BenchOptions {
  std::vector<std::size_t> hops;
  std::size_t repeats = 1;
  std::size_t search_epochs = 5;
  std::size_t train_epochs = 5;
  bool full_control = true;  // also run with every candidate sampled and trained
};

struct BenchRow {
  std::size_t hop = 0;
  std::string mode;  // "sampled" or "full"
  std::size_t candidates = 0;
  std::size_t sampled = 0;
  double precompute_seconds = 0.0;
  double search_epoch_mean = 0.0;
  double search_epoch_std = 0.0;
  double train_epoch_mean = 0.0;
  double train_epoch_std = 0.0;
  std::size_t peak_matrix_bytes = 0;
};

/// Per hop: enumerate, precompute (timed on its own), then fixed-epoch search
/// and target training; per-epoch wall times exclude precompute.
std::vector<BenchRow> bench_epoch_time_vs_hop(const Hin& h, const RunConfig& cfg, const BenchOptions& opt);
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace hinpath
