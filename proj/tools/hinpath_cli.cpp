// hinpath: meta-path enumeration, feature precompute, path search, target
// training, ablation, benchmarking and synthetic data generation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "hinpath/datagen.hpp"
#include "hinpath/errors.hpp"
#include "hinpath/io.hpp"
#include "hinpath/kernels.hpp"
#include "hinpath/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hinpath;

namespace {

struct Cli {
  RunConfig run;
  fs::path out = "out";
  std::string precision = "float";
  std::vector<std::string> argv;

  // train / ablate
  std::string paths_file;
  std::vector<std::string> modes;
  std::size_t repeats = 10;
  // bench
  std::vector<std::size_t> hops{4, 8};
  std::size_t bench_search_epochs = 5;
  std::size_t bench_train_epochs = 5;
  std::size_t bench_repeats = 1;
  bool no_full_control = false;
  // gen-synth / bench
  std::string preset;
  std::string synth_config;
  std::optional<std::uint64_t> synth_seed_override;
  std::optional<double> signal_override;
  // sparsify
  std::size_t cap = 0;
  std::uint64_t sparsify_seed = 0;
};

void finish(const Cli& c, const std::string& command) {
  fs::create_directories(c.out);
  io::write_file_atomic(c.out / "run_meta.tsv", run_meta_tsv(c.run, command, c.argv));
}

void require_dataset(const Cli& c) {
  if (c.run.dataset.empty()) throw UsageError("--dataset is required");
}

std::vector<MetaPath> read_paths(const fs::path& file, const SchemaGraph& schema) {
  return parse_path_list(io::read_file(file), schema, file.string());
}

int cmd_enumerate(Cli& c) {
  require_dataset(c);
  const auto schema = SchemaGraph::parse(io::read_file(c.run.dataset / "schema.tsv"),
                                         (c.run.dataset / "schema.tsv").string());
  const auto paths = enumerate_metapaths(schema, c.run.max_hop, c.run.exclude_types);
  for (const auto& p : paths) std::cout << format_path(p, schema) << '\n';
  fs::create_directories(c.out);
  io::write_file_atomic(c.out / "paths.tsv", paths_to_tsv(paths, schema));
  finish(c, "enumerate");
  return 0;
}

int cmd_precompute(Cli& c) {
  require_dataset(c);
  if (!c.run.cache_dir) c.run.cache_dir = c.out / "cache";
  const auto prep = prepare(c.run);
  fs::create_directories(c.out);
  io::write_file_atomic(c.out / "paths.tsv", paths_to_tsv(prep.paths, prep.hin.schema));
  std::printf("paths\t%zu\nspmm_calls\t%zu\ncache_hits\t%zu\ncache_writes\t%zu\nseconds\t%.3f\n", prep.feats.size(),
              prep.stats.spmm_calls, prep.stats.cache_hits, prep.stats.cache_writes, prep.precompute_seconds);
  finish(c, "precompute");
  return 0;
}

int cmd_search(Cli& c) {
  require_dataset(c);
  const auto prep = prepare(c.run);
  const auto outcome = run_search(prep.feats, Supervision::of(prep.hin), c.run);
  write_search_artifacts(outcome, c.out);
  std::printf("candidates\t%zu\nchosen_seed\t%llu\n", prep.feats.size(),
              static_cast<unsigned long long>(outcome.result.chosen().seed));
  for (const auto& p : outcome.derived) std::printf("derived\t%s\n", p.c_str());
  finish(c, "search");
  return 0;
}

fs::path selected_paths_file(const Cli& c) {
  if (!c.paths_file.empty()) return c.paths_file;
  const auto derived = c.out / "derived_paths.txt";
  if (!fs::exists(derived))
    throw UsageError("no " + derived.string() + "; run search with the same --out or pass --paths");
  return derived;
}

int cmd_train(Cli& c) {
  require_dataset(c);
  auto hin = load_dataset(c.run.dataset);
  if (c.run.synth_dim > 0) hin = with_synthesized_features(hin, c.run.synth_dim, c.run.synth_seed);
  const auto paths = read_paths(selected_paths_file(c), hin.schema);
  if (paths.empty()) throw DataError("path list is empty");
  Aggregator agg(hin, c.run.normalize);
  const auto feats = agg.precompute_all(paths, c.run.cache_dir);
  const auto run = run_train(feats, Supervision::of(hin), c.run, c.run.seed_list().front());
  write_train_artifacts(run, c.out);
  std::fputs(train_report_tsv(run).c_str(), stdout);
  finish(c, "train");
  return 0;
}

int cmd_ablate(Cli& c) {
  require_dataset(c);
  auto hin = load_dataset(c.run.dataset);
  if (c.run.synth_dim > 0) hin = with_synthesized_features(hin, c.run.synth_dim, c.run.synth_seed);
  std::vector<MetaPath> paths;
  if (!c.paths_file.empty() || fs::exists(c.out / "derived_paths.txt")) {
    paths = read_paths(selected_paths_file(c), hin.schema);
  } else {
    paths = enumerate_metapaths(hin.schema, c.run.max_hop, c.run.exclude_types);
  }
  Aggregator agg(hin, c.run.normalize);
  const auto feats = agg.precompute_all(paths, c.run.cache_dir);
  const auto sup = Supervision::of(hin);
  std::vector<std::string> modes = c.modes.empty() ? std::vector<std::string>{"all"} : c.modes;
  std::vector<AblationRow> rows;
  for (const auto& m : modes) rows.push_back(run_ablate(feats, sup, AblationMode::parse(m), c.run, c.repeats));
  fs::create_directories(c.out);
  const auto tsv = ablation_tsv(rows);
  io::write_file_atomic(c.out / "ablation_report.tsv", tsv);
  std::fputs(tsv.c_str(), stdout);
  finish(c, "ablate");
  return 0;
}

SynthConfig synth_config(const Cli& c, const char* default_preset) {
  SynthConfig cfg = !c.synth_config.empty()
                        ? SynthConfig::parse(io::read_file(c.synth_config), c.synth_config)
                        : SynthConfig::preset(c.preset.empty() ? default_preset : c.preset);
  if (c.synth_seed_override) cfg.seed = *c.synth_seed_override;
  if (c.signal_override) cfg.signal_strength = *c.signal_override;
  return cfg;
}

int cmd_bench(Cli& c) {
  Hin hin = !c.run.dataset.empty() ? load_dataset(c.run.dataset) : generate_planted_hin(synth_config(c, "bench")).hin;
  if (c.run.synth_dim > 0) hin = with_synthesized_features(hin, c.run.synth_dim, c.run.synth_seed);
  BenchOptions opt;
  opt.hops = c.hops;
  opt.repeats = c.bench_repeats;
  opt.search_epochs = c.bench_search_epochs;
  opt.train_epochs = c.bench_train_epochs;
  opt.full_control = !c.no_full_control;
  const auto csv = bench_csv(bench_epoch_time_vs_hop(hin, c.run, opt));
  fs::create_directories(c.out);
  io::write_file_atomic(c.out / "bench.csv", csv);
  std::fputs(csv.c_str(), stdout);
  finish(c, "bench");
  return 0;
}

int cmd_gen_synth(Cli& c) {
  const auto cfg = synth_config(c, "planted");
  const auto ds = generate_planted_hin(cfg);
  write_synth_dataset(ds, c.out);
  io::write_file_atomic(c.out / "synth_config.txt", cfg.to_text());
  std::fputs(ds.ground_truth_tsv.c_str(), stdout);
  finish(c, "gen-synth");
  return 0;
}

int cmd_sparsify(Cli& c) {
  require_dataset(c);
  const auto hin = load_dataset(c.run.dataset);
  const auto sparse = sparsify_by_in_degree_cap(hin, c.cap, c.sparsify_seed);
  save_dataset(sparse, c.out);
  std::printf("edges_before\t%zu\nedges_after\t%zu\n", hin.edge_count(), sparse.edge_count());
  finish(c, "sparsify");
  return 0;
}

void print_error(const std::string& kind, const std::string& what) {
  std::string msg = what;
  for (auto& ch : msg) {
    if (ch == '\n' || ch == '\t') ch = ' ';
  }
  std::fprintf(stderr, "error\t%s\t%s\n", kind.c_str(), msg.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  Cli c;
  c.argv.assign(argv, argv + argc);

  CLI::App app{"hinpath: long-range meta-path search and MLP training on heterogeneous graphs"};
  app.set_config("--config", "", "key = value file; command-line flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  auto& r = c.run;
  app.add_option("--dataset", r.dataset, "dataset directory");
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--max-hop", r.max_hop, "maximum meta-path hop count")->capture_default_str();
  app.add_option("--exclude", r.exclude_types, "node types no path may visit");
  app.add_option("--m", r.m, "paths sampled per search epoch and kept for training")->capture_default_str();
  app.add_option("--hidden", r.hidden, "hidden width of every MLP")->capture_default_str();
  app.add_option("--lr", r.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--wd", r.weight_decay, "Adam weight decay")->capture_default_str();
  app.add_option("--dropout", r.dropout, "dropout on hidden activations")->capture_default_str();
  app.add_option("--search-epochs", r.search_epochs)->capture_default_str();
  auto* n_seeds = app.add_option("--n-seeds", r.n_seeds, "search seeds 1..n")->capture_default_str();
  app.add_option("--seeds", r.seeds, "explicit seed list")->delimiter(',')->excludes(n_seeds);
  app.add_option("--patience", r.patience, "early-stopping patience")->capture_default_str();
  app.add_option("--max-epochs", r.max_epochs, "target training epoch cap")->capture_default_str();
  app.add_option("--batch-size", r.batch_size, "target-training nodes per step (0 = full batch)")->capture_default_str();
  app.add_option("--threads", r.threads, "worker threads (1 = deterministic)")->capture_default_str();
  app.add_option("--precision", c.precision, "float or double")
      ->check(CLI::IsMember({"float", "double"}))
      ->capture_default_str();
  app.add_option("--cache-dir", r.cache_dir, "feature cache directory");
  app.add_option("--synth-dim", r.synth_dim, "pseudo-random feature width for featureless types");
  app.add_option("--synth-seed", r.synth_seed, "seed for synthesized features");
  bool no_normalize = false;
  app.add_flag("--no-normalize", no_normalize, "use raw adjacency values");

  auto* enumerate = app.add_subcommand("enumerate", "list candidate meta-paths");
  auto* precompute = app.add_subcommand("precompute", "aggregate and cache per-path features");
  auto* search = app.add_subcommand("search", "multi-seed super-net search; writes derived_paths.txt");
  auto* train = app.add_subcommand("train", "train the target net on derived or given paths");
  train->add_option("--paths", c.paths_file, "path list (default: <out>/derived_paths.txt)");
  auto* ablate = app.add_subcommand("ablate", "drop/keep ablations over a path set");
  ablate->add_option("--paths", c.paths_file, "candidate path list");
  ablate->add_option("--mode", c.modes, "all | drop:<p>[,<p>] | keep:<p>[,<p>] (repeatable)");
  ablate->add_option("--repeats", c.repeats, "trainings per mode")->capture_default_str();
  auto* bench = app.add_subcommand("bench", "per-epoch time and memory against max hop");
  auto* gen = app.add_subcommand("gen-synth", "write a synthetic dataset with a planted meta-path");
  for (auto* sub : {bench, gen}) {
    auto* preset = sub->add_option("--preset", c.preset, "planted or bench");
    sub->add_option("--synth-config", c.synth_config, "generator config file")->excludes(preset);
    sub->add_option("--synth-data-seed", c.synth_seed_override, "override the generator seed");
    sub->add_option("--signal", c.signal_override, "override signal strength");
  }
  bench->add_option("--hops", c.hops, "hop values")->delimiter(',')->capture_default_str();
  bench->add_option("--repeats", c.bench_repeats)->capture_default_str();
  bench->add_option("--bench-search-epochs", c.bench_search_epochs)->capture_default_str();
  bench->add_option("--bench-train-epochs", c.bench_train_epochs)->capture_default_str();
  bench->add_flag("--no-full-control", c.no_full_control, "skip the all-candidates control run");
  auto* sparsify = app.add_subcommand("sparsify", "cap per-edge-type in-degree");
  sparsify->add_option("--cap", c.cap, "maximum in-degree")->required();
  sparsify->add_option("--seed", c.sparsify_seed, "edge selection seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return static_cast<int>(ExitCode::kUsage);
  }
  r.normalize = !no_normalize;
  r.precision = c.precision == "double" ? Precision::kDouble : Precision::kFloat;
  kernels::set_num_threads(r.threads);

  try {
    if (*enumerate) return cmd_enumerate(c);
    if (*precompute) return cmd_precompute(c);
    if (*search) return cmd_search(c);
    if (*train) return cmd_train(c);
    if (*ablate) return cmd_ablate(c);
    if (*bench) return cmd_bench(c);
    if (*gen) return cmd_gen_synth(c);
    if (*sparsify) return cmd_sparsify(c);
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    print_error("data", e.what());
    return static_cast<int>(ExitCode::kData);
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
