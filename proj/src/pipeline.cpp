#include "hinpath/pipeline.hpp"

#include <chrono>
#include <sstream>

#include "hinpath/io.hpp"
#include "hinpath/kernels.hpp"

namespace hinpath {

std::vector<std::uint64_t> RunConfig::seed_list() const {
  if (!seeds.empty()) return seeds;
  if (n_seeds < 1) throw UsageError("n_seeds must be at least 1");
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 1; s <= n_seeds; ++s) out.push_back(s);
  return out;
}

SearchConfig RunConfig::search_config() const {
  SearchConfig s;
  s.sample_size = m;
  s.hidden = hidden;
  s.epochs = search_epochs;
  s.dropout = dropout;
  s.omega_adam.lr = lr;
  s.omega_adam.weight_decay = weight_decay;
  s.alpha_adam.lr = lr;
  s.alpha_adam.weight_decay = weight_decay;
  return s;
}

TargetConfig RunConfig::target_config() const {
  TargetConfig t;
  t.hidden = hidden;
  t.dropout = dropout;
  t.adam.lr = lr;
  t.adam.weight_decay = weight_decay;
  t.patience = patience;
  t.max_epochs = max_epochs;
  t.batch_size = batch_size;
  return t;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "dataset = " << dataset.string() << '\n';
  out << "max_hop = " << max_hop << '\n';
  out << "exclude =";
  for (const auto& t : exclude_types) out << ' ' << t;
  out << '\n';
  out << "m = " << m << '\n';
  out << "hidden = " << hidden << '\n';
  out << "lr = " << io::format_double(lr) << '\n';
  out << "weight_decay = " << io::format_double(weight_decay) << '\n';
  out << "dropout = " << io::format_double(dropout) << '\n';
  out << "search_epochs = " << search_epochs << '\n';
  out << "seeds =";
  for (auto s : seed_list()) out << ' ' << s;
  out << '\n';
  out << "patience = " << patience << '\n';
  out << "max_epochs = " << max_epochs << '\n';
  out << "batch_size = " << batch_size << '\n';
  out << "threads = " << threads << '\n';
  out << "precision = " << (precision == Precision::kFloat ? "float" : "double") << '\n';
  out << "normalize = " << (normalize ? "true" : "false") << '\n';
  out << "synth_dim = " << synth_dim << '\n';
  out << "synth_seed = " << synth_seed << '\n';
  return out.str();
}

std::string RunConfig::hash() const { return io::sha256_hex(to_text()); }

Prepared prepare(const RunConfig& cfg) { return prepare(load_dataset(cfg.dataset), cfg); }

Prepared prepare(Hin hin, const RunConfig& cfg) {
  kernels::set_num_threads(cfg.threads);
  Prepared p;
  p.hin = cfg.synth_dim > 0 ? with_synthesized_features(hin, cfg.synth_dim, cfg.synth_seed) : std::move(hin);
  p.paths = enumerate_metapaths(p.hin.schema, cfg.max_hop, cfg.exclude_types);
  const auto t0 = std::chrono::steady_clock::now();
  Aggregator agg(p.hin, cfg.normalize);
  p.feats = agg.precompute_all(p.paths, cfg.cache_dir);
  p.precompute_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  p.stats = agg.stats();
  return p;
}

SearchOutcome run_search(const PathFeatureSet& feats, const Supervision& sup, const RunConfig& cfg) {
  kernels::set_num_threads(cfg.threads);
  SearchOutcome out;
  out.result = cfg.precision == Precision::kFloat
                   ? multi_seed_search<float>(feats, sup, cfg.search_config(), cfg.seed_list())
                   : multi_seed_search<double>(feats, sup, cfg.search_config(), cfg.seed_list());
  out.derived = derive_top_m(out.result.chosen(), cfg.m);
  return out;
}

TargetRun run_train(const PathFeatureSet& selected, const Supervision& sup, const RunConfig& cfg, std::uint64_t seed) {
  kernels::set_num_threads(cfg.threads);
  return cfg.precision == Precision::kFloat ? train_target<float>(selected, sup, cfg.target_config(), seed)
                                            : train_target<double>(selected, sup, cfg.target_config(), seed);
}

AblationRow run_ablate(const PathFeatureSet& feats, const Supervision& sup, const AblationMode& mode,
                       const RunConfig& cfg, std::size_t repeats) {
  kernels::set_num_threads(cfg.threads);
  const auto seed = cfg.seed_list().front();
  return cfg.precision == Precision::kFloat
             ? ablate_run<float>(feats, sup, mode, cfg.target_config(), repeats, seed)
             : ablate_run<double>(feats, sup, mode, cfg.target_config(), repeats, seed);
}

void write_search_artifacts(const SearchOutcome& s, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  io::write_file_atomic(out / "search_report.tsv", s.result.chosen().to_tsv());
  std::string derived;
  for (const auto& p : s.derived) derived += p + "\n";
  io::write_file_atomic(out / "derived_paths.txt", derived);
  std::string seeds = "seed\tval_metric\tchosen\n";
  for (std::size_t i = 0; i < s.result.reports.size(); ++i) {
    const auto& r = s.result.reports[i];
    seeds += std::to_string(r.seed) + "\t" + io::format_double(r.val_metric) + "\t" + (i == s.result.best ? "1" : "0") + "\n";
    io::write_file_atomic(out / ("search_trace_seed" + std::to_string(r.seed) + ".csv"), r.trace_csv());
  }
  io::write_file_atomic(out / "search_seeds.tsv", seeds);
}

std::string train_report_tsv(const TargetRun& r) {
  std::string out;
  auto line = [&](const std::string& k, const std::string& v) { out += k + "\t" + v + "\n"; };
  std::string paths;
  for (std::size_t i = 0; i < r.paths.size(); ++i) paths += (i ? "," : "") + r.paths[i];
  line("paths", paths);
  line("epochs_run", std::to_string(r.epochs_run));
  line("best_epoch", std::to_string(r.best_epoch));
  for (const auto* e : {&r.val, &r.test}) {
    const std::string s = e == &r.val ? "val" : "test";
    line(s + "_accuracy", io::format_double(e->accuracy));
    line(s + "_micro_f1", io::format_double(e->micro_f1));
    line(s + "_macro_f1", io::format_double(e->macro_f1));
  }
  return out;
}

void write_train_artifacts(const TargetRun& r, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  io::write_file_atomic(out / "checkpoint.hinp", encode_checkpoint(r.best_checkpoint));
  io::write_file_atomic(out / "train_report.tsv", train_report_tsv(r));
  std::string trace = "epoch,train_loss,val_metric\n";
  for (const auto& t : r.trace) {
    trace += std::to_string(t.epoch) + "," + io::format_double(t.train_loss) + "," + io::format_double(t.val_metric) + "\n";
  }
  io::write_file_atomic(out / "train_trace.csv", trace);
}

std::string run_meta_tsv(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& argv) {
  std::string args;
  for (std::size_t i = 0; i < argv.size(); ++i) args += (i ? " " : "") + argv[i];
  std::string seeds;
  const auto list = cfg.seed_list();
  for (std::size_t i = 0; i < list.size(); ++i) seeds += (i ? "," : "") + std::to_string(list[i]);
  std::string out;
  out += "command\t" + command + "\n";
  out += "argv\t" + args + "\n";
  out += "config_hash\t" + cfg.hash() + "\n";
  out += "seeds\t" + seeds + "\n";
  out += "threads\t" + std::to_string(cfg.threads) + "\n";
  out += "precision\t" + std::string(cfg.precision == Precision::kFloat ? "float" : "double") + "\n";
  out += "version\t" + std::string(kVersion) + "\n";
  out += "compiler\t" + std::string(__VERSION__) + "\n";
  std::istringstream lines(cfg.to_text());
  for (std::string l; std::getline(lines, l);) {
    const auto eq = l.find(" =");
    out += "config." + l.substr(0, eq) + "\t" + std::string(io::trim(l.substr(eq + 2))) + "\n";
  }
  return out;
}

namespace {

template <typename Real>
BenchRow bench_one(const Prepared& prep, const RunConfig& cfg, const BenchOptions& opt, bool full) {
  const auto sup = Supervision::of(prep.hin);
  BenchRow row;
  row.candidates = prep.feats.size();
  row.sampled = full ? row.candidates : std::min(cfg.m, row.candidates);
  row.mode = full ? "full" : "sampled";
  row.precompute_seconds = prep.precompute_seconds;

  auto scfg = cfg.search_config();
  scfg.sample_size = row.sampled;
  scfg.epochs = opt.search_epochs;
  auto tcfg = cfg.target_config();
  tcfg.max_epochs = opt.train_epochs;
  tcfg.fixed_epochs = true;

  std::vector<double> search_times, train_times;
  MatrixMemory::reset_peak();
  for (std::size_t r = 0; r < opt.repeats; ++r) {
    const auto seed = cfg.seed_list().front() + r;
    const auto report = train_supernet<Real>(prep.feats, sup, scfg, seed);
    search_times.insert(search_times.end(), report.epoch_seconds.begin(), report.epoch_seconds.end());
    const auto chosen = full ? prep.feats.names : derive_top_m(report, row.sampled);
    const auto run = train_target<Real>(prep.feats.select(chosen), sup, tcfg, seed);
    train_times.insert(train_times.end(), run.epoch_seconds.begin(), run.epoch_seconds.end());
  }
  row.peak_matrix_bytes = MatrixMemory::peak_bytes();
  std::tie(row.search_epoch_mean, row.search_epoch_std) = mean_std(search_times);
  std::tie(row.train_epoch_mean, row.train_epoch_std) = mean_std(train_times);
  return row;
}

}  // namespace

std::vector<BenchRow> bench_epoch_time_vs_hop(const Hin& h, const RunConfig& cfg, const BenchOptions& opt) {
  if (opt.hops.empty()) throw UsageError("bench needs at least one hop");
  if (opt.repeats < 1) throw UsageError("bench needs at least one repeat");
  std::vector<BenchRow> rows;
  for (auto hop : opt.hops) {
    auto c = cfg;
    c.max_hop = hop;
    c.cache_dir.reset();
    MatrixMemory::reset_peak();
    const auto prep = prepare(h, c);
    for (bool full : {false, true}) {
      if (full && !opt.full_control) continue;
      auto row = cfg.precision == Precision::kFloat ? bench_one<float>(prep, c, opt, full)
                                                    : bench_one<double>(prep, c, opt, full);
      row.hop = hop;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out =
      "hop,mode,candidates,sampled,precompute_s,search_epoch_mean_s,search_epoch_std_s,train_epoch_mean_s,"
      "train_epoch_std_s,peak_matrix_bytes\n";
  for (const auto& r : rows) {
    out += std::to_string(r.hop) + "," + r.mode + "," + std::to_string(r.candidates) + "," + std::to_string(r.sampled) +
           "," + io::format_double(r.precompute_seconds) + "," + io::format_double(r.search_epoch_mean) + "," +
           io::format_double(r.search_epoch_std) + "," + io::format_double(r.train_epoch_mean) + "," +
           io::format_double(r.train_epoch_std) + "," + std::to_string(r.peak_matrix_bytes) + "\n";
  }
  return out;
}

}  // namespace hinpath
