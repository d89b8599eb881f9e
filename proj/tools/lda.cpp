// lda — distributed latent topic trainer.
//
// Subcommands:
//   train          spawn workers, train, write metrics/checkpoints/manifest
//   eval           held-out perplexity of a checkpoint
//   bench          sweep worker counts x thresholds, measure scaling
//   inspect-delta  dump a published delta file
//   gc             remove delta files every worker has consumed
//   synth          write a synthetic corpus
//   worker         (internal) one training worker; spawned by train/bench
//
// Every flag can also be set via environment variable: LDA_ + the flag name
// upper-cased with dashes as underscores (e.g. LDA_SYNC_DIR).

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lda/corpus.hpp"
#include "lda/errors.hpp"
#include "lda/eval.hpp"
#include "lda/fileio.hpp"
#include "lda/kernels.hpp"
#include "lda/manifest.hpp"
#include "lda/model.hpp"
#include "lda/sync.hpp"
#include "lda/synthetic.hpp"
#include "lda/worker.hpp"

namespace fs = std::filesystem;

namespace {

fs::path self_binary(const char* argv0) {
  std::error_code ec;
  const auto exe = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::path(argv0) : exe;
}

std::vector<double> parse_double_list(const std::string& csv,
                                      const char* what) {
  std::vector<double> values;
  size_t start = 0;
  while (start <= csv.size()) {
    const size_t comma = csv.find(',', start);
    const std::string field =
        csv.substr(start, comma == std::string::npos ? comma : comma - start);
    try {
      size_t used = 0;
      values.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw lda::ValueError(std::string(what) + ": bad number \"" + field +
                            "\" in \"" + csv + "\"");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

std::vector<uint32_t> parse_u32_list(const std::string& csv, const char* what) {
  std::vector<uint32_t> values;
  for (double v : parse_double_list(csv, what)) {
    if (v < 0 || v != static_cast<double>(static_cast<uint32_t>(v))) {
      throw lda::ValueError(std::string(what) + ": expected small nonnegative integers");
    }
    values.push_back(static_cast<uint32_t>(v));
  }
  return values;
}

// LDA_<FLAG> environment overrides for every long option, recursively.
void apply_env_prefix(CLI::App* app) {
  for (CLI::Option* opt : app->get_options()) {
    const auto& lnames = opt->get_lnames();
    if (lnames.empty()) continue;
    std::string env = "LDA_" + lnames[0];
    std::transform(env.begin(), env.end(), env.begin(), [](unsigned char c) {
      return c == '-' ? '_' : static_cast<char>(std::toupper(c));
    });
    opt->envname(env);
  }
  for (CLI::App* sub : app->get_subcommands([](const CLI::App*) { return true; })) {
    apply_env_prefix(sub);
  }
}

// Shared model/corpus flag bundle.
struct ModelOptions {
  std::string corpus;
  std::string synthetic;
  uint32_t topics = lda::defaults::kTopics;
  double alpha = lda::defaults::kAlpha;
  double eta = lda::defaults::kEta;
  uint64_t seed = 1;
  double test_fraction = lda::defaults::kTestFraction;

  void add_corpus_flags(CLI::App* cmd) {
    cmd->add_option("--corpus", corpus, "bag-of-words docword file");
    cmd->add_option("--synthetic", synthetic,
                    "synthetic corpus spec docs,vocab,topics,doclen,seed");
  }
  void add_model_flags(CLI::App* cmd) {
    cmd->add_option("--topics", topics, "number of topics")
        ->capture_default_str();
    cmd->add_option("--alpha", alpha, "document-topic prior")
        ->capture_default_str();
    cmd->add_option("--eta", eta, "topic-term prior")->capture_default_str();
    cmd->add_option("--seed", seed, "run seed")->capture_default_str();
    cmd->add_option("--test-fraction", test_fraction,
                    "held-out fraction of documents")
        ->capture_default_str();
  }
};

struct TrainOptions {
  ModelOptions model;
  std::string out_dir;
  std::string sync_dir;
  std::string kernel;
  std::string weights;
  uint32_t iters = lda::defaults::kIterations;
  double threshold = lda::defaults::kThreshold;
  uint32_t workers = lda::defaults::kWorkers;
  uint32_t eval_every = 0;
  uint32_t burn_in = lda::defaults::kBurnIn;
  uint32_t samples = lda::defaults::kSamples;
  bool shuffle_docs = false;
  bool no_final_sync = false;
  bool write_assignments = false;
  double final_sync_timeout = 60.0;
};

lda::WorkerConfig base_config_from(const TrainOptions& o) {
  lda::WorkerConfig base;
  base.corpus.path = o.model.corpus;
  base.corpus.synthetic = o.model.synthetic;
  base.test_fraction = o.model.test_fraction;
  base.num_workers = o.workers;
  base.hyper.num_topics = o.model.topics;
  base.hyper.alpha = o.model.alpha;
  base.hyper.eta = o.model.eta;
  base.threshold = o.threshold;
  base.sync_dir = o.sync_dir.empty() ? fs::path(o.out_dir) / "sync"
                                     : fs::path(o.sync_dir);
  base.iterations = o.iters;
  base.seed = o.model.seed;
  base.eval_every = o.eval_every;
  base.fold_in.burn_in = o.burn_in;
  base.fold_in.samples = o.samples;
  base.shuffle_docs = o.shuffle_docs;
  base.final_sync = !o.no_final_sync;
  base.final_sync_timeout_seconds = o.final_sync_timeout;
  if (!o.weights.empty()) {
    base.worker_weights = parse_double_list(o.weights, "--weights");
  }
  return base;
}

int run_train(const TrainOptions& o, const fs::path& binary,
              const std::string& command_line) {
  lda::OrchestratorConfig oc;
  oc.binary = binary;
  oc.base = base_config_from(o);
  oc.run_dir = o.out_dir;
  oc.kernel = o.kernel;
  oc.write_assignments = o.write_assignments;

  lda::RunManifest manifest;
  manifest.set("command", command_line);
  manifest.set("corpus", oc.base.corpus.is_synthetic()
                             ? "synthetic:" + oc.base.corpus.synthetic
                             : oc.base.corpus.path);
  {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(oc.base.corpus.content_hash()));
    manifest.set("corpus_fnv1a64", std::string(hex));
  }
  manifest.set("topics", static_cast<uint64_t>(o.model.topics));
  manifest.set("alpha", o.model.alpha);
  manifest.set("eta", o.model.eta);
  manifest.set("iterations", static_cast<uint64_t>(o.iters));
  manifest.set("threshold", o.threshold);
  manifest.set("workers", static_cast<uint64_t>(o.workers));
  manifest.set("seed", o.model.seed);
  manifest.set("test_fraction", o.model.test_fraction);
  manifest.set("eval_every", static_cast<uint64_t>(o.eval_every));
  manifest.set("burn_in", static_cast<uint64_t>(o.burn_in));
  manifest.set("samples", static_cast<uint64_t>(o.samples));
  manifest.set("final_sync", o.no_final_sync ? "off" : "on");
  manifest.set("kernel", o.kernel.empty() ? "auto" : o.kernel);
  manifest.set("sync_dir", oc.base.sync_dir.string());
  manifest.set("started_at", lda::utc_timestamp());

  const auto result = lda::orchestrate_local(oc);

  manifest.set("finished_at", lda::utc_timestamp());
  manifest.set("wall_seconds", result.wall_seconds);
  manifest.set("status", result.ok() ? "ok" : "failed");
  if (!result.ok()) {
    std::string detail;
    for (const auto& f : result.failures) {
      if (!detail.empty()) detail += "; ";
      detail += "worker " + std::to_string(f.worker_id) + " " + f.detail;
    }
    manifest.set("failures", detail);
  }
  manifest.save(fs::path(o.out_dir) / "manifest.txt");

  for (const auto& f : result.failures) {
    std::fprintf(stderr, "lda: worker %u %s\n", f.worker_id, f.detail.c_str());
  }
  std::printf("workers=%u iterations=%u wall_seconds=%.3f\n", o.workers,
              o.iters, result.wall_seconds);
  std::printf("metrics=%s\n", result.aggregated_metrics.string().c_str());
  std::printf("checkpoint=%s\n",
              (fs::path(o.out_dir) / "checkpoint_w0.bin").string().c_str());

  if (o.eval_every > 0 && fs::exists(fs::path(o.out_dir) / "metrics_w0.csv")) {
    const auto records =
        lda::read_metrics_csv(fs::path(o.out_dir) / "metrics_w0.csv");
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
      if (it->perplexity.has_value()) {
        std::printf("final_perplexity_w0=%.6f\n", *it->perplexity);
        break;
      }
    }
  }
  return result.ok() ? 0 : 1;
}

struct WorkerOptions {
  lda::WorkerConfig config;
  std::string corpus;
  std::string synthetic;
  std::string weights;
  std::string metrics;
  std::string checkpoint;
  std::string assignments_out;
  std::string sync_dir;
  std::string kernel;
  bool no_final_sync = false;
};

int run_worker_cmd(WorkerOptions& o) {
  if (!o.kernel.empty()) lda::kernels::select_kernel(o.kernel);
  o.config.corpus.path = o.corpus;
  o.config.corpus.synthetic = o.synthetic;
  o.config.sync_dir = o.sync_dir;
  o.config.metrics_path = o.metrics;
  o.config.checkpoint_path = o.checkpoint;
  o.config.assignments_path = o.assignments_out;
  o.config.final_sync = !o.no_final_sync;
  if (!o.weights.empty()) {
    o.config.worker_weights = parse_double_list(o.weights, "--weights");
  }
  lda::run_worker(o.config);
  return 0;
}

struct EvalOptions {
  std::string checkpoint;
  std::string test;
  std::string per_doc;
  std::string kernel;
  double alpha = lda::defaults::kAlpha;
  double eta = lda::defaults::kEta;
  uint32_t burn_in = lda::defaults::kBurnIn;
  uint32_t samples = lda::defaults::kSamples;
  uint64_t seed = 1;
};

int run_eval(const EvalOptions& o) {
  if (!o.kernel.empty()) lda::kernels::select_kernel(o.kernel);
  const auto counts = lda::load_checkpoint(o.checkpoint);
  std::ifstream in(o.test);
  if (!in) throw lda::IoError("cannot open " + o.test);
  const auto test = lda::parse_uci_bow(in);
  if (test.vocab_size != counts.vocab_size()) {
    throw lda::ValueError("test corpus vocabulary (" +
                          std::to_string(test.vocab_size) +
                          ") does not match the checkpoint (" +
                          std::to_string(counts.vocab_size()) + ")");
  }

  lda::HyperParams params;
  params.num_topics = counts.num_topics();
  params.alpha = o.alpha;
  params.eta = o.eta;
  lda::FoldInParams fold{o.burn_in, o.samples};
  const auto estimate = lda::estimate_beta(counts, o.eta);
  const auto result = lda::perplexity(test, estimate, params, fold, o.seed);

  if (!o.per_doc.empty()) {
    std::string csv = "doc,tokens,log_likelihood\n";
    for (uint32_t d = 0; d < test.num_docs(); ++d) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%u,%lld,%.6f\n", d,
                    static_cast<long long>(test.doc_tokens(d)),
                    result.doc_log_likelihood[d]);
      csv += buf;
    }
    lda::write_file_atomic(fs::path(o.per_doc), csv);
  }

  std::printf("documents=%u tokens=%lld\n", test.num_docs(),
              static_cast<long long>(result.total_tokens));
  std::printf("log_likelihood=%.6f\n", result.total_log_likelihood);
  std::printf("perplexity=%.6f\n", result.perplexity);
  return 0;
}

struct BenchOptions {
  ModelOptions model;
  std::string out_dir;
  std::string workers_list = "1,2,4";
  std::string thresholds_list = "0,0.01,0.1";
  std::string kernel;
  uint32_t iters = 100;
  uint32_t burn_in = lda::defaults::kBurnIn;
  uint32_t samples = lda::defaults::kSamples;
  double final_sync_timeout = 60.0;
  bool keep_sync = false;
};

std::string threshold_slug(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", t);
  std::string s(buf);
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return s;
}

int run_bench(const BenchOptions& o, const fs::path& binary) {
  const auto workers = parse_u32_list(o.workers_list, "--workers-list");
  const auto thresholds = parse_double_list(o.thresholds_list, "--thresholds");
  if (workers.empty() || thresholds.empty()) {
    throw lda::ValueError("bench needs at least one worker count and threshold");
  }
  for (uint32_t c : workers) {
    if (c < 1) throw lda::ValueError("worker counts must be >= 1");
  }

  // The held-out split is recomputed here (same seed => same split the
  // workers used) to score each cell's final model.
  lda::CorpusSource source{o.model.corpus, o.model.synthetic};
  source.validate();
  lda::Corpus test_split;
  {
    auto corpus = source.load();
    if (o.model.test_fraction > 0.0) {
      test_split =
          lda::split_corpus(corpus, o.model.test_fraction, o.model.seed).test;
    }
  }
  lda::HyperParams params{o.model.topics, o.model.alpha, o.model.eta};
  lda::FoldInParams fold{o.burn_in, o.samples};

  struct Cell {
    uint32_t workers = 0;
    double threshold = 0.0;
    bool ok = false;
    double wall_seconds = 0.0;
    double mean_sync_fraction = 0.0;
    double mean_published_fraction = 0.0;
    int64_t bytes_published_total = 0;
    std::optional<double> perplexity;
  };
  std::vector<Cell> cells;

  for (uint32_t num_workers : workers) {
    for (double threshold : thresholds) {
      Cell cell;
      cell.workers = num_workers;
      cell.threshold = threshold;

      const fs::path cell_dir =
          fs::path(o.out_dir) / ("cell_w" + std::to_string(num_workers) + "_t" +
                                 threshold_slug(threshold));
      TrainOptions cell_train;
      cell_train.model = o.model;
      cell_train.out_dir = cell_dir.string();
      cell_train.workers = num_workers;
      cell_train.threshold = threshold;
      cell_train.iters = o.iters;
      cell_train.final_sync_timeout = o.final_sync_timeout;

      lda::OrchestratorConfig oc;
      oc.binary = binary;
      oc.base = base_config_from(cell_train);
      oc.run_dir = cell_dir;
      oc.kernel = o.kernel;

      const auto result = lda::orchestrate_local(oc);
      cell.ok = result.ok();
      cell.wall_seconds = result.wall_seconds;
      for (const auto& f : result.failures) {
        std::fprintf(stderr, "lda: bench cell %ux%g: worker %u %s\n",
                     num_workers, threshold, f.worker_id, f.detail.c_str());
      }

      if (cell.ok) {
        double sync_fraction_sum = 0.0;
        size_t sync_rows = 0;
        double published_fraction_sum = 0.0;
        size_t published_rows = 0;
        for (uint32_t w = 0; w < num_workers; ++w) {
          const auto records = lda::read_metrics_csv(
              cell_dir / ("metrics_w" + std::to_string(w) + ".csv"));
          for (const auto& r : records) {
            cell.bytes_published_total += r.bytes_published;
            if (w == 0) {
              const double step = r.sample_seconds + r.sync_seconds;
              if (step > 0) {
                sync_fraction_sum += r.sync_seconds / step;
                ++sync_rows;
              }
              if (r.entries_total > 0) {
                published_fraction_sum +=
                    static_cast<double>(r.entries_published) /
                    static_cast<double>(r.entries_total);
                ++published_rows;
              }
            }
          }
        }
        if (sync_rows > 0) cell.mean_sync_fraction = sync_fraction_sum / sync_rows;
        if (published_rows > 0) {
          cell.mean_published_fraction = published_fraction_sum / published_rows;
        }
        if (test_split.num_docs() > 0) {
          const auto counts =
              lda::load_checkpoint(cell_dir / "checkpoint_w0.bin");
          cell.perplexity = lda::perplexity(test_split,
                                            lda::estimate_beta(counts, params.eta),
                                            params, fold, o.model.seed)
                                .perplexity;
        }
      }
      if (!o.keep_sync) {
        std::error_code ec;
        fs::remove_all(cell_dir / "sync", ec);
      }
      cells.push_back(cell);
    }
  }

  auto serial_wall = [&cells](double threshold) -> std::optional<double> {
    for (const Cell& c : cells) {
      if (c.workers == 1 && c.threshold == threshold && c.ok) {
        return c.wall_seconds;
      }
    }
    return std::nullopt;
  };

  std::string csv =
      "workers,threshold,status,wall_seconds,mean_sync_fraction,"
      "mean_entries_published_fraction,bytes_published_total,"
      "final_perplexity,speedup_vs_serial\n";
  std::printf(
      "%8s %10s %8s %12s %10s %10s %14s %14s %8s\n", "workers", "threshold",
      "status", "wall_s", "sync_frac", "pub_frac", "bytes", "perplexity",
      "speedup");
  for (const Cell& c : cells) {
    char buf[256];
    const auto serial = serial_wall(c.threshold);
    std::string perplexity_str;
    if (c.perplexity) {
      std::snprintf(buf, sizeof buf, "%.6f", *c.perplexity);
      perplexity_str = buf;
    }
    std::string speedup_str;
    if (c.ok && serial && c.wall_seconds > 0) {
      std::snprintf(buf, sizeof buf, "%.3f", *serial / c.wall_seconds);
      speedup_str = buf;
    }
    std::snprintf(buf, sizeof buf, "%u,%.17g,%s,%.3f,%.6f,%.6f,%lld,%s,%s\n",
                  c.workers, c.threshold, c.ok ? "ok" : "failed",
                  c.wall_seconds, c.mean_sync_fraction,
                  c.mean_published_fraction,
                  static_cast<long long>(c.bytes_published_total),
                  perplexity_str.c_str(), speedup_str.c_str());
    csv += buf;
    std::printf("%8u %10g %8s %12.3f %10.4f %10.4f %14lld %14s %8s\n",
                c.workers, c.threshold, c.ok ? "ok" : "failed", c.wall_seconds,
                c.mean_sync_fraction, c.mean_published_fraction,
                static_cast<long long>(c.bytes_published_total),
                perplexity_str.empty() ? "-" : perplexity_str.c_str(),
                speedup_str.empty() ? "-" : speedup_str.c_str());
  }
  fs::create_directories(o.out_dir);
  lda::write_file_atomic(fs::path(o.out_dir) / "bench.csv", csv);
  std::printf("bench_csv=%s\n", (fs::path(o.out_dir) / "bench.csv").string().c_str());

  const bool all_ok =
      std::all_of(cells.begin(), cells.end(), [](const Cell& c) { return c.ok; });
  return all_ok ? 0 : 1;
}

int run_inspect_delta(const std::string& file) {
  const auto bytes = lda::read_file_bytes(file);
  const auto decoded = lda::decode_delta_file(std::span(bytes.data(), bytes.size()));
  std::printf("worker=%u iteration=%u entries=%zu\n", decoded.worker_id,
              decoded.iteration, decoded.entries.size());
  for (const auto& e : decoded.entries) {
    std::printf("%u %u %lld\n", e.topic, e.term,
                static_cast<long long>(e.delta));
  }
  return 0;
}

int run_gc(const std::string& sync_dir) {
  const int64_t removed = lda::gc_sync_dir(sync_dir);
  std::printf("removed %lld delta file(s)\n", static_cast<long long>(removed));
  return 0;
}

int run_synth(const std::string& spec_text, const std::string& out) {
  const auto spec = lda::SyntheticSpec::parse(spec_text);
  const auto corpus = lda::generate_synthetic(spec);
  std::ostringstream buffer;
  lda::write_uci_bow(corpus, buffer);
  lda::write_file_atomic(fs::path(out), buffer.str());
  std::printf("documents=%u vocabulary=%u tokens=%lld file=%s\n",
              corpus.num_docs(), corpus.vocab_size,
              static_cast<long long>(corpus.total_tokens()), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path binary = self_binary(argc > 0 ? argv[0] : "lda");
  std::string command_line;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) command_line += ' ';
    command_line += argv[i];
  }

  CLI::App app{"Distributed latent topic trainer"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- train ----
  TrainOptions train;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train a model across local workers");
  train.model.add_corpus_flags(train_cmd);
  train.model.add_model_flags(train_cmd);
  train_cmd->add_option("--out", train.out_dir, "output directory")->required();
  train_cmd->add_option("--iters", train.iters, "training iterations")
      ->capture_default_str();
  train_cmd
      ->add_option("--threshold", train.threshold,
                   "relative delta magnitude below which changes stay local")
      ->capture_default_str();
  train_cmd->add_option("--workers", train.workers, "worker process count")
      ->capture_default_str();
  train_cmd->add_option("--sync-dir", train.sync_dir,
                        "delta exchange directory (default <out>/sync)");
  train_cmd->add_option("--eval-every", train.eval_every,
                        "evaluate perplexity every N iterations (0 = never)")
      ->capture_default_str();
  train_cmd->add_option("--burn-in", train.burn_in, "fold-in burn-in sweeps")
      ->capture_default_str();
  train_cmd->add_option("--samples", train.samples, "fold-in retained sweeps")
      ->capture_default_str();
  train_cmd->add_option("--weights", train.weights,
                        "comma-separated worker shard weights");
  train_cmd->add_flag("--shuffle-docs", train.shuffle_docs,
                      "shuffle document visit order each sweep");
  train_cmd->add_flag("--no-final-sync", train.no_final_sync,
                      "skip the bounded post-training merge barrier");
  train_cmd->add_flag("--write-assignments", train.write_assignments,
                      "also dump per-worker token-topic assignments");
  train_cmd
      ->add_option("--final-sync-timeout", train.final_sync_timeout,
                   "seconds to wait for peers after the last iteration")
      ->capture_default_str();
  train_cmd->add_option("--kernel", train.kernel,
                        "force kernel variant (scalar, avx2)");
  train_cmd->callback(
      [&] { exit_code = run_train(train, binary, command_line); });

  // ---- worker (internal) ----
  WorkerOptions worker;
  CLI::App* worker_cmd =
      app.add_subcommand("worker", "run one training worker (internal)");
  worker_cmd->group("");  // hidden from help
  worker_cmd->add_option("--corpus", worker.corpus, "");
  worker_cmd->add_option("--synthetic", worker.synthetic, "");
  worker_cmd->add_option("--test-fraction", worker.config.test_fraction, "");
  worker_cmd->add_option("--worker-id", worker.config.worker_id, "");
  worker_cmd->add_option("--workers", worker.config.num_workers, "");
  worker_cmd->add_option("--topics", worker.config.hyper.num_topics, "");
  worker_cmd->add_option("--alpha", worker.config.hyper.alpha, "");
  worker_cmd->add_option("--eta", worker.config.hyper.eta, "");
  worker_cmd->add_option("--threshold", worker.config.threshold, "");
  worker_cmd->add_option("--sync-dir", worker.sync_dir, "");
  worker_cmd->add_option("--iters", worker.config.iterations, "");
  worker_cmd->add_option("--seed", worker.config.seed, "");
  worker_cmd->add_option("--metrics", worker.metrics, "");
  worker_cmd->add_option("--checkpoint", worker.checkpoint, "");
  worker_cmd->add_option("--assignments-out", worker.assignments_out, "");
  worker_cmd->add_option("--eval-every", worker.config.eval_every, "");
  worker_cmd->add_option("--burn-in", worker.config.fold_in.burn_in, "");
  worker_cmd->add_option("--samples", worker.config.fold_in.samples, "");
  worker_cmd->add_option("--weights", worker.weights, "");
  worker_cmd->add_flag("--shuffle-docs", worker.config.shuffle_docs, "");
  worker_cmd->add_flag("--no-final-sync", worker.no_final_sync, "");
  worker_cmd->add_option("--final-sync-timeout",
                         worker.config.final_sync_timeout_seconds, "");
  worker_cmd->add_option("--kernel", worker.kernel, "");
  worker_cmd->callback([&] { exit_code = run_worker_cmd(worker); });

  // ---- eval ----
  EvalOptions eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "held-out perplexity of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "model checkpoint")
      ->required();
  eval_cmd->add_option("--test", eval.test, "bag-of-words test corpus")
      ->required();
  eval_cmd->add_option("--alpha", eval.alpha, "document-topic prior")
      ->capture_default_str();
  eval_cmd->add_option("--eta", eval.eta, "topic-term prior used for smoothing")
      ->capture_default_str();
  eval_cmd->add_option("--burn-in", eval.burn_in, "fold-in burn-in sweeps")
      ->capture_default_str();
  eval_cmd->add_option("--samples", eval.samples, "fold-in retained sweeps")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "evaluation seed")
      ->capture_default_str();
  eval_cmd->add_option("--per-doc", eval.per_doc,
                       "write per-document log-likelihood CSV here");
  eval_cmd->add_option("--kernel", eval.kernel,
                       "force kernel variant (scalar, avx2)");
  eval_cmd->callback([&] { exit_code = run_eval(eval); });

  // ---- bench ----
  BenchOptions bench;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "sweep worker counts x thresholds and measure scaling");
  bench.model.add_corpus_flags(bench_cmd);
  bench.model.add_model_flags(bench_cmd);
  bench_cmd->add_option("--out-dir", bench.out_dir, "output directory")
      ->required();
  bench_cmd
      ->add_option("--workers-list", bench.workers_list,
                   "comma-separated worker counts")
      ->capture_default_str();
  bench_cmd
      ->add_option("--thresholds", bench.thresholds_list,
                   "comma-separated thresholds")
      ->capture_default_str();
  bench_cmd->add_option("--iters", bench.iters, "iterations per cell")
      ->capture_default_str();
  bench_cmd->add_option("--burn-in", bench.burn_in, "fold-in burn-in sweeps")
      ->capture_default_str();
  bench_cmd->add_option("--samples", bench.samples, "fold-in retained sweeps")
      ->capture_default_str();
  bench_cmd
      ->add_option("--final-sync-timeout", bench.final_sync_timeout,
                   "seconds to wait for peers after the last iteration")
      ->capture_default_str();
  bench_cmd->add_flag("--keep-sync", bench.keep_sync,
                      "keep each cell's delta files (they can be large)");
  bench_cmd->add_option("--kernel", bench.kernel,
                        "force kernel variant (scalar, avx2)");
  bench_cmd->callback([&] { exit_code = run_bench(bench, binary); });

  // ---- inspect-delta ----
  std::string inspect_file;
  CLI::App* inspect_cmd =
      app.add_subcommand("inspect-delta", "dump a published delta file");
  inspect_cmd->add_option("file", inspect_file, "delta file")->required();
  inspect_cmd->callback([&] { exit_code = run_inspect_delta(inspect_file); });

  // ---- gc ----
  std::string gc_dir;
  CLI::App* gc_cmd = app.add_subcommand(
      "gc", "remove delta files every worker has already consumed");
  gc_cmd->add_option("--sync-dir", gc_dir, "delta exchange directory")
      ->required();
  gc_cmd->callback([&] { exit_code = run_gc(gc_dir); });

  // ---- synth ----
  std::string synth_spec;
  std::string synth_out;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "write a synthetic bag-of-words corpus");
  synth_cmd
      ->add_option("--spec", synth_spec,
                   "docs,vocab,topics,doclen,seed")
      ->required();
  synth_cmd->add_option("--out", synth_out, "output docword file")->required();
  synth_cmd->callback([&] { exit_code = run_synth(synth_spec, synth_out); });

  apply_env_prefix(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const lda::Error& e) {
    std::fprintf(stderr, "lda: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lda: internal error: %s\n", e.what());
    return 2;
  }
  return exit_code;
}
