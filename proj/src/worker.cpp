#include "lda/worker.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "lda/fileio.hpp"
#include "lda/manifest.hpp"
#include "lda/rng.hpp"
#include "lda/sampler.hpp"
#include "lda/synthetic.hpp"

extern char** environ;

namespace lda {

namespace fs = std::filesystem;
using steady_clock = std::chrono::steady_clock;

void CorpusSource::validate() const {
  if (path.empty() == synthetic.empty()) {
    throw ValueError("exactly one corpus source (file or synthetic spec) required");
  }
  if (is_synthetic()) SyntheticSpec::parse(synthetic);
}

Corpus CorpusSource::load() const {
  validate();
  if (is_synthetic()) {
    return generate_synthetic(SyntheticSpec::parse(synthetic));
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_uci_bow(in);
}

uint64_t CorpusSource::content_hash() const {
  validate();
  if (is_synthetic()) {
    std::ostringstream out;
    write_uci_bow(load(), out);
    return fnv1a64(out.str());
  }
  const auto bytes = read_file_bytes(path);
  return fnv1a64(std::span(bytes.data(), bytes.size()));
}

void WorkerConfig::validate() const {
  corpus.validate();
  hyper.validate();
  fold_in.validate();
  if (num_workers < 1) throw ValueError("need at least one worker");
  if (worker_id >= num_workers) {
    throw ValueError("worker id " + std::to_string(worker_id) + " outside " +
                     std::to_string(num_workers) + " workers");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValueError("threshold must lie in [0, 1]");
  }
  if (iterations < 1) throw ValueError("need at least one iteration");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ValueError("test fraction must lie in [0, 1)");
  }
  if (sync_dir.empty()) throw ValueError("sync directory not set");
  if (eval_every > 0 && test_fraction <= 0.0) {
    throw ValueError("eval-every needs a held-out split (test fraction > 0)");
  }
  if (!(final_sync_timeout_seconds >= 0.0)) {
    throw ValueError("final sync timeout must be >= 0");
  }
  if (!worker_weights.empty() && worker_weights.size() != num_workers) {
    throw ValueError("got " + std::to_string(worker_weights.size()) +
                     " worker weights for " + std::to_string(num_workers) +
                     " workers");
  }
}

std::string metrics_csv_header() {
  return "iteration,sample_seconds,sync_seconds,bytes_published,"
         "entries_published,entries_total,topic_changes,perplexity";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%u,%.6f,%.6f,%lld,%lld,%lld,%lld,",
                r.iteration, r.sample_seconds, r.sync_seconds,
                static_cast<long long>(r.bytes_published),
                static_cast<long long>(r.entries_published),
                static_cast<long long>(r.entries_total),
                static_cast<long long>(r.topic_changes));
  std::string row(buf);
  if (r.perplexity.has_value()) {
    std::snprintf(buf, sizeof buf, "%.6f", *r.perplexity);
    row += buf;
  }
  return row;
}

std::vector<MetricsRecord> read_metrics_csv(const fs::path& path) {
  const std::string text = read_file_text(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("metrics file " + path.string() + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != metrics_csv_header()) {
    throw ParseError("metrics file " + path.string() + " has header \"" + line +
                     "\"");
  }

  std::vector<MetricsRecord> records;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 8) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 8 fields, got " +
                       std::to_string(fields.size()));
    }
    try {
      MetricsRecord r;
      r.iteration = static_cast<uint32_t>(std::stoul(fields[0]));
      r.sample_seconds = std::stod(fields[1]);
      r.sync_seconds = std::stod(fields[2]);
      r.bytes_published = std::stoll(fields[3]);
      r.entries_published = std::stoll(fields[4]);
      r.entries_total = std::stoll(fields[5]);
      r.topic_changes = std::stoll(fields[6]);
      if (!fields[7].empty()) r.perplexity = std::stod(fields[7]);
      records.push_back(r);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(lineno) + ": bad metrics row \"" +
                       line + "\"");
    }
  }
  return records;
}

bool eval_due(uint32_t iteration, uint32_t total_iterations,
              uint32_t eval_every) {
  if (eval_every == 0) return false;
  return iteration == 1 || iteration == total_iterations ||
         iteration % eval_every == 0;
}

namespace {

// Bounded wait until every peer's heartbeat reaches `iteration`. Used for the
// final merge; during training nothing ever waits.
// Waits (bounded) until every peer has published through `iteration`,
// merging while it waits — both to spread the work and so that a concurrent
// gc racing this worker's cursor is noticed and skipped over rather than
// parking a peer — then merges once more for the final word.
void final_sync_merge(SyncConfig& sync, CountTables& counts, int64_t iteration,
                      double timeout_seconds) {
  const auto deadline =
      steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
  while (true) {
    const auto beats = read_heartbeats(sync.sync_dir);
    bool all_caught_up = true;
    for (uint32_t w = 0; w < sync.num_workers; ++w) {
      if (w == sync.worker_id) continue;
      const auto it = beats.find(w);
      if (it == beats.end() || it->second < iteration) {
        all_caught_up = false;
        break;
      }
    }
    if (all_caught_up) break;
    if (steady_clock::now() >= deadline) {
      std::fprintf(stderr,
                   "lda: worker %u: final sync timed out after %.1fs; "
                   "merging what is visible\n",
                   sync.worker_id, timeout_seconds);
      break;
    }
    scan_and_merge(sync, counts);
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  scan_and_merge(sync, counts);
  // A hole first sighted just now still needs its confirming second look.
  for (uint32_t w = 0; w < sync.num_workers; ++w) {
    if (w != sync.worker_id && sync.suspected_holes[w] >= 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      scan_and_merge(sync, counts);
      break;
    }
  }
}

// Fault hook for supervisor tests: LDA_FAULT_WORKER/LDA_FAULT_ITER name a
// worker and the iteration at whose start it dies.
int64_t fault_iteration_for(uint32_t worker_id) {
  const char* worker_env = std::getenv("LDA_FAULT_WORKER");
  const char* iter_env = std::getenv("LDA_FAULT_ITER");
  if (worker_env == nullptr || iter_env == nullptr) return -1;
  if (std::strtoll(worker_env, nullptr, 10) !=
      static_cast<long long>(worker_id)) {
    return -1;
  }
  return std::strtoll(iter_env, nullptr, 10);
}

}  // namespace

WorkerResult run_worker(const WorkerConfig& config) {
  config.validate();
  const int64_t fault_iter = fault_iteration_for(config.worker_id);

  Corpus corpus = config.corpus.load();
  Corpus train;
  Corpus test;
  if (config.test_fraction > 0.0) {
    auto split = split_corpus(corpus, config.test_fraction, config.seed);
    train = std::move(split.train);
    test = std::move(split.test);
  } else {
    train = std::move(corpus);
  }
  if (train.num_docs() == 0) throw ValueError("training split is empty");

  auto shards =
      partition_documents(train, config.num_workers, config.worker_weights);
  Shard shard = std::move(shards[config.worker_id]);

  InitState state = init_assignments(shard, config.hyper, config.seed);
  CountTables& counts = state.counts;
  DeltaTable& delta = state.delta;
  Assignments& assignments = state.assignments;

  std::error_code ec;
  fs::create_directories(config.sync_dir, ec);
  if (ec) {
    throw IoError("cannot create " + config.sync_dir.string() + ": " +
                  ec.message());
  }
  SyncConfig sync(config.sync_dir, config.worker_id, config.num_workers,
                  config.threshold);

  // Iteration 0: the worker's entire initial contribution, unfiltered, so
  // peers can reconstruct the full starting table.
  publish_deltas(sync, delta.entries(), 0);
  delta.clear();
  write_heartbeat(sync, 0);

  std::ofstream metrics_out;
  if (!config.metrics_path.empty()) {
    metrics_out.open(config.metrics_path, std::ios::trunc);
    if (!metrics_out) {
      throw IoError("cannot create " + config.metrics_path.string());
    }
    metrics_out << metrics_csv_header() << '\n' << std::flush;
  }

  WorkerResult result;
  result.metrics.reserve(config.iterations);

  for (uint32_t t = 1; t <= config.iterations; ++t) {
    if (fault_iter >= 0 && static_cast<int64_t>(t) == fault_iter) {
      std::abort();
    }

    // Each sweep gets its own derived stream, so draws are independent of
    // whether evaluation ran and replayable per (worker, iteration).
    Rng sweep_rng(
        derive_stream(config.seed, streams::kSweep, config.worker_id, t));
    SweepOptions sweep_options;
    sweep_options.shuffle_docs = config.shuffle_docs;
    const SweepStats sweep = gibbs_sweep(shard, assignments, counts, delta,
                                         config.hyper, sweep_rng, sweep_options);

    const auto sync_start = steady_clock::now();
    const auto entries_total = static_cast<int64_t>(delta.size());
    const auto publish =
        drain_publishable(delta, counts.global(), config.threshold);
    publish_deltas(sync, publish, t);
    scan_and_merge(sync, counts);
    write_heartbeat(sync, t);
    const double sync_seconds =
        std::chrono::duration<double>(steady_clock::now() - sync_start).count();

    MetricsRecord record;
    record.iteration = t;
    record.sample_seconds = sweep.elapsed_seconds;
    record.sync_seconds = sync_seconds;
    record.bytes_published = delta_file_bytes(publish.size());
    record.entries_published = static_cast<int64_t>(publish.size());
    record.entries_total = entries_total;
    record.topic_changes = sweep.topic_changes;

    if (eval_due(t, config.iterations, config.eval_every) &&
        test.num_docs() > 0) {
      const auto estimate = estimate_beta(counts.global(), config.hyper.eta);
      record.perplexity =
          perplexity(test, estimate, config.hyper, config.fold_in, config.seed)
              .perplexity;
    }

    if (metrics_out.is_open()) {
      metrics_out << metrics_csv_row(record) << '\n' << std::flush;
    }
    result.metrics.push_back(record);
  }

  if (config.final_sync && config.num_workers > 1) {
    final_sync_merge(sync, counts, config.iterations,
                     config.final_sync_timeout_seconds);
  }

  if (!config.checkpoint_path.empty()) {
    save_checkpoint(counts.global(), config.checkpoint_path);
  }
  if (!config.assignments_path.empty()) {
    save_assignments(shard, assignments, config.hyper.num_topics,
                     config.assignments_path);
  }

  result.shard = std::move(shard);
  result.assignments = std::move(assignments);
  result.counts = std::move(counts);
  return result;
}

namespace {

std::string format_double_arg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr int kMaxChildren = 256;
pid_t g_child_pids[kMaxChildren];
volatile sig_atomic_t g_child_count = 0;

void forward_signal_to_children(int sig) {
  for (int i = 0; i < g_child_count; ++i) {
    if (g_child_pids[i] > 0) kill(g_child_pids[i], SIGTERM);
  }
  signal(sig, SIG_DFL);
  raise(sig);
}

}  // namespace

std::vector<std::string> worker_config_to_args(const WorkerConfig& config) {
  std::vector<std::string> args;
  auto add = [&args](const char* flag, const std::string& value) {
    args.emplace_back(flag);
    args.push_back(value);
  };

  if (config.corpus.is_synthetic()) {
    add("--synthetic", config.corpus.synthetic);
  } else {
    add("--corpus", config.corpus.path);
  }
  add("--test-fraction", format_double_arg(config.test_fraction));
  add("--worker-id", std::to_string(config.worker_id));
  add("--workers", std::to_string(config.num_workers));
  add("--topics", std::to_string(config.hyper.num_topics));
  add("--alpha", format_double_arg(config.hyper.alpha));
  add("--eta", format_double_arg(config.hyper.eta));
  add("--threshold", format_double_arg(config.threshold));
  add("--sync-dir", config.sync_dir.string());
  add("--iters", std::to_string(config.iterations));
  add("--seed", std::to_string(config.seed));
  if (!config.metrics_path.empty()) {
    add("--metrics", config.metrics_path.string());
  }
  if (!config.checkpoint_path.empty()) {
    add("--checkpoint", config.checkpoint_path.string());
  }
  if (!config.assignments_path.empty()) {
    add("--assignments-out", config.assignments_path.string());
  }
  if (config.eval_every > 0) {
    add("--eval-every", std::to_string(config.eval_every));
  }
  add("--burn-in", std::to_string(config.fold_in.burn_in));
  add("--samples", std::to_string(config.fold_in.samples));
  if (config.shuffle_docs) args.emplace_back("--shuffle-docs");
  if (!config.final_sync) args.emplace_back("--no-final-sync");
  add("--final-sync-timeout",
      format_double_arg(config.final_sync_timeout_seconds));
  if (!config.worker_weights.empty()) {
    std::string joined;
    for (size_t i = 0; i < config.worker_weights.size(); ++i) {
      if (i > 0) joined += ',';
      joined += format_double_arg(config.worker_weights[i]);
    }
    add("--weights", joined);
  }
  return args;
}

OrchestratorResult orchestrate_local(const OrchestratorConfig& config) {
  {
    WorkerConfig probe = config.base;
    probe.worker_id = 0;
    probe.validate();
  }
  if (config.base.num_workers > static_cast<uint32_t>(kMaxChildren)) {
    throw ValueError("more than " + std::to_string(kMaxChildren) + " workers");
  }
  if (!fs::exists(config.binary)) {
    throw IoError("worker binary " + config.binary.string() + " not found");
  }
  std::error_code ec;
  fs::create_directories(config.run_dir, ec);
  if (ec) {
    throw IoError("cannot create " + config.run_dir.string() + ": " +
                  ec.message());
  }
  fs::create_directories(config.base.sync_dir, ec);
  if (ec) {
    throw IoError("cannot create " + config.base.sync_dir.string() + ": " +
                  ec.message());
  }

  const uint32_t num_workers = config.base.num_workers;
  const auto start = steady_clock::now();

  struct sigaction forward {};
  forward.sa_handler = forward_signal_to_children;
  struct sigaction old_int {};
  struct sigaction old_term {};
  g_child_count = 0;
  sigaction(SIGINT, &forward, &old_int);
  sigaction(SIGTERM, &forward, &old_term);

  OrchestratorResult result;
  std::vector<pid_t> pids(num_workers, -1);
  std::vector<fs::path> metric_paths(num_workers);

  for (uint32_t w = 0; w < num_workers; ++w) {
    WorkerConfig worker = config.base;
    worker.worker_id = w;
    worker.metrics_path =
        config.run_dir / ("metrics_w" + std::to_string(w) + ".csv");
    worker.checkpoint_path =
        config.run_dir / ("checkpoint_w" + std::to_string(w) + ".bin");
    if (config.write_assignments) {
      worker.assignments_path =
          config.run_dir / ("assign_w" + std::to_string(w) + ".bin");
    }
    metric_paths[w] = worker.metrics_path;

    std::vector<std::string> args;
    args.push_back(config.binary.string());
    args.emplace_back("worker");
    const auto tail = worker_config_to_args(worker);
    args.insert(args.end(), tail.begin(), tail.end());
    if (!config.kernel.empty()) {
      args.emplace_back("--kernel");
      args.push_back(config.kernel);
    }

    std::vector<char*> argv;
    argv.reserve(args.size() + 1);
    for (auto& arg : args) argv.push_back(arg.data());
    argv.push_back(nullptr);

    pid_t pid = -1;
    const int rc = posix_spawn(&pid, config.binary.c_str(), nullptr, nullptr,
                               argv.data(), environ);
    if (rc != 0) {
      result.failures.push_back(
          {w, std::string("spawn failed: ") + std::strerror(rc)});
      continue;
    }
    pids[w] = pid;
    g_child_pids[g_child_count] = pid;
    g_child_count = g_child_count + 1;
  }

  for (uint32_t w = 0; w < num_workers; ++w) {
    if (pids[w] < 0) continue;  // spawn failure already recorded
    int status = 0;
    pid_t rc;
    do {
      rc = waitpid(pids[w], &status, 0);
    } while (rc < 0 && errno == EINTR);
    if (rc < 0) {
      result.failures.push_back(
          {w, std::string("waitpid failed: ") + std::strerror(errno)});
    } else if (WIFSIGNALED(status)) {
      result.failures.push_back(
          {w, "killed by signal " + std::to_string(WTERMSIG(status))});
    } else if (WIFEXITED(status) && WEXITSTATUS(status) != 0) {
      result.failures.push_back(
          {w, "exited with status " + std::to_string(WEXITSTATUS(status))});
    }
  }

  g_child_count = 0;
  sigaction(SIGINT, &old_int, nullptr);
  sigaction(SIGTERM, &old_term, nullptr);

  result.wall_seconds =
      std::chrono::duration<double>(steady_clock::now() - start).count();

  // Aggregate whatever metrics exist (a dead worker leaves a partial or
  // missing file; that must not hide the rows of the survivors).
  struct Row {
    uint32_t worker;
    MetricsRecord record;
  };
  std::vector<Row> rows;
  for (uint32_t w = 0; w < num_workers; ++w) {
    if (!fs::exists(metric_paths[w])) continue;
    try {
      for (const auto& record : read_metrics_csv(metric_paths[w])) {
        rows.push_back({w, record});
      }
    } catch (const Error& err) {
      std::fprintf(stderr, "lda: skipping metrics of worker %u: %s\n", w,
                   err.what());
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.record.iteration != b.record.iteration
               ? a.record.iteration < b.record.iteration
               : a.worker < b.worker;
  });
  std::string csv = "worker," + metrics_csv_header() + "\n";
  for (const Row& row : rows) {
    csv += std::to_string(row.worker) + "," + metrics_csv_row(row.record) + "\n";
  }
  result.aggregated_metrics = config.run_dir / "metrics.csv";
  write_file_atomic(result.aggregated_metrics, csv);
  return result;
}

}  // namespace lda
