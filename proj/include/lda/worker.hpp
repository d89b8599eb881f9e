#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lda/corpus.hpp"
#include "lda/eval.hpp"
#include "lda/model.hpp"
#include "lda/sync.hpp"

namespace lda {

// Shipped training defaults (mirrored by the CLI).
namespace defaults {
inline constexpr uint32_t kTopics = 50;
inline constexpr double kAlpha = 0.1;
inline constexpr double kEta = 0.01;
inline constexpr uint32_t kIterations = 1500;
inline constexpr double kThreshold = 0.0;
inline constexpr uint32_t kWorkers = 1;
inline constexpr double kTestFraction = 0.1;
inline constexpr uint32_t kBurnIn = 50;
inline constexpr uint32_t kSamples = 10;
}  // namespace defaults

// Where the training corpus comes from: a bag-of-words file or a synthetic
// spec ("docs,vocab,topics,doclen,seed"). Exactly one must be set.
struct CorpusSource {
  std::string path;
  std::string synthetic;

  bool is_synthetic() const { return !synthetic.empty(); }
  void validate() const;
  Corpus load() const;
  // FNV-1a of the corpus bytes (file content, or the canonical serialized
  // form for synthetic corpora) for the run manifest.
  uint64_t content_hash() const;
};

struct WorkerConfig {
  CorpusSource corpus;
  double test_fraction = 0.0;  // 0 = train on everything, no held-out split
  uint32_t worker_id = 0;
  uint32_t num_workers = 1;
  HyperParams hyper;
  double threshold = defaults::kThreshold;
  std::filesystem::path sync_dir;
  uint32_t iterations = 1;
  uint64_t seed = 1;
  std::vector<double> worker_weights;  // empty = even round-robin shards

  std::filesystem::path metrics_path;      // empty = in-memory only
  std::filesystem::path checkpoint_path;   // empty = no checkpoint
  std::filesystem::path assignments_path;  // empty = no assignment dump

  uint32_t eval_every = 0;  // 0 = never evaluate during training
  FoldInParams fold_in;
  bool shuffle_docs = false;

  // After the last iteration, wait (bounded) for every peer's heartbeat to
  // reach the final iteration, then merge once more. Mergeable state from
  // normally-finishing peers is then never left behind.
  bool final_sync = true;
  double final_sync_timeout_seconds = 60.0;

  void validate() const;
};

// One metrics CSV row. perplexity is empty on iterations without an
// evaluation pass.
struct MetricsRecord {
  uint32_t iteration = 0;
  double sample_seconds = 0.0;
  double sync_seconds = 0.0;
  int64_t bytes_published = 0;
  int64_t entries_published = 0;
  int64_t entries_total = 0;  // nonzero delta cells before filtering
  int64_t topic_changes = 0;
  std::optional<double> perplexity;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& record);
// Parses a whole metrics file (header line required).
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

struct WorkerResult {
  Shard shard;
  Assignments assignments;
  CountTables counts;
  std::vector<MetricsRecord> metrics;
};

// Runs one worker start to finish: load + split + shard the corpus, init
// assignments, publish the unfiltered initial delta (iteration 0), then per
// iteration sweep -> filter -> publish -> merge -> heartbeat, with optional
// held-out evaluation. Deterministic in the config.
WorkerResult run_worker(const WorkerConfig& config);

// run_worker + synchronization points for the evaluation schedule:
// evaluate when t == 1, t % eval_every == 0, or t == iterations.
bool eval_due(uint32_t iteration, uint32_t total_iterations,
              uint32_t eval_every);

struct OrchestratorConfig {
  std::filesystem::path binary;  // the lda executable to spawn workers with
  WorkerConfig base;             // per-worker fields are derived from run_dir
  std::filesystem::path run_dir;
  bool write_assignments = false;
  std::string kernel;  // forwarded --kernel value; empty = auto
};

struct WorkerFailure {
  uint32_t worker_id = 0;
  std::string detail;  // "exited with status 2", "killed by signal 9"
};

struct OrchestratorResult {
  std::vector<WorkerFailure> failures;
  std::filesystem::path aggregated_metrics;  // run_dir/metrics.csv
  double wall_seconds = 0.0;
  bool ok() const { return failures.empty(); }
};

// Spawns one `lda worker` process per worker id, waits for all of them,
// reports every nonzero exit by worker id, and aggregates the per-worker
// metrics files into run_dir/metrics.csv (rows ordered by iteration, then
// worker, with a leading worker column).
OrchestratorResult orchestrate_local(const OrchestratorConfig& config);

// The argv tail (after "worker") equivalent to `config`; what
// orchestrate_local passes to the spawned processes.
std::vector<std::string> worker_config_to_args(const WorkerConfig& config);

}  // namespace lda
