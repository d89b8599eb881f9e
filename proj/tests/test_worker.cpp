#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lda/errors.hpp"
#include "lda/fileio.hpp"
#include "lda/model.hpp"
#include "lda/rng.hpp"
#include "lda/sampler.hpp"
#include "lda/sync.hpp"
#include "lda/worker.hpp"

using namespace lda;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  auto dir = fs::temp_directory_path() /
             (std::string("lda_worker_") + tag + "_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

WorkerConfig small_config(const fs::path& dir) {
  WorkerConfig config;
  config.corpus.synthetic = "30,40,4,20,5";
  config.test_fraction = 0.2;
  config.num_workers = 1;
  config.hyper.num_topics = 6;
  config.hyper.alpha = 0.2;
  config.hyper.eta = 0.05;
  config.threshold = 0.0;
  config.sync_dir = dir / "sync";
  config.iterations = 6;
  config.seed = 11;
  return config;
}

}  // namespace

TEST_CASE("metrics CSV round-trips, empty perplexity column included") {
  CHECK(metrics_csv_header() ==
        "iteration,sample_seconds,sync_seconds,bytes_published,"
        "entries_published,entries_total,topic_changes,perplexity");

  MetricsRecord with_eval;
  with_eval.iteration = 3;
  with_eval.sample_seconds = 0.5;
  with_eval.sync_seconds = 0.125;
  with_eval.bytes_published = 1224;
  with_eval.entries_published = 100;
  with_eval.entries_total = 140;
  with_eval.topic_changes = 77;
  with_eval.perplexity = 321.0625;
  CHECK(metrics_csv_row(with_eval) ==
        "3,0.500000,0.125000,1224,100,140,77,321.062500");

  MetricsRecord without_eval = with_eval;
  without_eval.perplexity.reset();
  CHECK(metrics_csv_row(without_eval) == "3,0.500000,0.125000,1224,100,140,77,");

  const auto dir = temp_dir("csv");
  const auto path = dir / "metrics.csv";
  write_file_atomic(path, metrics_csv_header() + "\n" +
                              metrics_csv_row(with_eval) + "\n" +
                              metrics_csv_row(without_eval) + "\n");
  const auto records = read_metrics_csv(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].iteration == 3);
  CHECK(records[0].bytes_published == 1224);
  REQUIRE(records[0].perplexity.has_value());
  CHECK(*records[0].perplexity == doctest::Approx(321.0625));
  CHECK(!records[1].perplexity.has_value());

  write_file_atomic(path, std::string("wrong,header\n1,2\n"));
  CHECK_THROWS_AS(read_metrics_csv(path), ParseError);
  write_file_atomic(path, metrics_csv_header() + "\n1,2,3\n");
  CHECK_THROWS_AS(read_metrics_csv(path), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("evaluation schedule: first, last, and every Nth iteration") {
  CHECK(!eval_due(1, 10, 0));  // disabled
  CHECK(eval_due(1, 10, 4));
  CHECK(!eval_due(2, 10, 4));
  CHECK(eval_due(4, 10, 4));
  CHECK(eval_due(8, 10, 4));
  CHECK(!eval_due(9, 10, 4));
  CHECK(eval_due(10, 10, 4));  // final iteration always scored
  CHECK(eval_due(10, 10, 3));
}

TEST_CASE("worker argv mirrors the config exactly") {
  WorkerConfig config;
  config.corpus.path = "/data/docword.txt";
  config.test_fraction = 0.1;
  config.worker_id = 2;
  config.num_workers = 4;
  config.hyper.num_topics = 25;
  config.hyper.alpha = 0.1;
  config.hyper.eta = 0.01;
  config.threshold = 0.05;
  config.sync_dir = "/run/sync";
  config.iterations = 100;
  config.seed = 9;
  config.metrics_path = "/run/m.csv";
  config.checkpoint_path = "/run/c.bin";
  config.eval_every = 10;
  config.fold_in.burn_in = 50;
  config.fold_in.samples = 10;
  config.shuffle_docs = true;
  config.worker_weights = {1.0, 2.0, 1.0, 1.0};

  const std::vector<std::string> expected = {
      "--corpus", "/data/docword.txt",
      "--test-fraction", "0.10000000000000001",
      "--worker-id", "2",
      "--workers", "4",
      "--topics", "25",
      "--alpha", "0.10000000000000001",
      "--eta", "0.01",
      "--threshold", "0.050000000000000003",
      "--sync-dir", "/run/sync",
      "--iters", "100",
      "--seed", "9",
      "--metrics", "/run/m.csv",
      "--checkpoint", "/run/c.bin",
      "--eval-every", "10",
      "--burn-in", "50",
      "--samples", "10",
      "--shuffle-docs",
      "--final-sync-timeout", "60",
      "--weights", "1,2,1,1",
  };
  CHECK(worker_config_to_args(config) == expected);
}

TEST_CASE("config validation rejects inconsistent setups") {
  const auto dir = temp_dir("validate");
  WorkerConfig config = small_config(dir);
  CHECK_NOTHROW(config.validate());

  WorkerConfig bad = config;
  bad.corpus.path = "also.txt";  // two sources
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = config;
  bad.threshold = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = config;
  bad.eval_every = 5;
  bad.test_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = config;
  bad.worker_id = 1;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = config;
  bad.worker_weights = {1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), ValueError);
  fs::remove_all(dir);
}

TEST_CASE("a single worker run is exactly the serial Gibbs trajectory") {
  const auto dir = temp_dir("serial");
  WorkerConfig config = small_config(dir);
  config.metrics_path = dir / "metrics.csv";
  config.checkpoint_path = dir / "model.bin";
  config.assignments_path = dir / "assign.bin";
  config.eval_every = 3;
  config.fold_in.burn_in = 10;
  config.fold_in.samples = 3;

  const WorkerResult result = run_worker(config);

  // Replay the run with the library pieces: same split, same shard, same
  // per-iteration streams. The worker's sync machinery (publish, merge,
  // evaluation) must not disturb a single draw.
  Corpus corpus = config.corpus.load();
  auto split = split_corpus(corpus, config.test_fraction, config.seed);
  auto shards = partition_documents(split.train, 1, {});
  InitState replay = init_assignments(shards[0], config.hyper, config.seed);
  for (uint32_t t = 1; t <= config.iterations; ++t) {
    Rng rng(derive_stream(config.seed, streams::kSweep, 0, t));
    gibbs_sweep(shards[0], replay.assignments, replay.counts, replay.delta,
                config.hyper, rng);
  }
  CHECK(result.assignments.labels == replay.assignments.labels);
  CHECK(result.counts.global() == replay.counts.global());
  CHECK(check_consistency(result.shard, result.assignments, result.counts).ok());

  // Artifacts: checkpoint equals the final table, the assignment dump
  // replays, metrics carry one row per iteration with the schedule's
  // perplexity cells filled.
  CHECK(load_checkpoint(config.checkpoint_path) == replay.counts.global());
  const LoadedAssignments dumped = load_assignments(config.assignments_path);
  CHECK(dumped.labels == result.assignments.labels);
  CHECK(dumped.doc_ids == result.shard.doc_ids);

  const auto metrics = read_metrics_csv(config.metrics_path);
  REQUIRE(metrics.size() == config.iterations);
  for (uint32_t t = 1; t <= config.iterations; ++t) {
    const auto& row = metrics[t - 1];
    CHECK(row.iteration == t);
    CHECK(row.bytes_published == delta_file_bytes(row.entries_published));
    CHECK(row.entries_total >= row.entries_published);
    CHECK(row.perplexity.has_value() == eval_due(t, config.iterations, 3));
    if (row.perplexity) CHECK(*row.perplexity > 1.0);
  }

  // The sync directory holds the initial publish plus one file and one
  // heartbeat per iteration.
  for (uint32_t t = 0; t <= config.iterations; ++t) {
    CHECK(fs::exists(config.sync_dir / delta_file_name(0, t)));
  }
  CHECK(read_heartbeats(config.sync_dir).at(0) ==
        static_cast<int64_t>(config.iterations));
  fs::remove_all(dir);
}

TEST_CASE("evaluation passes do not perturb the training draws") {
  const auto dir_a = temp_dir("eval_a");
  const auto dir_b = temp_dir("eval_b");
  WorkerConfig with_eval = small_config(dir_a);
  with_eval.eval_every = 2;
  with_eval.fold_in.burn_in = 5;
  with_eval.fold_in.samples = 2;
  WorkerConfig without_eval = small_config(dir_b);
  without_eval.eval_every = 0;

  const WorkerResult a = run_worker(with_eval);
  const WorkerResult b = run_worker(without_eval);
  CHECK(a.assignments.labels == b.assignments.labels);
  CHECK(a.counts.global() == b.counts.global());
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("thresholding defers small deltas without losing them") {
  const auto dir = temp_dir("threshold");
  WorkerConfig config = small_config(dir);
  config.threshold = 1.0;  // nothing but brand-new cells clear the bar
  config.test_fraction = 0.0;

  const WorkerResult result = run_worker(config);
  int64_t published_total = 0;
  int64_t entries_total_max = 0;
  for (const auto& row : result.metrics) {
    published_total += row.entries_published;
    entries_total_max = std::max(entries_total_max, row.entries_total);
  }
  // At threshold 1 with established counts, most deltas stay resident.
  CHECK(published_total < entries_total_max * static_cast<int64_t>(config.iterations));
  CHECK(check_consistency(result.shard, result.assignments, result.counts).ok());
  fs::remove_all(dir);
}
