#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lda/corpus.hpp"
#include "lda/fileio.hpp"
#include "lda/manifest.hpp"
#include "lda/model.hpp"
#include "lda/sync.hpp"
#include "lda/worker.hpp"

using namespace lda;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path temp_dir(const char* tag) {
  auto dir = fs::temp_directory_path() /
             (std::string("lda_cli_") + tag + "_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs `lda <args>` through the shell, capturing both streams.
CommandResult run_lda(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto base = fs::temp_directory_path() /
                    ("lda_cli_io_" + std::to_string(getpid()) + "_" +
                     std::to_string(counter++));
  const auto out_path = base.string() + ".out";
  const auto err_path = base.string() + ".err";
  const std::string command = env + (env.empty() ? "" : " ") + LDA_BINARY_PATH +
                              " " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(command.c_str());

  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  };
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  fs::remove(out_path);
  fs::remove(err_path);
  return result;
}

}  // namespace

TEST_CASE("usage errors exit nonzero with a diagnostic") {
  CHECK(run_lda("").exit_code != 0);
  CHECK(run_lda("no-such-command").exit_code != 0);
  CHECK(run_lda("train --out /tmp/x").exit_code != 0);  // no corpus source
  const auto bad_flag = run_lda("train --frobnicate");
  CHECK(bad_flag.exit_code != 0);
  CHECK(!bad_flag.err.empty());

  const auto missing = run_lda(
      "train --corpus /nonexistent/docword.txt --out /tmp/lda_cli_missing "
      "--iters 1 --workers 1");
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find("lda:") != std::string::npos);
}

TEST_CASE("synth writes a parseable corpus of the requested shape") {
  const auto dir = temp_dir("synth");
  const auto corpus_path = dir / "docword.txt";
  const auto r =
      run_lda("synth --spec 40,60,4,25,9 --out " + corpus_path.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("documents=40") != std::string::npos);

  std::ifstream in(corpus_path);
  const Corpus corpus = parse_uci_bow(in);
  CHECK(corpus.num_docs() == 40);
  CHECK(corpus.vocab_size == 60);
  CHECK(corpus.total_tokens() == 40 * 25);

  // Same spec, same bytes: generation is deterministic.
  const auto again = dir / "again.txt";
  run_lda("synth --spec 40,60,4,25,9 --out " + again.string());
  CHECK(read_file_text(corpus_path) == read_file_text(again));
  fs::remove_all(dir);
}

TEST_CASE("train runs a two-worker cohort and writes the full artifact set") {
  const auto dir = temp_dir("train");
  const auto r = run_lda(
      "train --synthetic 36,50,4,18,7 --out " + dir.string() +
      " --workers 2 --iters 4 --topics 5 --threshold 0.1 --seed 3"
      " --test-fraction 0.25 --eval-every 2 --burn-in 5 --samples 2"
      " --write-assignments");
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("workers=2") != std::string::npos);
  CHECK(r.out.find("final_perplexity_w0=") != std::string::npos);

  // Per-worker metrics, checkpoints, assignments; aggregated metrics.csv.
  for (int w = 0; w < 2; ++w) {
    const auto suffix = "_w" + std::to_string(w);
    CHECK(fs::exists(dir / ("metrics" + suffix + ".csv")));
    const auto counts = load_checkpoint(dir / ("checkpoint" + suffix + ".bin"));
    CHECK(counts.num_topics() == 5);
    CHECK(counts.vocab_size() == 50);
    CHECK(fs::exists(dir / ("assign" + suffix + ".bin")));
  }

  const std::string aggregated = read_file_text(dir / "metrics.csv");
  REQUIRE(aggregated.rfind("worker," + metrics_csv_header() + "\n", 0) == 0);
  std::vector<std::pair<int, int>> order;  // (iteration, worker)
  std::istringstream in(aggregated);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const int worker = std::stoi(line.substr(0, line.find(',')));
    const int iteration = std::stoi(line.substr(line.find(',') + 1));
    order.push_back({iteration, worker});
  }
  CHECK(order.size() == 8);  // 2 workers x 4 iterations
  CHECK(std::is_sorted(order.begin(), order.end()));

  // The manifest records the run's inputs and outcome.
  const RunManifest manifest = RunManifest::load(dir / "manifest.txt");
  CHECK(manifest.get("status") == std::string("ok"));
  CHECK(manifest.get("workers") == std::string("2"));
  CHECK(manifest.get("topics") == std::string("5"));
  CHECK(manifest.get("threshold").has_value());
  CHECK(manifest.get("corpus_fnv1a64").has_value());
  CHECK(manifest.get("corpus") == std::string("synthetic:36,50,4,18,7"));

  SUBCASE("inspect-delta prints the published header and entries") {
    const auto delta = dir / "sync" / "delta_0_0.bin";
    REQUIRE(fs::exists(delta));
    const auto inspect = run_lda("inspect-delta " + delta.string());
    CHECK(inspect.exit_code == 0);
    CHECK(inspect.out.find("worker=0 iteration=0 entries=") !=
          std::string::npos);

    const auto junk = dir / "junk.bin";
    write_file_atomic(junk, std::string("nope"));
    CHECK(run_lda("inspect-delta " + junk.string()).exit_code == 1);
  }

  SUBCASE("gc removes the files all heartbeats have passed") {
    // Both workers heartbeat at 4, so iterations 0-3 are collectable.
    const auto gc = run_lda("gc --sync-dir " + (dir / "sync").string());
    CHECK(gc.exit_code == 0);
    CHECK(gc.out.find("removed 8 delta file(s)") != std::string::npos);
    CHECK(fs::exists(dir / "sync" / "delta_0_4.bin"));
    CHECK(!fs::exists(dir / "sync" / "delta_1_3.bin"));
  }

  SUBCASE("eval scores a checkpoint against a held-out file") {
    const auto test_path = dir / "test.txt";
    run_lda("synth --spec 10,50,4,18,99 --out " + test_path.string());
    const auto eval = run_lda(
        "eval --checkpoint " + (dir / "checkpoint_w0.bin").string() +
        " --test " + test_path.string() + " --burn-in 5 --samples 2");
    REQUIRE_MESSAGE(eval.exit_code == 0, eval.err);
    CHECK(eval.out.find("perplexity=") != std::string::npos);
    CHECK(eval.out.find("documents=10") != std::string::npos);

    // Vocabulary mismatch is a clean failure, not a crash.
    run_lda("synth --spec 10,31,4,18,99 --out " + test_path.string());
    const auto mismatch = run_lda(
        "eval --checkpoint " + (dir / "checkpoint_w0.bin").string() +
        " --test " + test_path.string());
    CHECK(mismatch.exit_code == 1);
    CHECK(mismatch.err.find("vocabulary") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("flags can arrive as LDA_-prefixed environment variables") {
  const auto dir = temp_dir("env");
  const auto r = run_lda("train --synthetic 12,20,2,8,1 --out " + dir.string() +
                             " --iters 2 --test-fraction 0",
                         "LDA_TOPICS=7 LDA_WORKERS=1");
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  const RunManifest manifest = RunManifest::load(dir / "manifest.txt");
  CHECK(manifest.get("topics") == std::string("7"));
  CHECK(load_checkpoint(dir / "checkpoint_w0.bin").num_topics() == 7);
  fs::remove_all(dir);
}

TEST_CASE("a crashed worker is reported by id and signal, exit stays nonzero") {
  const auto dir = temp_dir("fault");
  const auto r = run_lda(
      "train --synthetic 24,30,3,10,2 --out " + dir.string() +
          " --workers 2 --iters 3 --test-fraction 0 --final-sync-timeout 2",
      "LDA_FAULT_WORKER=1 LDA_FAULT_ITER=2");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("worker 1 killed by signal 6") != std::string::npos);

  // The survivor's artifacts and the aggregate still exist.
  CHECK(fs::exists(dir / "checkpoint_w0.bin"));
  CHECK(fs::exists(dir / "metrics.csv"));
  const RunManifest manifest = RunManifest::load(dir / "manifest.txt");
  CHECK(manifest.get("status") == std::string("failed"));
  REQUIRE(manifest.get("failures").has_value());
  CHECK(manifest.get("failures")->find("killed by signal 6") !=
        std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("bench sweeps its grid and emits one CSV row per cell") {
  const auto dir = temp_dir("bench");
  const auto r = run_lda(
      "bench --synthetic 24,30,3,10,4 --out-dir " + dir.string() +
      " --workers-list 1,2 --thresholds 0,0.2 --iters 2 --topics 4"
      " --test-fraction 0.2 --burn-in 3 --samples 2 --seed 6");
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);

  const std::string csv = read_file_text(dir / "bench.csv");
  CHECK(csv.rfind("workers,threshold,status,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4);  // header + cells
  CHECK(csv.find("\n1,0,ok,") != std::string::npos);
  CHECK(csv.find("\n2,0.20000000000000001,ok,") != std::string::npos);
  // Cell sync dirs are cleaned up after measurement; artifacts remain.
  CHECK(fs::exists(dir / "cell_w2_t0p2" / "checkpoint_w1.bin"));
  CHECK(!fs::exists(dir / "cell_w2_t0p2" / "sync"));
  fs::remove_all(dir);
}
