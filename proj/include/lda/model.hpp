#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lda/corpus.hpp"
#include "lda/delta.hpp"

namespace lda {

struct HyperParams {
  uint32_t num_topics = 50;
  double alpha = 0.1;  // symmetric document-topic prior
  double eta = 0.01;   // symmetric topic-term prior
  // ValueError unless num_topics >= 1 and both priors are finite and > 0.
  void validate() const;
};

// Token-level topic labels for one shard: labels[m][i] is the topic of the
// i-th token of local document m. Token order is the document's term entries
// in term order, each term repeated count times.
struct Assignments {
  std::vector<std::vector<uint32_t>> labels;
};

// The shared model state: topic-term counts n[k][v] and their per-topic
// totals n[k]. Counts are int64 and may go transiently negative under
// asynchronous merges; consumers clamp at read time.
//
// In memory n[k][v] is stored term-major (a contiguous K-run per term v),
// which is the sampler's access pattern. The checkpoint format on disk is
// topic-major; save/load transpose.
class GlobalCounts {
 public:
  GlobalCounts() = default;
  GlobalCounts(uint32_t num_topics, uint32_t vocab_size);

  uint32_t num_topics() const { return num_topics_; }
  uint32_t vocab_size() const { return vocab_size_; }

  int64_t topic_term(uint32_t k, uint32_t v) const {
    return term_topic_[index(k, v)];
  }
  int64_t topic_total(uint32_t k) const { return topic_.at(k); }

  // The K-run n[.][v] for one term, and the totals n[.].
  std::span<int64_t> term_topics(uint32_t v);
  std::span<const int64_t> term_topics(uint32_t v) const;
  std::span<int64_t> topic_totals() { return topic_; }
  std::span<const int64_t> topic_totals() const { return topic_; }

  // Applies one count change to n[k][v] and n[k] together, keeping the
  // row-sum invariant n[k] == sum_v n[k][v] intact.
  void apply_delta(uint32_t k, uint32_t v, int64_t delta);

  friend bool operator==(const GlobalCounts&, const GlobalCounts&) = default;

 private:
  size_t index(uint32_t k, uint32_t v) const;

  uint32_t num_topics_ = 0;
  uint32_t vocab_size_ = 0;
  std::vector<int64_t> term_topic_;  // [v * K + k]
  std::vector<int64_t> topic_;       // [k]
};

// Checkpoint file: magic "LDAM", version u32 = 1, K u32, V u32, then
// n[k][v] topic-major as K*V little-endian int64, then the K totals n[k].
// Written atomically. Load rejects bad magic/version (FormatError), short
// payloads (TruncationError), and row-sum-inconsistent tables
// (CorruptionError).
void save_checkpoint(const GlobalCounts& counts,
                     const std::filesystem::path& path);
GlobalCounts load_checkpoint(const std::filesystem::path& path);

// Everything one worker mutates while sampling: the global tables plus its
// private document-topic counts n[m][k] and document totals n[m].
class CountTables {
 public:
  CountTables() = default;
  CountTables(uint32_t num_topics, uint32_t vocab_size,
              uint32_t num_local_docs);

  uint32_t num_topics() const { return global_.num_topics(); }
  uint32_t vocab_size() const { return global_.vocab_size(); }
  uint32_t num_local_docs() const { return num_local_docs_; }

  GlobalCounts& global() { return global_; }
  const GlobalCounts& global() const { return global_; }

  std::span<int32_t> doc_topics(uint32_t m);
  std::span<const int32_t> doc_topics(uint32_t m) const;
  int64_t doc_total(uint32_t m) const { return doc_total_.at(m); }
  int64_t& doc_total(uint32_t m) { return doc_total_.at(m); }

  // Net count merged in from other workers' delta files. Together with the
  // shard's own token count this predicts sum_k n[k] (token balance).
  int64_t merged_delta_total() const { return merged_delta_total_; }
  void add_merged_delta(int64_t d) { merged_delta_total_ += d; }

  // Diagnostics: number of times a consumer observed (and clamped) a
  // negative global count. Not an error; see the sync module notes.
  int64_t negative_count_observations() const { return negative_counts_; }
  void note_negative_count() { ++negative_counts_; }

 private:
  GlobalCounts global_;
  uint32_t num_local_docs_ = 0;
  std::vector<int32_t> doc_topic_;  // [m * K + k]
  std::vector<int64_t> doc_total_;  // [m]
  int64_t merged_delta_total_ = 0;
  int64_t negative_counts_ = 0;
};

struct InitState {
  Assignments assignments;
  CountTables counts;
  DeltaTable delta;  // this worker's full initial contribution
};

// Assigns every token a uniformly random topic and builds matching count
// tables; the returned delta table equals the worker's entire contribution,
// ready for the unfiltered initial publish. Deterministic in
// (seed, shard.worker_id).
InitState init_assignments(const Shard& shard, const HyperParams& params,
                           uint64_t seed);

struct ConsistencyReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Cross-checks every stored count against a recomputation from the
// assignments: document totals, document-topic rows, the global row-sum
// invariant, and token balance sum_k n[k] == shard tokens + merged deltas.
// When nothing has been merged in, the topic-term table itself must equal
// the local recomputation cell for cell. Collects violations rather than
// throwing.
ConsistencyReport check_consistency(const Shard& shard,
                                    const Assignments& assignments,
                                    const CountTables& counts);

// Assignment dump: magic "LDAZ", version u32 = 1, K u32, doc count u32, then
// per document: global doc id u32, token count u32, that many u32 labels.
// Used to compare runs token for token.
void save_assignments(const Shard& shard, const Assignments& assignments,
                      uint32_t num_topics, const std::filesystem::path& path);

struct LoadedAssignments {
  uint32_t num_topics = 0;
  std::vector<uint32_t> doc_ids;
  std::vector<std::vector<uint32_t>> labels;
};
LoadedAssignments load_assignments(const std::filesystem::path& path);

}  // namespace lda
