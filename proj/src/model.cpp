#include "lda/model.hpp"

#include <cmath>
#include <limits>

#include "lda/bytes.hpp"
#include "lda/fileio.hpp"
#include "lda/rng.hpp"

namespace lda {

namespace {

constexpr uint32_t kCheckpointMagic = 'L' | ('D' << 8) | ('A' << 16) | ('M' << 24);
constexpr uint32_t kCheckpointVersion = 1;
constexpr uint32_t kAssignMagic = 'L' | ('D' << 8) | ('A' << 16) | ('Z' << 24);
constexpr uint32_t kAssignVersion = 1;

}  // namespace

void HyperParams::validate() const {
  if (num_topics < 1) throw ValueError("num_topics must be >= 1");
  if (!(std::isfinite(alpha) && alpha > 0.0)) {
    throw ValueError("alpha must be finite and > 0");
  }
  if (!(std::isfinite(eta) && eta > 0.0)) {
    throw ValueError("eta must be finite and > 0");
  }
}

GlobalCounts::GlobalCounts(uint32_t num_topics, uint32_t vocab_size)
    : num_topics_(num_topics),
      vocab_size_(vocab_size),
      term_topic_(static_cast<size_t>(num_topics) * vocab_size, 0),
      topic_(num_topics, 0) {
  if (num_topics == 0 || vocab_size == 0) {
    throw ValueError("count tables need num_topics >= 1 and vocab_size >= 1");
  }
}

size_t GlobalCounts::index(uint32_t k, uint32_t v) const {
  if (k >= num_topics_ || v >= vocab_size_) {
    throw ValueError("count cell (" + std::to_string(k) + ", " +
                     std::to_string(v) + ") outside " +
                     std::to_string(num_topics_) + " x " +
                     std::to_string(vocab_size_));
  }
  return static_cast<size_t>(v) * num_topics_ + k;
}

std::span<int64_t> GlobalCounts::term_topics(uint32_t v) {
  return {term_topic_.data() + index(0, v), num_topics_};
}

std::span<const int64_t> GlobalCounts::term_topics(uint32_t v) const {
  return {term_topic_.data() + index(0, v), num_topics_};
}

void GlobalCounts::apply_delta(uint32_t k, uint32_t v, int64_t delta) {
  term_topic_[index(k, v)] += delta;
  topic_[k] += delta;
}

void save_checkpoint(const GlobalCounts& counts,
                     const std::filesystem::path& path) {
  const uint32_t num_topics = counts.num_topics();
  const uint32_t vocab_size = counts.vocab_size();
  std::vector<uint8_t> bytes;
  bytes.reserve(16 + (static_cast<size_t>(num_topics) * vocab_size + num_topics) * 8);
  wire::put_u32(bytes, kCheckpointMagic);
  wire::put_u32(bytes, kCheckpointVersion);
  wire::put_u32(bytes, num_topics);
  wire::put_u32(bytes, vocab_size);
  for (uint32_t k = 0; k < num_topics; ++k) {
    for (uint32_t v = 0; v < vocab_size; ++v) {
      wire::put_i64(bytes, counts.topic_term(k, v));
    }
  }
  for (uint32_t k = 0; k < num_topics; ++k) {
    wire::put_i64(bytes, counts.topic_total(k));
  }
  write_file_atomic(path, bytes);
}

GlobalCounts load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  wire::ByteReader reader(bytes.data(), bytes.size(),
                          "checkpoint " + path.string());
  if (reader.u32() != kCheckpointMagic) {
    throw FormatError("checkpoint magic mismatch in " + path.string());
  }
  const uint32_t version = reader.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + " in " + path.string());
  }
  const uint32_t num_topics = reader.u32();
  const uint32_t vocab_size = reader.u32();
  if (num_topics < 1 || vocab_size < 1) {
    throw CorruptionError("checkpoint declares empty table in " + path.string());
  }
  GlobalCounts counts(num_topics, vocab_size);
  for (uint32_t k = 0; k < num_topics; ++k) {
    for (uint32_t v = 0; v < vocab_size; ++v) {
      const int64_t c = reader.i64();
      if (c != 0) counts.apply_delta(k, v, c);
    }
  }
  // apply_delta maintained the row sums, so the stored totals double as a
  // row-sum consistency check.
  for (uint32_t k = 0; k < num_topics; ++k) {
    const int64_t total = reader.i64();
    if (total != counts.topic_total(k)) {
      throw CorruptionError("row-sum mismatch at k=" + std::to_string(k) +
                            " in " + path.string());
    }
  }
  if (!reader.done()) {
    throw CorruptionError("checkpoint has " + std::to_string(reader.remaining()) +
                          " trailing byte(s) in " + path.string());
  }
  return counts;
}

CountTables::CountTables(uint32_t num_topics, uint32_t vocab_size,
                         uint32_t num_local_docs)
    : global_(num_topics, vocab_size),
      num_local_docs_(num_local_docs),
      doc_topic_(static_cast<size_t>(num_local_docs) * num_topics, 0),
      doc_total_(num_local_docs, 0) {}

std::span<int32_t> CountTables::doc_topics(uint32_t m) {
  if (m >= num_local_docs_) {
    throw ValueError("local document " + std::to_string(m) + " outside shard of " +
                     std::to_string(num_local_docs_));
  }
  return {doc_topic_.data() + static_cast<size_t>(m) * num_topics(), num_topics()};
}

std::span<const int32_t> CountTables::doc_topics(uint32_t m) const {
  if (m >= num_local_docs_) {
    throw ValueError("local document " + std::to_string(m) + " outside shard of " +
                     std::to_string(num_local_docs_));
  }
  return {doc_topic_.data() + static_cast<size_t>(m) * num_topics(), num_topics()};
}

InitState init_assignments(const Shard& shard, const HyperParams& params,
                           uint64_t seed) {
  params.validate();
  if (shard.vocab_size == 0) {
    throw ValueError("shard carries no vocabulary size");
  }
  InitState state{
      Assignments{},
      CountTables(params.num_topics, shard.vocab_size, shard.num_docs()),
      DeltaTable(params.num_topics, shard.vocab_size)};
  state.assignments.labels.resize(shard.num_docs());

  Rng rng(derive_stream(seed, streams::kInit, shard.worker_id));
  const uint32_t num_topics = params.num_topics;
  for (uint32_t m = 0; m < shard.num_docs(); ++m) {
    auto doc_topics = state.counts.doc_topics(m);
    auto& labels = state.assignments.labels[m];
    labels.reserve(static_cast<size_t>(
        [&] {
          int64_t n = 0;
          for (const auto& tc : shard.docs[m]) n += tc.count;
          return n;
        }()));
    for (const auto& tc : shard.docs[m]) {
      if (tc.term >= shard.vocab_size) {
        throw RangeError("term " + std::to_string(tc.term) +
                         " outside vocabulary of " +
                         std::to_string(shard.vocab_size));
      }
      for (uint32_t j = 0; j < tc.count; ++j) {
        const uint32_t k = rng.next_below(num_topics);
        labels.push_back(k);
        state.counts.global().apply_delta(k, tc.term, 1);
        ++doc_topics[k];
        ++state.counts.doc_total(m);
        state.delta.add(k, tc.term, 1);
      }
    }
  }
  return state;
}

ConsistencyReport check_consistency(const Shard& shard,
                                    const Assignments& assignments,
                                    const CountTables& counts) {
  ConsistencyReport report;
  bool truncated = false;
  auto note = [&](std::string msg) {
    if (report.violations.size() < 100) {
      report.violations.push_back(std::move(msg));
    } else {
      truncated = true;
    }
  };

  const uint32_t num_topics = counts.num_topics();
  const uint32_t vocab_size = counts.vocab_size();
  if (assignments.labels.size() != shard.docs.size() ||
      counts.num_local_docs() != shard.docs.size()) {
    note("document count mismatch: shard " + std::to_string(shard.docs.size()) +
         ", assignments " + std::to_string(assignments.labels.size()) +
         ", tables " + std::to_string(counts.num_local_docs()));
    return report;
  }

  GlobalCounts local(num_topics, vocab_size);
  for (uint32_t m = 0; m < shard.num_docs(); ++m) {
    const auto& labels = assignments.labels[m];
    std::vector<int64_t> from_labels(num_topics, 0);
    size_t pos = 0;
    int64_t doc_tokens = 0;
    for (const auto& tc : shard.docs[m]) {
      for (uint32_t j = 0; j < tc.count; ++j, ++doc_tokens) {
        if (pos >= labels.size()) break;
        const uint32_t k = labels[pos++];
        if (k >= num_topics) {
          note("label out of range at document " + std::to_string(m));
          continue;
        }
        ++from_labels[k];
        local.apply_delta(k, tc.term, 1);
      }
    }
    if (pos != labels.size() || doc_tokens != static_cast<int64_t>(labels.size())) {
      note("label count mismatch at document " + std::to_string(m) + ": " +
           std::to_string(labels.size()) + " labels for " +
           std::to_string(doc_tokens) + " tokens");
    }

    const auto row = counts.doc_topics(m);
    int64_t row_sum = 0;
    for (uint32_t k = 0; k < num_topics; ++k) {
      row_sum += row[k];
      if (row[k] < 0) {
        note("negative document-topic count at document " + std::to_string(m) +
             ", topic " + std::to_string(k));
      } else if (row[k] != from_labels[k]) {
        note("doc-topic counts disagree with assignments at document " +
             std::to_string(m) + ", topic " + std::to_string(k));
      }
    }
    if (row_sum != counts.doc_total(m)) {
      note("doc-topic sum mismatch at document " + std::to_string(m));
    }
    if (counts.doc_total(m) != doc_tokens) {
      note("document total mismatch at document " + std::to_string(m));
    }
  }

  for (uint32_t k = 0; k < num_topics; ++k) {
    int64_t row_sum = 0;
    for (uint32_t v = 0; v < vocab_size; ++v) {
      row_sum += counts.global().topic_term(k, v);
    }
    if (row_sum != counts.global().topic_total(k)) {
      note("row-sum mismatch at k=" + std::to_string(k));
    }
  }

  int64_t grand_total = 0;
  for (uint32_t k = 0; k < num_topics; ++k) {
    grand_total += counts.global().topic_total(k);
  }
  const int64_t expected = shard.total_tokens() + counts.merged_delta_total();
  if (grand_total != expected) {
    note("token balance mismatch: sum(n_k)=" + std::to_string(grand_total) +
         ", shard tokens + merged deltas=" + std::to_string(expected));
  }

  if (counts.merged_delta_total() == 0) {
    for (uint32_t k = 0; k < num_topics; ++k) {
      for (uint32_t v = 0; v < vocab_size; ++v) {
        if (counts.global().topic_term(k, v) != local.topic_term(k, v)) {
          note("topic-term counts disagree with assignments at topic " +
               std::to_string(k) + ", term " + std::to_string(v));
        }
      }
    }
  }

  if (truncated) report.violations.push_back("further violations suppressed");
  return report;
}

void save_assignments(const Shard& shard, const Assignments& assignments,
                      uint32_t num_topics, const std::filesystem::path& path) {
  if (assignments.labels.size() != shard.docs.size()) {
    throw ValueError("assignments do not match shard document count");
  }
  std::vector<uint8_t> bytes;
  wire::put_u32(bytes, kAssignMagic);
  wire::put_u32(bytes, kAssignVersion);
  wire::put_u32(bytes, num_topics);
  wire::put_u32(bytes, shard.num_docs());
  for (uint32_t m = 0; m < shard.num_docs(); ++m) {
    const auto& labels = assignments.labels[m];
    if (labels.size() > std::numeric_limits<uint32_t>::max()) {
      throw CapacityError("document " + std::to_string(m) + " label list too long");
    }
    wire::put_u32(bytes, shard.doc_ids.at(m));
    wire::put_u32(bytes, static_cast<uint32_t>(labels.size()));
    for (uint32_t label : labels) {
      if (label >= num_topics) {
        throw ValueError("label " + std::to_string(label) + " outside " +
                         std::to_string(num_topics) + " topics");
      }
      wire::put_u32(bytes, label);
    }
  }
  write_file_atomic(path, bytes);
}

LoadedAssignments load_assignments(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  wire::ByteReader reader(bytes.data(), bytes.size(),
                          "assignment dump " + path.string());
  if (reader.u32() != kAssignMagic) {
    throw FormatError("assignment dump magic mismatch in " + path.string());
  }
  const uint32_t version = reader.u32();
  if (version != kAssignVersion) {
    throw FormatError("unsupported assignment dump version " +
                      std::to_string(version) + " in " + path.string());
  }
  LoadedAssignments out;
  out.num_topics = reader.u32();
  if (out.num_topics < 1) {
    throw CorruptionError("assignment dump declares zero topics in " +
                          path.string());
  }
  const uint32_t num_docs = reader.u32();
  out.doc_ids.reserve(num_docs);
  out.labels.reserve(num_docs);
  for (uint32_t d = 0; d < num_docs; ++d) {
    out.doc_ids.push_back(reader.u32());
    const uint32_t num_labels = reader.u32();
    std::vector<uint32_t> labels;
    labels.reserve(num_labels);
    for (uint32_t i = 0; i < num_labels; ++i) {
      const uint32_t label = reader.u32();
      if (label >= out.num_topics) {
        throw CorruptionError("label out of range in " + path.string());
      }
      labels.push_back(label);
    }
    out.labels.push_back(std::move(labels));
  }
  if (!reader.done()) {
    throw CorruptionError("assignment dump has trailing bytes in " +
                          path.string());
  }
  return out;
}

}  // namespace lda
