#pragma once

#include <cstdint>
#include <vector>

#include "lda/errors.hpp"

namespace lda {

// One accumulated topic-term count change.
struct DeltaEntry {
  uint32_t topic = 0;
  uint32_t term = 0;
  int64_t delta = 0;  // never 0 in materialized entry lists
  friend bool operator==(const DeltaEntry&, const DeltaEntry&) = default;
};

// Accumulates a worker's unpublished topic-term count changes.
//
// Semantically a sparse map (topic, term) -> delta that drops entries when
// they cancel to zero; physically a dense K x V array so the sampler's
// per-token updates stay O(1) with no hashing on the hot path. At trainer
// scale (K=50, V~10^4) the dense backing is a few MB per worker.
class DeltaTable {
 public:
  DeltaTable() = default;
  DeltaTable(uint32_t num_topics, uint32_t vocab_size);

  uint32_t num_topics() const { return num_topics_; }
  uint32_t vocab_size() const { return vocab_size_; }

  // Number of (topic, term) cells currently holding a nonzero delta.
  size_t size() const { return nonzero_; }
  bool empty() const { return nonzero_ == 0; }

  void add(uint32_t topic, uint32_t term, int64_t delta);
  int64_t at(uint32_t topic, uint32_t term) const;
  // Drops the cell's accumulated delta (used after publishing it).
  void clear_entry(uint32_t topic, uint32_t term);
  void clear();

  // All nonzero entries, sorted by (topic, term).
  std::vector<DeltaEntry> entries() const;

 private:
  size_t index(uint32_t topic, uint32_t term) const;

  uint32_t num_topics_ = 0;
  uint32_t vocab_size_ = 0;
  std::vector<int64_t> cells_;  // [topic * V + term]
  size_t nonzero_ = 0;
};

}  // namespace lda
