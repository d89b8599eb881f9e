#include "lda/delta.hpp"

#include <string>

namespace lda {

DeltaTable::DeltaTable(uint32_t num_topics, uint32_t vocab_size)
    : num_topics_(num_topics),
      vocab_size_(vocab_size),
      cells_(static_cast<size_t>(num_topics) * vocab_size, 0) {
  if (num_topics == 0 || vocab_size == 0) {
    throw ValueError("delta table needs num_topics >= 1 and vocab_size >= 1");
  }
}

size_t DeltaTable::index(uint32_t topic, uint32_t term) const {
  if (topic >= num_topics_ || term >= vocab_size_) {
    throw ValueError("delta cell (" + std::to_string(topic) + ", " +
                     std::to_string(term) + ") outside " +
                     std::to_string(num_topics_) + " x " +
                     std::to_string(vocab_size_));
  }
  return static_cast<size_t>(topic) * vocab_size_ + term;
}

void DeltaTable::add(uint32_t topic, uint32_t term, int64_t delta) {
  int64_t& cell = cells_[index(topic, term)];
  const bool was_zero = cell == 0;
  cell += delta;
  if (was_zero && cell != 0) {
    ++nonzero_;
  } else if (!was_zero && cell == 0) {
    --nonzero_;
  }
}

int64_t DeltaTable::at(uint32_t topic, uint32_t term) const {
  return cells_[index(topic, term)];
}

void DeltaTable::clear_entry(uint32_t topic, uint32_t term) {
  int64_t& cell = cells_[index(topic, term)];
  if (cell != 0) {
    cell = 0;
    --nonzero_;
  }
}

void DeltaTable::clear() {
  std::fill(cells_.begin(), cells_.end(), 0);
  nonzero_ = 0;
}

std::vector<DeltaEntry> DeltaTable::entries() const {
  std::vector<DeltaEntry> out;
  out.reserve(nonzero_);
  for (uint32_t k = 0; k < num_topics_; ++k) {
    const int64_t* row = cells_.data() + static_cast<size_t>(k) * vocab_size_;
    for (uint32_t v = 0; v < vocab_size_; ++v) {
      if (row[v] != 0) out.push_back({k, v, row[v]});
    }
  }
  return out;
}

}  // namespace lda
