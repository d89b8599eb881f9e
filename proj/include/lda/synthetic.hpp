#pragma once

#include <cstdint>
#include <string>

#include "lda/corpus.hpp"

namespace lda {

// Parameters for a generated corpus with known structure, used by tests and
// the benchmark harness. Serialized form: "docs,vocab,topics,doclen,seed".
struct SyntheticSpec {
  uint32_t num_docs = 0;
  uint32_t vocab_size = 0;
  uint32_t num_topics = 0;  // true generating topics
  uint32_t doc_len = 0;     // tokens per document
  uint64_t seed = 0;

  static SyntheticSpec parse(const std::string& text);  // ValueError on junk
  std::string to_string() const;
  void validate() const;
};

// Samples a corpus from a topic model with block-structured topics: topic k
// puts 95% of its mass uniformly on its own contiguous vocabulary block and
// 5% on the rest, and each document draws its topic mixture from a sparse
// symmetric Dirichlet(0.1). Deterministic in its SyntheticSpec (seed included).
Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace lda
