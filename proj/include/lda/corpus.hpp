#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lda/errors.hpp"

namespace lda {

// One distinct term within a document and how often it occurs there.
struct TermCount {
  uint32_t term = 0;  // 0-based vocabulary id, < Corpus::vocab_size
  uint32_t count = 0; // >= 1
  friend bool operator==(const TermCount&, const TermCount&) = default;
};

// A document as a sparse term histogram, sorted by term id.
using Document = std::vector<TermCount>;

// A bag-of-words corpus. Documents hold 0-based term ids; `vocab` (optional)
// maps term id -> surface string.
struct Corpus {
  uint32_t vocab_size = 0;
  std::vector<Document> docs;
  std::optional<std::vector<std::string>> vocab;

  uint32_t num_docs() const { return static_cast<uint32_t>(docs.size()); }
  // Total token occurrences in document m (sum of counts).
  int64_t doc_tokens(uint32_t m) const;
  // Total token occurrences in the corpus.
  int64_t total_tokens() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Parses the bag-of-words text interchange format:
//
//   line 1: D      (number of documents)
//   line 2: W      (vocabulary size)
//   line 3: NNZ    (number of docID/wordID lines that follow)
//   then NNZ lines of "docID wordID count", docID/wordID 1-based.
//
// Ids are converted to 0-based. Entries may arrive in any order; duplicate
// (doc, word) pairs have their counts summed. Documents absent from the file
// come back empty (a document may legitimately have no tokens after a split).
// Throws ParseError / RangeError / ValueError with the offending 1-based line
// number in the message.
//
// When `vocab` is non-null it is read as one term per line; the line count
// must equal W.
Corpus parse_uci_bow(std::istream& docword, std::istream* vocab = nullptr);

// Writes the same format back out (entries sorted by doc, then term).
// parse -> write -> parse is the identity on the parsed representation.
void write_uci_bow(const Corpus& corpus, std::ostream& out);

struct SplitResult {
  Corpus train;
  Corpus test;
};

// Splits off ceil(num_docs * test_fraction) documents, chosen by a seeded
// shuffle of document ids, into `test`; the rest stay in `train`. Both halves
// keep the original relative document order and share vocab_size/vocab.
// test_fraction must lie in [0, 1); the corpus must have at least 1 document.
SplitResult split_corpus(const Corpus& corpus, double test_fraction,
                         uint64_t seed);

// The slice of a corpus a single worker trains on. `doc_ids[i]` is the global
// document id of local document i. Carries the corpus vocabulary size so a
// shard alone suffices to size count tables.
struct Shard {
  uint32_t worker_id = 0;
  uint32_t vocab_size = 0;
  std::vector<uint32_t> doc_ids;
  std::vector<Document> docs;

  uint32_t num_docs() const { return static_cast<uint32_t>(docs.size()); }
  int64_t total_tokens() const;
};

// Deals documents to `num_workers` shards. With no weights: round-robin by
// document index (doc i -> worker i mod C), so shard sizes differ by at most
// one document. With weights (size must equal num_workers, all > 0): largest-
// remainder assignment proportional to weight, ties to the lower worker id.
// Deterministic in its inputs.
std::vector<Shard> partition_documents(const Corpus& corpus,
                                       uint32_t num_workers,
                                       const std::vector<double>& weights = {});

}  // namespace lda
