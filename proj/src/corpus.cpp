#include "lda/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lda/rng.hpp"

namespace lda {

namespace {

std::string at_line(size_t n) { return "line " + std::to_string(n) + ": "; }

// Reads one line, stripping a trailing '\r' so CRLF files parse too.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t") == std::string::npos;
}

// Parses exactly `n` whitespace-separated integers; anything else on the
// line is an error.
void parse_ints(const std::string& line, size_t lineno, int64_t* out, int n) {
  std::istringstream in(line);
  for (int i = 0; i < n; ++i) {
    if (!(in >> out[i])) {
      throw ParseError(at_line(lineno) + "expected " + std::to_string(n) +
                       " integer field(s) in \"" + line + "\"");
    }
  }
  std::string rest;
  if (in >> rest) {
    throw ParseError(at_line(lineno) + "trailing data \"" + rest + "\"");
  }
}

}  // namespace

int64_t Corpus::doc_tokens(uint32_t m) const {
  int64_t n = 0;
  for (const auto& tc : docs.at(m)) n += tc.count;
  return n;
}

int64_t Corpus::total_tokens() const {
  int64_t n = 0;
  for (uint32_t m = 0; m < num_docs(); ++m) n += doc_tokens(m);
  return n;
}

int64_t Shard::total_tokens() const {
  int64_t n = 0;
  for (const auto& doc : docs)
    for (const auto& tc : doc) n += tc.count;
  return n;
}

Corpus parse_uci_bow(std::istream& docword, std::istream* vocab) {
  std::string line;
  size_t lineno = 0;

  static const char* kHeaderNames[3] = {"document count", "vocabulary size",
                                        "entry count"};
  int64_t header[3];
  for (int i = 0; i < 3; ++i) {
    ++lineno;
    if (!next_line(docword, line)) {
      throw ParseError(at_line(lineno) + std::string(kHeaderNames[i]) +
                       " missing");
    }
    parse_ints(line, lineno, &header[i], 1);
    if (header[i] < 0) {
      throw ValueError(at_line(lineno) + std::string(kHeaderNames[i]) +
                       " must be nonnegative");
    }
  }
  const int64_t num_docs = header[0];
  const int64_t vocab_size = header[1];
  const int64_t num_entries = header[2];
  if (num_docs < 1) throw ValueError(at_line(1) + "document count must be >= 1");
  if (vocab_size < 1) {
    throw ValueError(at_line(2) + "vocabulary size must be >= 1");
  }
  const auto u32max =
      static_cast<int64_t>(std::numeric_limits<uint32_t>::max());
  if (num_docs > u32max || vocab_size > u32max) {
    throw CapacityError("header sizes exceed 32-bit id space");
  }

  // Entries may repeat a (doc, word) pair; accumulate in 64 bits, narrow at
  // the end.
  std::vector<std::vector<std::pair<uint32_t, uint64_t>>> acc(num_docs);
  for (int64_t i = 0; i < num_entries; ++i) {
    ++lineno;
    if (!next_line(docword, line)) {
      throw ParseError(at_line(lineno) + "unexpected end of input: header declares " +
                       std::to_string(num_entries) + " entries, found " +
                       std::to_string(i));
    }
    int64_t f[3];
    parse_ints(line, lineno, f, 3);
    if (f[0] < 1 || f[0] > num_docs) {
      throw RangeError(at_line(lineno) + "docID " + std::to_string(f[0]) +
                       " out of range [1, " + std::to_string(num_docs) + "]");
    }
    if (f[1] < 1 || f[1] > vocab_size) {
      throw RangeError(at_line(lineno) + "wordID " + std::to_string(f[1]) +
                       " out of range [1, " + std::to_string(vocab_size) + "]");
    }
    if (f[2] < 1) throw ValueError(at_line(lineno) + "count must be >= 1");
    if (f[2] > u32max) throw CapacityError(at_line(lineno) + "count too large");
    acc[f[0] - 1].emplace_back(static_cast<uint32_t>(f[1] - 1),
                               static_cast<uint64_t>(f[2]));
  }
  while (next_line(docword, line)) {
    ++lineno;
    if (!blank(line)) {
      throw ParseError(at_line(lineno) + "data after the declared " +
                       std::to_string(num_entries) + " entries");
    }
  }

  Corpus corpus;
  corpus.vocab_size = static_cast<uint32_t>(vocab_size);
  corpus.docs.resize(num_docs);
  for (int64_t m = 0; m < num_docs; ++m) {
    auto& entries = acc[m];
    std::sort(entries.begin(), entries.end());
    Document& doc = corpus.docs[m];
    for (size_t i = 0; i < entries.size();) {
      const uint32_t term = entries[i].first;
      uint64_t total = 0;
      for (; i < entries.size() && entries[i].first == term; ++i) {
        total += entries[i].second;
      }
      if (total > std::numeric_limits<uint32_t>::max()) {
        throw CapacityError("combined count for docID " + std::to_string(m + 1) +
                            " wordID " + std::to_string(term + 1) +
                            " exceeds 32 bits");
      }
      doc.push_back({term, static_cast<uint32_t>(total)});
    }
  }

  if (vocab != nullptr) {
    std::vector<std::string> terms;
    std::string vline;
    while (next_line(*vocab, vline)) terms.push_back(vline);
    while (!terms.empty() && blank(terms.back())) terms.pop_back();
    if (static_cast<int64_t>(terms.size()) != vocab_size) {
      throw ParseError("vocabulary file has " + std::to_string(terms.size()) +
                       " terms, docword header declares " +
                       std::to_string(vocab_size));
    }
    corpus.vocab = std::move(terms);
  }
  return corpus;
}

void write_uci_bow(const Corpus& corpus, std::ostream& out) {
  int64_t num_entries = 0;
  for (const auto& doc : corpus.docs) {
    num_entries += static_cast<int64_t>(doc.size());
  }
  out << corpus.num_docs() << '\n'
      << corpus.vocab_size << '\n'
      << num_entries << '\n';
  for (uint32_t m = 0; m < corpus.num_docs(); ++m) {
    for (const auto& tc : corpus.docs[m]) {
      out << (m + 1) << ' ' << (tc.term + 1) << ' ' << tc.count << '\n';
    }
  }
  if (!out) throw IoError("bag-of-words write failed");
}

SplitResult split_corpus(const Corpus& corpus, double test_fraction,
                         uint64_t seed) {
  if (corpus.num_docs() == 0) {
    throw ValueError("split: corpus has no documents");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ValueError("split: test fraction must be in [0, 1)");
  }
  const uint32_t num_docs = corpus.num_docs();
  const auto num_test = static_cast<uint32_t>(
      std::ceil(static_cast<double>(num_docs) * test_fraction));

  std::vector<uint32_t> ids(num_docs);
  std::iota(ids.begin(), ids.end(), 0u);
  Rng rng(derive_stream(seed, streams::kSplit));
  for (uint32_t i = num_docs - 1; i > 0; --i) {
    const uint32_t j = rng.next_below(i + 1);
    std::swap(ids[i], ids[j]);
  }

  std::vector<char> in_test(num_docs, 0);
  for (uint32_t i = 0; i < num_test; ++i) in_test[ids[i]] = 1;

  SplitResult split;
  split.train.vocab_size = split.test.vocab_size = corpus.vocab_size;
  split.train.vocab = split.test.vocab = corpus.vocab;
  for (uint32_t m = 0; m < num_docs; ++m) {
    (in_test[m] ? split.test : split.train).docs.push_back(corpus.docs[m]);
  }
  return split;
}

std::vector<Shard> partition_documents(const Corpus& corpus,
                                       uint32_t num_workers,
                                       const std::vector<double>& weights) {
  if (num_workers < 1) throw ValueError("partition: need at least one worker");
  if (!weights.empty()) {
    if (weights.size() != num_workers) {
      throw ValueError("partition: got " + std::to_string(weights.size()) +
                       " weights for " + std::to_string(num_workers) +
                       " workers");
    }
    for (double w : weights) {
      if (!(w > 0.0)) throw ValueError("partition: weights must be positive");
    }
  }

  const uint32_t num_docs = corpus.num_docs();
  std::vector<Shard> shards(num_workers);
  for (uint32_t w = 0; w < num_workers; ++w) {
    shards[w].worker_id = w;
    shards[w].vocab_size = corpus.vocab_size;
  }

  std::vector<uint32_t> owner(num_docs);
  if (weights.empty()) {
    for (uint32_t m = 0; m < num_docs; ++m) owner[m] = m % num_workers;
  } else {
    // Greedy largest-deficit: hand each document to the worker whose share of
    // the documents seen so far falls shortest of its weight quota.
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<int64_t> assigned(num_workers, 0);
    for (uint32_t m = 0; m < num_docs; ++m) {
      uint32_t best = 0;
      double best_deficit = -std::numeric_limits<double>::infinity();
      for (uint32_t w = 0; w < num_workers; ++w) {
        const double quota =
            weights[w] / total * static_cast<double>(m + 1);
        const double deficit = quota - static_cast<double>(assigned[w]);
        if (deficit > best_deficit) {
          best_deficit = deficit;
          best = w;
        }
      }
      owner[m] = best;
      ++assigned[best];
    }
  }

  for (uint32_t m = 0; m < num_docs; ++m) {
    shards[owner[m]].doc_ids.push_back(m);
    shards[owner[m]].docs.push_back(corpus.docs[m]);
  }
  return shards;
}

}  // namespace lda
