#include <doctest.h>

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "lda/corpus.hpp"
#include "lda/errors.hpp"

using namespace lda;

namespace {

Corpus parse(const std::string& docword) {
  std::istringstream in(docword);
  return parse_uci_bow(in);
}

}  // namespace

TEST_CASE("parses a docword file with out-of-order and duplicate entries") {
  // Doc 2 is listed before doc 1, doc 1 repeats (doc, word) = (1, 3), and
  // doc 3 has no entries at all.
  std::istringstream docword(
      "3\n"
      "4\n"
      "5\n"
      "2 1 7\r\n"  // CRLF tolerated
      "1 3 2\n"
      "1 1 1\n"
      "1 3 3\n"
      "2 4 1\n"
      "\n");
  std::istringstream vocab("alpha\nbeta\ngamma\ndelta\n");
  const Corpus corpus = parse_uci_bow(docword, &vocab);

  CHECK(corpus.num_docs() == 3);
  CHECK(corpus.vocab_size == 4);
  CHECK(corpus.docs[0] == Document{{0, 1}, {2, 5}});  // duplicates summed
  CHECK(corpus.docs[1] == Document{{0, 7}, {3, 1}});
  CHECK(corpus.docs[2].empty());
  CHECK(corpus.doc_tokens(0) == 6);
  CHECK(corpus.total_tokens() == 14);
  REQUIRE(corpus.vocab.has_value());
  CHECK((*corpus.vocab)[2] == "gamma");
}

TEST_CASE("parse errors carry the offending line number") {
  CHECK_THROWS_WITH_AS(parse("x\n4\n0\n"),
                       doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(parse("2\n3\n1\n1 2\n"),
                       doctest::Contains("line 4"), ParseError);
  // docID / wordID off the declared ends.
  CHECK_THROWS_WITH_AS(parse("2\n3\n1\n3 1 1\n"),
                       doctest::Contains("docID 3"), RangeError);
  CHECK_THROWS_WITH_AS(parse("2\n3\n1\n1 4 1\n"),
                       doctest::Contains("wordID 4"), RangeError);
  CHECK_THROWS_WITH_AS(parse("2\n3\n1\n0 1 1\n"),
                       doctest::Contains("docID 0"), RangeError);
  // Zero counts are meaningless in a bag of words.
  CHECK_THROWS_AS(parse("2\n3\n1\n1 1 0\n"), ValueError);
  // Fewer entry lines than the header declares.
  CHECK_THROWS_WITH_AS(parse("2\n3\n2\n1 1 1\n"),
                       doctest::Contains("declares 2 entries"), ParseError);
  // More non-blank lines than declared.
  CHECK_THROWS_AS(parse("2\n3\n1\n1 1 1\n2 1 1\n"), ParseError);
  // Vocabulary length must match the header.
  std::istringstream docword("1\n3\n1\n1 1 1\n");
  std::istringstream vocab("only\ntwo\n");
  CHECK_THROWS_AS(parse_uci_bow(docword, &vocab), ParseError);
}

TEST_CASE("write -> parse is the identity on the parsed form") {
  const Corpus original = parse(
      "4\n5\n6\n"
      "1 1 2\n1 5 1\n2 3 9\n3 2 1\n3 4 4\n4 5 2\n");
  std::ostringstream out;
  write_uci_bow(original, out);
  Corpus reparsed = parse(out.str());
  reparsed.vocab = original.vocab;
  CHECK(reparsed == original);
}

TEST_CASE("split_corpus holds out ceil(M * fraction) docs, order preserved") {
  Corpus corpus;
  corpus.vocab_size = 2;
  for (uint32_t m = 0; m < 10; ++m) {
    corpus.docs.push_back({{0, m + 1}});  // count encodes the doc id
  }
  const SplitResult split = split_corpus(corpus, 0.25, 11);

  CHECK(split.test.num_docs() == 3);  // ceil(10 * 0.25)
  CHECK(split.train.num_docs() == 7);
  CHECK(split.train.vocab_size == 2);
  CHECK(split.test.vocab_size == 2);

  // Each doc lands in exactly one half; relative order survives.
  std::vector<uint32_t> seen;
  for (const auto& d : split.train.docs) seen.push_back(d[0].count);
  for (const auto& d : split.test.docs) seen.push_back(d[0].count);
  std::set<uint32_t> unique(seen.begin(), seen.end());
  CHECK(unique.size() == 10);
  for (size_t i = 1; i < split.train.docs.size(); ++i) {
    CHECK(split.train.docs[i - 1][0].count < split.train.docs[i][0].count);
  }
  for (size_t i = 1; i < split.test.docs.size(); ++i) {
    CHECK(split.test.docs[i - 1][0].count < split.test.docs[i][0].count);
  }

  // Same seed, same split; different seed, (almost surely) different split.
  CHECK(split_corpus(corpus, 0.25, 11).test == split.test);
  bool any_differs = false;
  for (uint64_t seed = 100; seed < 110 && !any_differs; ++seed) {
    any_differs = !(split_corpus(corpus, 0.25, seed).test == split.test);
  }
  CHECK(any_differs);

  CHECK(split_corpus(corpus, 0.0, 1).test.num_docs() == 0);
  CHECK_THROWS_AS(split_corpus(corpus, 1.0, 1), ValueError);
  CHECK_THROWS_AS(split_corpus(Corpus{}, 0.5, 1), ValueError);
}

TEST_CASE("unweighted partition deals documents round-robin") {
  Corpus corpus;
  corpus.vocab_size = 9;
  for (uint32_t m = 0; m < 11; ++m) corpus.docs.push_back({{m % 9, 1}});

  const auto shards = partition_documents(corpus, 4);
  REQUIRE(shards.size() == 4);
  for (uint32_t w = 0; w < 4; ++w) {
    CHECK(shards[w].worker_id == w);
    CHECK(shards[w].vocab_size == 9);
    for (size_t i = 0; i < shards[w].doc_ids.size(); ++i) {
      CHECK(shards[w].doc_ids[i] % 4 == w);  // doc m -> worker m mod C
      CHECK(shards[w].docs[i] == corpus.docs[shards[w].doc_ids[i]]);
    }
  }
  CHECK(shards[0].num_docs() == 3);
  CHECK(shards[3].num_docs() == 2);
}

TEST_CASE("weighted partition tracks quotas and covers every document") {
  Corpus corpus;
  corpus.vocab_size = 1;
  for (uint32_t m = 0; m < 100; ++m) corpus.docs.push_back({{0, 1}});

  const auto shards = partition_documents(corpus, 3, {1.0, 2.0, 1.0});
  REQUIRE(shards.size() == 3);
  CHECK(shards[0].num_docs() == 25);
  CHECK(shards[1].num_docs() == 50);
  CHECK(shards[2].num_docs() == 25);

  std::set<uint32_t> covered;
  for (const auto& s : shards) {
    covered.insert(s.doc_ids.begin(), s.doc_ids.end());
  }
  CHECK(covered.size() == 100);

  // Equal weights reduce to shard sizes within one document of each other.
  const auto even = partition_documents(corpus, 3, {5.0, 5.0, 5.0});
  for (const auto& s : even) {
    CHECK(s.num_docs() >= 33);
    CHECK(s.num_docs() <= 34);
  }

  CHECK_THROWS_AS(partition_documents(corpus, 2, {1.0}), ValueError);
  CHECK_THROWS_AS(partition_documents(corpus, 2, {1.0, 0.0}), ValueError);
  CHECK_THROWS_AS(partition_documents(corpus, 0), ValueError);
}
