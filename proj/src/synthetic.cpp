#include "lda/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lda/rng.hpp"
#include "lda/sampler.hpp"

namespace lda {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInBlockMass = 0.95;
constexpr double kDirichletConcentration = 0.1;

uint64_t parse_u64_field(const std::string& text, const char* what) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw ValueError("synthetic spec: bad " + std::string(what) + " \"" + text +
                     "\"");
  }
  errno = 0;
  char* endp = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &endp, 10);
  if (errno != 0 || *endp != '\0') {
    throw ValueError("synthetic spec: bad " + std::string(what) + " \"" + text +
                     "\"");
  }
  return v;
}

uint32_t parse_u32_field(const std::string& text, const char* what) {
  const uint64_t v = parse_u64_field(text, what);
  if (v > std::numeric_limits<uint32_t>::max()) {
    throw ValueError("synthetic spec: " + std::string(what) + " too large");
  }
  return static_cast<uint32_t>(v);
}

// Marsaglia & Tsang (2000) squeeze method; shapes below 1 go through the
// boost Gamma(shape+1) * U^(1/shape).
double sample_gamma(double shape, Rng& rng) {
  if (shape < 1.0) {
    const double u = 1.0 - rng.next_double();  // (0, 1]
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    const double u1 = 1.0 - rng.next_double();
    const double u2 = rng.next_double();
    const double x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

}  // namespace

SyntheticSpec SyntheticSpec::parse(const std::string& text) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = text.find(',', start);
    fields.push_back(text.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 5) {
    throw ValueError(
        "synthetic spec must be \"docs,vocab,topics,doclen,seed\", got \"" +
        text + "\"");
  }
  SyntheticSpec spec;
  spec.num_docs = parse_u32_field(fields[0], "document count");
  spec.vocab_size = parse_u32_field(fields[1], "vocabulary size");
  spec.num_topics = parse_u32_field(fields[2], "topic count");
  spec.doc_len = parse_u32_field(fields[3], "document length");
  spec.seed = parse_u64_field(fields[4], "seed");
  spec.validate();
  return spec;
}

std::string SyntheticSpec::to_string() const {
  return std::to_string(num_docs) + "," + std::to_string(vocab_size) + "," +
         std::to_string(num_topics) + "," + std::to_string(doc_len) + "," +
         std::to_string(seed);
}

void SyntheticSpec::validate() const {
  if (num_docs < 1) throw ValueError("synthetic spec: need at least 1 document");
  if (vocab_size < 1) throw ValueError("synthetic spec: need at least 1 term");
  if (num_topics < 1) throw ValueError("synthetic spec: need at least 1 topic");
  if (num_topics > vocab_size) {
    throw ValueError("synthetic spec: more topics than vocabulary terms");
  }
  if (doc_len < 1) {
    throw ValueError("synthetic spec: documents need at least 1 token");
  }
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const uint32_t num_topics = spec.num_topics;
  const uint32_t vocab_size = spec.vocab_size;

  // Topic k owns the contiguous vocabulary block [start_k, end_k).
  std::vector<uint32_t> block_start(num_topics + 1);
  for (uint32_t k = 0; k <= num_topics; ++k) {
    block_start[k] = static_cast<uint32_t>(
        static_cast<uint64_t>(k) * vocab_size / num_topics);
  }

  Rng rng(derive_stream(spec.seed, streams::kSynth));
  Corpus corpus;
  corpus.vocab_size = vocab_size;
  corpus.docs.resize(spec.num_docs);

  std::vector<double> topic_weight(num_topics);
  std::vector<uint32_t> term_count(vocab_size, 0);
  std::vector<uint32_t> touched;
  touched.reserve(spec.doc_len);

  for (uint32_t m = 0; m < spec.num_docs; ++m) {
    // theta ~ Dirichlet(0.1): unnormalized gamma draws feed the CDF scan
    // directly.
    double weight_sum = 0.0;
    for (uint32_t k = 0; k < num_topics; ++k) {
      topic_weight[k] = sample_gamma(kDirichletConcentration, rng);
      weight_sum += topic_weight[k];
    }
    if (!(weight_sum > 0.0)) {
      std::fill(topic_weight.begin(), topic_weight.end(), 1.0);
      weight_sum = static_cast<double>(num_topics);
    }

    for (uint32_t i = 0; i < spec.doc_len; ++i) {
      const uint32_t z = scan_weights(topic_weight.data(), num_topics,
                                      rng.next_double() * weight_sum);
      const uint32_t start = block_start[z];
      const uint32_t block = block_start[z + 1] - start;
      uint32_t term;
      if (block == vocab_size || rng.next_double() < kInBlockMass) {
        term = start + rng.next_below(block);
      } else {
        const uint32_t j = rng.next_below(vocab_size - block);
        term = j < start ? j : j - start + block_start[z + 1];
      }
      if (term_count[term] == 0) touched.push_back(term);
      ++term_count[term];
    }

    std::sort(touched.begin(), touched.end());
    Document& doc = corpus.docs[m];
    doc.reserve(touched.size());
    for (uint32_t term : touched) {
      doc.push_back({term, term_count[term]});
      term_count[term] = 0;
    }
    touched.clear();
  }
  return corpus;
}

}  // namespace lda
