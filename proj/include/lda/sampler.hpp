#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "lda/delta.hpp"
#include "lda/model.hpp"
#include "lda/rng.hpp"

namespace lda {

// Unnormalized weights of the collapsed full conditional over topics for one
// token, plus their sum. weights[k] =
//   (n[k][v] + eta) / (n[k] + V*eta) * (n[m][k] + alpha),
// computed over the tables as passed in (callers that need the "current token
// excluded" counts decrement before calling, as gibbs_sweep does internally).
struct TopicDistribution {
  std::vector<double> weights;
  double total = 0.0;
};

// Throws ValueError for out-of-range m/v and StateError if document m holds a
// negative document-topic count. Negative global counts are clamped to zero,
// not errors (see the kernel contract).
TopicDistribution conditional_distribution(const CountTables& counts,
                                           uint32_t local_doc, uint32_t term,
                                           const HyperParams& params);

// Smallest k whose weight prefix sum exceeds `target`, scanning left to
// right; the last topic absorbs any floating-point shortfall so a valid index
// always comes back. Shared by the trainer and the fold-in sampler so both
// invert the CDF identically.
inline uint32_t scan_weights(const double* weights, uint32_t num_topics,
                             double target) {
  double acc = 0.0;
  for (uint32_t k = 0; k + 1 < num_topics; ++k) {
    acc += weights[k];
    if (acc > target) return k;
  }
  return num_topics - 1;
}

// Draws a topic by inverting the CDF with one uniform variate: the smallest k
// with weights[0]+...+weights[k] > u * total. Consumes exactly one
// next_double() from the generator.
uint32_t sample_topic(const TopicDistribution& dist, Rng& rng);
// Same inversion with the variate supplied (u in [0, 1)).
uint32_t sample_topic_at(const TopicDistribution& dist, double u);

struct SweepOptions {
  // Visit documents in a per-sweep shuffled order instead of shard order
  // (random-scan variant). Token order within a document never changes.
  bool shuffle_docs = false;
};

struct SweepStats {
  int64_t tokens_sampled = 0;
  int64_t topic_changes = 0;  // tokens whose label changed this sweep
  double elapsed_seconds = 0.0;
};

// One full collapsed Gibbs sweep over the shard: for every token, remove it
// from the counts, draw a fresh topic from the conditional above, and add it
// back under the new label. Count changes land in `counts` and accumulate
// into `delta`. Deterministic in the RNG state and inputs.
SweepStats gibbs_sweep(const Shard& shard, Assignments& assignments,
                       CountTables& counts, DeltaTable& delta,
                       const HyperParams& params, Rng& rng,
                       const SweepOptions& options = {});

}  // namespace lda
