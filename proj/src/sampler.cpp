#include "lda/sampler.hpp"

#include <chrono>
#include <numeric>

#include "lda/kernels.hpp"

namespace lda {

TopicDistribution conditional_distribution(const CountTables& counts,
                                           uint32_t local_doc, uint32_t term,
                                           const HyperParams& params) {
  params.validate();
  if (params.num_topics != counts.num_topics()) {
    throw ValueError("params declare " + std::to_string(params.num_topics) +
                     " topics, tables hold " +
                     std::to_string(counts.num_topics()));
  }
  if (term >= counts.vocab_size()) {
    throw ValueError("term " + std::to_string(term) + " outside vocabulary of " +
                     std::to_string(counts.vocab_size()));
  }
  const auto doc_row = counts.doc_topics(local_doc);
  for (uint32_t k = 0; k < counts.num_topics(); ++k) {
    if (doc_row[k] < 0) {
      throw StateError("negative document-topic count at document " +
                       std::to_string(local_doc) + ", topic " +
                       std::to_string(k));
    }
  }

  TopicDistribution dist;
  dist.weights.resize(counts.num_topics());
  const double v_eta = static_cast<double>(counts.vocab_size()) * params.eta;
  dist.total = kernels::active_ops().topic_weights(
      counts.global().term_topics(term).data(),
      counts.global().topic_totals().data(), doc_row.data(),
      counts.num_topics(), params.eta, v_eta, params.alpha,
      dist.weights.data());
  return dist;
}

uint32_t sample_topic(const TopicDistribution& dist, Rng& rng) {
  return sample_topic_at(dist, rng.next_double());
}

uint32_t sample_topic_at(const TopicDistribution& dist, double u) {
  if (dist.weights.empty()) throw ValueError("empty topic distribution");
  if (!(u >= 0.0 && u < 1.0)) throw ValueError("u must lie in [0, 1)");
  if (!(dist.total > 0.0)) {
    throw ValueError("topic distribution total must be positive");
  }
  return scan_weights(dist.weights.data(),
                  static_cast<uint32_t>(dist.weights.size()), u * dist.total);
}

SweepStats gibbs_sweep(const Shard& shard, Assignments& assignments,
                       CountTables& counts, DeltaTable& delta,
                       const HyperParams& params, Rng& rng,
                       const SweepOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  params.validate();
  const uint32_t num_topics = counts.num_topics();
  if (params.num_topics != num_topics) {
    throw ValueError("params declare " + std::to_string(params.num_topics) +
                     " topics, tables hold " + std::to_string(num_topics));
  }
  if (shard.vocab_size != counts.vocab_size()) {
    throw ValueError("shard and tables disagree on vocabulary size");
  }
  if (assignments.labels.size() != shard.docs.size() ||
      counts.num_local_docs() != shard.docs.size()) {
    throw ValueError("assignments/tables do not match the shard");
  }

  const auto& ops = kernels::active_ops();
  const double eta = params.eta;
  const double v_eta = static_cast<double>(counts.vocab_size()) * eta;
  const double alpha = params.alpha;
  int64_t* topic_totals = counts.global().topic_totals().data();
  std::vector<double> weights(num_topics);
  SweepStats stats;

  std::vector<uint32_t> order(shard.num_docs());
  std::iota(order.begin(), order.end(), 0u);
  if (options.shuffle_docs && shard.num_docs() > 1) {
    for (uint32_t i = shard.num_docs() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.next_below(i + 1)]);
    }
  }

  for (uint32_t m : order) {
    auto& labels = assignments.labels[m];
    int64_t doc_tokens = 0;
    for (const auto& tc : shard.docs[m]) doc_tokens += tc.count;
    if (static_cast<size_t>(doc_tokens) != labels.size()) {
      throw ValueError("label count mismatch at document " + std::to_string(m));
    }

    int32_t* doc_row = counts.doc_topics(m).data();
    size_t pos = 0;
    for (const auto& tc : shard.docs[m]) {
      int64_t* term_row = counts.global().term_topics(tc.term).data();
      for (uint32_t j = 0; j < tc.count; ++j, ++pos) {
        const uint32_t old_topic = labels[pos];
        if (old_topic >= num_topics) {
          throw StateError("assignment label out of range at document " +
                           std::to_string(m));
        }

        // Remove this token so the weights see the counts without it.
        --term_row[old_topic];
        --topic_totals[old_topic];
        if (term_row[old_topic] < 0 || topic_totals[old_topic] < 0) {
          counts.note_negative_count();
        }
        if (--doc_row[old_topic] < 0) {
          throw StateError("negative document-topic count at document " +
                           std::to_string(m) + ", topic " +
                           std::to_string(old_topic));
        }

        const double total =
            ops.topic_weights(term_row, topic_totals, doc_row, num_topics, eta,
                              v_eta, alpha, weights.data());
        const uint32_t new_topic =
            scan_weights(weights.data(), num_topics, rng.next_double() * total);

        ++term_row[new_topic];
        ++topic_totals[new_topic];
        ++doc_row[new_topic];
        if (new_topic != old_topic) {
          labels[pos] = new_topic;
          delta.add(old_topic, tc.term, -1);
          delta.add(new_topic, tc.term, 1);
          ++stats.topic_changes;
        }
        ++stats.tokens_sampled;
      }
    }
  }

  stats.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return stats;
}

}  // namespace lda
