#pragma once

#include <cstdint>
#include <vector>

#include "lda/corpus.hpp"
#include "lda/model.hpp"

namespace lda {

// A normalized topic-term distribution estimate: beta[k][v], each row
// summing to 1. Stored term-major like the counts.
struct TopicModelEstimate {
  uint32_t num_topics = 0;
  uint32_t vocab_size = 0;
  std::vector<double> beta;  // [v * K + k]

  double at(uint32_t k, uint32_t v) const {
    return beta.at(static_cast<size_t>(v) * num_topics + k);
  }
  const double* term_row(uint32_t v) const {
    return beta.data() + static_cast<size_t>(v) * num_topics;
  }
};

// Posterior-mean point estimate beta[k][v] = (n[k][v] + eta) / (n[k] + V*eta),
// with negative counts clamped to zero and each row renormalized, so the
// result is a proper distribution even from a mid-run snapshot.
TopicModelEstimate estimate_beta(const GlobalCounts& counts, double eta);

struct FoldInParams {
  uint32_t burn_in = 50;  // discarded sweeps
  uint32_t samples = 10;  // averaged sweeps after burn-in
  void validate() const;  // ValueError unless samples >= 1
};

struct FoldInResult {
  std::vector<double> theta;     // posterior-mean topic mixture, sums to 1
  double log_likelihood = 0.0;   // sum over tokens of log p(w | theta, beta)
  int64_t num_tokens = 0;
};

// Estimates an unseen document's topic mixture by Gibbs sampling token
// assignments with beta held fixed (weights beta[k][w] * (n[m][k] + alpha)),
// then averages (n[m][k] + alpha) / (N + K*alpha) over the retained sweeps.
// The log-likelihood plugs theta-hat back into sum_n log sum_k theta_k
// beta[k][w_n]. Deterministic in (seed); an empty document yields the prior
// mean and log-likelihood 0.
FoldInResult fold_in(const Document& doc, const TopicModelEstimate& beta,
                     const HyperParams& params, const FoldInParams& fold,
                     uint64_t seed);

struct PerplexityResult {
  double perplexity = 0.0;       // exp(-total_ll / total_tokens)
  double total_log_likelihood = 0.0;
  int64_t total_tokens = 0;
  std::vector<double> doc_log_likelihood;  // per test document
};

// Folds in every test document independently (document d uses a stream
// derived from (seed, d), so the result is invariant to evaluating documents
// separately or together) and aggregates corpus-level perplexity.
// A test set with zero tokens is a ValueError.
PerplexityResult perplexity(const Corpus& test, const TopicModelEstimate& beta,
                            const HyperParams& params,
                            const FoldInParams& fold, uint64_t seed);

}  // namespace lda
