#include "lda/eval.hpp"

#include <cmath>

#include "lda/kernels.hpp"
#include "lda/rng.hpp"
#include "lda/sampler.hpp"

namespace lda {

void FoldInParams::validate() const {
  if (samples < 1) throw ValueError("fold-in needs samples >= 1");
}

TopicModelEstimate estimate_beta(const GlobalCounts& counts, double eta) {
  if (!(std::isfinite(eta) && eta > 0.0)) {
    throw ValueError("eta must be finite and > 0");
  }
  const uint32_t num_topics = counts.num_topics();
  const uint32_t vocab_size = counts.vocab_size();
  TopicModelEstimate est;
  est.num_topics = num_topics;
  est.vocab_size = vocab_size;
  est.beta.resize(static_cast<size_t>(num_topics) * vocab_size);

  // Denominators from the clamped rows, so each row normalizes to 1 even if
  // a mid-run snapshot holds transiently negative cells. With sane counts
  // this is exactly n[k] + V*eta.
  std::vector<int64_t> row_sum(num_topics, 0);
  for (uint32_t v = 0; v < vocab_size; ++v) {
    const auto term_row = counts.term_topics(v);
    for (uint32_t k = 0; k < num_topics; ++k) {
      row_sum[k] += term_row[k] < 0 ? 0 : term_row[k];
    }
  }
  const double v_eta = static_cast<double>(vocab_size) * eta;
  std::vector<double> denom(num_topics);
  for (uint32_t k = 0; k < num_topics; ++k) {
    denom[k] = static_cast<double>(row_sum[k]) + v_eta;
  }

  const auto& ops = kernels::active_ops();
  for (uint32_t v = 0; v < vocab_size; ++v) {
    ops.beta_row(counts.term_topics(v).data(), denom.data(), num_topics, eta,
                 est.beta.data() + static_cast<size_t>(v) * num_topics);
  }
  return est;
}

FoldInResult fold_in(const Document& doc, const TopicModelEstimate& beta,
                     const HyperParams& params, const FoldInParams& fold,
                     uint64_t seed) {
  params.validate();
  fold.validate();
  if (params.num_topics != beta.num_topics) {
    throw ValueError("params declare " + std::to_string(params.num_topics) +
                     " topics, estimate holds " +
                     std::to_string(beta.num_topics));
  }
  const uint32_t num_topics = params.num_topics;

  FoldInResult result;
  result.theta.assign(num_topics, 0.0);
  for (const auto& tc : doc) {
    if (tc.term >= beta.vocab_size) {
      throw RangeError("term " + std::to_string(tc.term) +
                       " outside vocabulary of " +
                       std::to_string(beta.vocab_size));
    }
    result.num_tokens += tc.count;
  }
  if (result.num_tokens == 0) {
    // Nothing to condition on: the prior mean, log-likelihood 0.
    for (auto& t : result.theta) t = 1.0 / num_topics;
    return result;
  }
  const auto num_tokens = static_cast<size_t>(result.num_tokens);

  Rng rng(seed);
  std::vector<int32_t> doc_topic(num_topics, 0);
  std::vector<uint32_t> labels(num_tokens);
  size_t pos = 0;
  for (const auto& tc : doc) {
    for (uint32_t j = 0; j < tc.count; ++j) {
      const uint32_t k = rng.next_below(num_topics);
      labels[pos++] = k;
      ++doc_topic[k];
    }
  }

  const auto& ops = kernels::active_ops();
  const double alpha = params.alpha;
  const double theta_denom =
      static_cast<double>(result.num_tokens) + num_topics * alpha;
  std::vector<double> weights(num_topics);
  std::vector<double> theta_acc(num_topics, 0.0);
  const uint32_t total_sweeps = fold.burn_in + fold.samples;
  for (uint32_t sweep = 0; sweep < total_sweeps; ++sweep) {
    pos = 0;
    for (const auto& tc : doc) {
      const double* beta_row = beta.term_row(tc.term);
      for (uint32_t j = 0; j < tc.count; ++j, ++pos) {
        const uint32_t old_topic = labels[pos];
        --doc_topic[old_topic];
        const double total = ops.mix_weights(beta_row, doc_topic.data(),
                                             num_topics, alpha, weights.data());
        const uint32_t new_topic = scan_weights(
            weights.data(), num_topics, rng.next_double() * total);
        labels[pos] = new_topic;
        ++doc_topic[new_topic];
      }
    }
    if (sweep >= fold.burn_in) {
      for (uint32_t k = 0; k < num_topics; ++k) {
        theta_acc[k] += (static_cast<double>(doc_topic[k]) + alpha) / theta_denom;
      }
    }
  }
  for (uint32_t k = 0; k < num_topics; ++k) {
    result.theta[k] = theta_acc[k] / fold.samples;
  }

  double log_likelihood = 0.0;
  for (const auto& tc : doc) {
    const double* beta_row = beta.term_row(tc.term);
    double p = 0.0;
    for (uint32_t k = 0; k < num_topics; ++k) {
      p += result.theta[k] * beta_row[k];
    }
    log_likelihood += static_cast<double>(tc.count) * std::log(p);
  }
  result.log_likelihood = log_likelihood;
  return result;
}

PerplexityResult perplexity(const Corpus& test, const TopicModelEstimate& beta,
                            const HyperParams& params,
                            const FoldInParams& fold, uint64_t seed) {
  if (test.vocab_size != beta.vocab_size) {
    throw ValueError("test corpus vocabulary (" +
                     std::to_string(test.vocab_size) +
                     ") does not match the estimate (" +
                     std::to_string(beta.vocab_size) + ")");
  }
  if (test.total_tokens() == 0) {
    throw ValueError("perplexity needs a test set with at least one token");
  }

  PerplexityResult out;
  out.doc_log_likelihood.reserve(test.num_docs());
  for (uint32_t d = 0; d < test.num_docs(); ++d) {
    const auto folded = fold_in(test.docs[d], beta, params, fold,
                                derive_stream(seed, streams::kFoldIn, d));
    out.doc_log_likelihood.push_back(folded.log_likelihood);
    out.total_log_likelihood += folded.log_likelihood;
    out.total_tokens += folded.num_tokens;
  }
  out.perplexity = std::exp(-out.total_log_likelihood /
                            static_cast<double>(out.total_tokens));
  return out;
}

}  // namespace lda
