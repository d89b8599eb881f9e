#include <cstdint>

#include "lda/kernels.hpp"

// Reference kernels. The expression shapes here are the contract: a SIMD
// variant must mirror them operation for operation (clamp, convert, add,
// divide, multiply — in that association) to stay bit-identical.

namespace lda::kernels {

namespace {

inline double clamp_count(int64_t n) {
  return static_cast<double>(n < 0 ? 0 : n);
}

double topic_weights_scalar(const int64_t* topic_term, const int64_t* topic,
                            const int32_t* doc_topic, uint32_t num_topics,
                            double eta, double v_eta, double alpha,
                            double* out) {
  for (uint32_t k = 0; k < num_topics; ++k) {
    const double num = clamp_count(topic_term[k]) + eta;
    const double den = clamp_count(topic[k]) + v_eta;
    out[k] = num / den * (static_cast<double>(doc_topic[k]) + alpha);
  }
  double sum = 0.0;
  for (uint32_t k = 0; k < num_topics; ++k) sum += out[k];
  return sum;
}

double beta_row_scalar(const int64_t* topic_term, const double* denom,
                       uint32_t num_topics, double eta, double* out) {
  for (uint32_t k = 0; k < num_topics; ++k) {
    out[k] = (clamp_count(topic_term[k]) + eta) / denom[k];
  }
  double sum = 0.0;
  for (uint32_t k = 0; k < num_topics; ++k) sum += out[k];
  return sum;
}

double mix_weights_scalar(const double* beta, const int32_t* doc_topic,
                          uint32_t num_topics, double alpha, double* out) {
  for (uint32_t k = 0; k < num_topics; ++k) {
    out[k] = beta[k] * (static_cast<double>(doc_topic[k]) + alpha);
  }
  double sum = 0.0;
  for (uint32_t k = 0; k < num_topics; ++k) sum += out[k];
  return sum;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", topic_weights_scalar, beta_row_scalar,
                       mix_weights_scalar};
  return ops;
}

}  // namespace lda::kernels
