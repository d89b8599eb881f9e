#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Inner-loop kernels, K elements wide.
//
// Every variant must produce bit-identical output to the scalar reference:
// only elementwise arithmetic is vectorized, each output element is computed
// by the same sequence of IEEE double operations in the same association, and
// the returned sum is always accumulated sequentially left to right. That
// makes "which kernel ran" unobservable to the sampler, which is what lets a
// run be replayed exactly on any machine.
//
// Count inputs may be transiently negative (asynchronous merges); kernels
// clamp them to zero. Magnitudes must stay below 2^52 so the vectorized
// int64 -> double conversion is exact — token counts are nowhere near that.

namespace lda::kernels {

struct Ops {
  const char* name;

  // out[k] = (clamp(topic_term[k]) + eta) / (clamp(topic[k]) + v_eta)
  //          * (doc_topic[k] + alpha);  returns sum(out).
  double (*topic_weights)(const int64_t* topic_term, const int64_t* topic,
                          const int32_t* doc_topic, uint32_t num_topics,
                          double eta, double v_eta, double alpha, double* out);

  // out[k] = (clamp(topic_term[k]) + eta) / denom[k];  returns sum(out).
  double (*beta_row)(const int64_t* topic_term, const double* denom,
                     uint32_t num_topics, double eta, double* out);

  // out[k] = beta[k] * (doc_topic[k] + alpha);  returns sum(out).
  double (*mix_weights)(const double* beta, const int32_t* doc_topic,
                        uint32_t num_topics, double alpha, double* out);
};

// The portable reference implementation. Always available.
const Ops& scalar_ops();

// True when the binary carries the AVX2 variant and this CPU supports it.
bool avx2_available();
// The AVX2 variant; throws ValueError when unavailable.
const Ops& avx2_ops();

// Variant names usable with select(), fastest-first.
std::vector<std::string> available_kernels();

// Forces a variant ("scalar", "avx2"); throws ValueError for unknown or
// unavailable names. Call before sampling starts — selection is not
// synchronized.
void select_kernel(const std::string& name);

// The active variant. On first use picks the fastest available one, unless
// the LDA_KERNEL environment variable names a specific variant.
const Ops& active_ops();

}  // namespace lda::kernels
