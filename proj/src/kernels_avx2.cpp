// AVX2 kernel variant. Built only on x86-64 (see src/CMakeLists.txt); only
// this TU is compiled with -mavx2, and callers reach it through the runtime
// dispatch in kernels.cpp.
//
// Bit-exactness with the scalar reference is load-bearing, so:
//  * only the elementwise fills are vectorized; the returned sums are the
//    same sequential left-to-right loops as the reference,
//  * int64 counts convert to double with the 2^52 bias trick, which is exact
//    for clamped counts < 2^52 (a documented kernel precondition),
//  * no FMA intrinsics — the scalar expressions have no mul+add chain, and
//    introducing fused ops here would change roundings.

#include <immintrin.h>

#include <cstdint>

#include "lda/kernels.hpp"

namespace lda::kernels {

namespace detail {
const Ops& avx2_ops_impl();
}  // namespace detail

namespace {

inline double clamp_count(int64_t n) {
  return static_cast<double>(n < 0 ? 0 : n);
}

// max(x, 0) per int64 lane: keep x where x > -1, else 0.
inline __m256i clamp_nonneg_i64(__m256i x) {
  return _mm256_and_si256(x, _mm256_cmpgt_epi64(x, _mm256_set1_epi64x(-1)));
}

// Exact int64 -> double for lanes in [0, 2^52): OR in the exponent of 2^52,
// reinterpret, subtract 2^52.
inline __m256d cvt_small_i64_pd(__m256i x) {
  const __m256d bias = _mm256_set1_pd(0x1p52);
  const __m256d biased =
      _mm256_castsi256_pd(_mm256_or_si256(x, _mm256_castpd_si256(bias)));
  return _mm256_sub_pd(biased, bias);
}

inline __m256d load_counts(const int64_t* p) {
  return cvt_small_i64_pd(
      clamp_nonneg_i64(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(p))));
}

inline double sum_ltr(const double* out, uint32_t n) {
  double sum = 0.0;
  for (uint32_t k = 0; k < n; ++k) sum += out[k];
  return sum;
}

double topic_weights_avx2(const int64_t* topic_term, const int64_t* topic,
                          const int32_t* doc_topic, uint32_t num_topics,
                          double eta, double v_eta, double alpha, double* out) {
  const __m256d eta4 = _mm256_set1_pd(eta);
  const __m256d v_eta4 = _mm256_set1_pd(v_eta);
  const __m256d alpha4 = _mm256_set1_pd(alpha);
  uint32_t k = 0;
  for (; k + 4 <= num_topics; k += 4) {
    const __m256d num = _mm256_add_pd(load_counts(topic_term + k), eta4);
    const __m256d den = _mm256_add_pd(load_counts(topic + k), v_eta4);
    const __m256d doc = _mm256_add_pd(
        _mm256_cvtepi32_pd(
            _mm_loadu_si128(reinterpret_cast<const __m128i*>(doc_topic + k))),
        alpha4);
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_div_pd(num, den), doc));
  }
  for (; k < num_topics; ++k) {
    const double num = clamp_count(topic_term[k]) + eta;
    const double den = clamp_count(topic[k]) + v_eta;
    out[k] = num / den * (static_cast<double>(doc_topic[k]) + alpha);
  }
  return sum_ltr(out, num_topics);
}

double beta_row_avx2(const int64_t* topic_term, const double* denom,
                     uint32_t num_topics, double eta, double* out) {
  const __m256d eta4 = _mm256_set1_pd(eta);
  uint32_t k = 0;
  for (; k + 4 <= num_topics; k += 4) {
    const __m256d num = _mm256_add_pd(load_counts(topic_term + k), eta4);
    _mm256_storeu_pd(out + k, _mm256_div_pd(num, _mm256_loadu_pd(denom + k)));
  }
  for (; k < num_topics; ++k) {
    out[k] = (clamp_count(topic_term[k]) + eta) / denom[k];
  }
  return sum_ltr(out, num_topics);
}

double mix_weights_avx2(const double* beta, const int32_t* doc_topic,
                        uint32_t num_topics, double alpha, double* out) {
  const __m256d alpha4 = _mm256_set1_pd(alpha);
  uint32_t k = 0;
  for (; k + 4 <= num_topics; k += 4) {
    const __m256d doc = _mm256_add_pd(
        _mm256_cvtepi32_pd(
            _mm_loadu_si128(reinterpret_cast<const __m128i*>(doc_topic + k))),
        alpha4);
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_loadu_pd(beta + k), doc));
  }
  for (; k < num_topics; ++k) {
    out[k] = beta[k] * (static_cast<double>(doc_topic[k]) + alpha);
  }
  return sum_ltr(out, num_topics);
}

}  // namespace

const Ops& detail::avx2_ops_impl() {
  static const Ops ops{"avx2", topic_weights_avx2, beta_row_avx2,
                       mix_weights_avx2};
  return ops;
}

}  // namespace lda::kernels
