#include "lda/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "lda/errors.hpp"

namespace lda::kernels {

#if defined(LDA_HAVE_AVX2_BUILD)
namespace detail {
const Ops& avx2_ops_impl();  // defined in kernels_avx2.cpp
}
#endif

bool avx2_available() {
#if defined(LDA_HAVE_AVX2_BUILD)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Ops& avx2_ops() {
#if defined(LDA_HAVE_AVX2_BUILD)
  if (avx2_available()) return detail::avx2_ops_impl();
#endif
  throw ValueError("avx2 kernels are not available on this machine");
}

std::vector<std::string> available_kernels() {
  std::vector<std::string> names;
  if (avx2_available()) names.push_back("avx2");
  names.push_back("scalar");
  return names;
}

namespace {

const Ops* lookup(const std::string& name) {
  if (name == "scalar") return &scalar_ops();
  if (name == "avx2") return &avx2_ops();
  throw ValueError("unknown kernel variant \"" + name +
                   "\" (use scalar or avx2)");
}

const Ops* default_ops() {
  if (const char* env = std::getenv("LDA_KERNEL")) return lookup(env);
  return avx2_available() ? &avx2_ops() : &scalar_ops();
}

std::atomic<const Ops*>& active_slot() {
  static std::atomic<const Ops*> slot{default_ops()};
  return slot;
}

}  // namespace

void select_kernel(const std::string& name) { active_slot() = lookup(name); }

const Ops& active_ops() { return *active_slot().load(std::memory_order_relaxed); }

}  // namespace lda::kernels
