#include "gatesim/probe_kernel.hpp"

#include <optional>

namespace gatesim {

namespace {
std::optional<KernelIsa> g_forced;
}

bool avx2_available() {
#ifdef GATESIM_HAVE_AVX2
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

KernelIsa active_kernel() {
  if (g_forced) return *g_forced;
  return avx2_available() ? KernelIsa::Avx2 : KernelIsa::Scalar;
}

void force_kernel(KernelIsa isa) { g_forced = isa; }
void reset_kernel_choice() { g_forced.reset(); }

const char* kernel_name(KernelIsa isa) {
  return isa == KernelIsa::Avx2 ? "avx2" : "scalar";
}

void min_stat(const SampleParams& sp, const uint64_t* addrs, const Band* bands,
              size_t n, uint32_t n_samples, double* out) {
#ifdef GATESIM_HAVE_AVX2
  if (active_kernel() == KernelIsa::Avx2 && avx2_available()) {
    min_stat_avx2(sp, addrs, bands, n, n_samples, out);
    return;
  }
#endif
  min_stat_scalar(sp, addrs, bands, n, n_samples, out);
}

}  // namespace gatesim
