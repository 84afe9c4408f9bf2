#include <algorithm>
#include <cmath>
#include <limits>

#include "gatesim/mathkern.hpp"
#include "gatesim/probe_kernel.hpp"
#include "gatesim/rng.hpp"

namespace gatesim {

using namespace kerneldetail;

double probe_sample_ref(const SampleParams& sp, uint64_t addr, Band band,
                        uint32_t sample_index) {
  const uint64_t base = mix64(sp.probe_seed ^ mix64(addr));
  const uint64_t key =
      mix64(base + (static_cast<uint64_t>(sample_index) + 1) * kGolden);
  const uint64_t h1 = mix64(key ^ kDomBand);
  const uint64_t h2 = mix64(key ^ kDomJitter);
  const uint64_t h3 = mix64(key ^ kDomGauss);
  const uint64_t h4 = mix64(key ^ kDomOutlier);

  const uint64_t band_off =
      (static_cast<uint64_t>(static_cast<uint32_t>(h1)) * band.count) >> 32;
  double v = static_cast<double>(band.lo + band_off);
  v = v + sp.timer_overhead;

  const uint64_t jit =
      (static_cast<uint64_t>(static_cast<uint32_t>(h2)) * sp.jitter_count) >> 32;
  v = v + static_cast<double>(jit);

  if (sp.sigma > 0.0) {
    const double u = to_unit(h3);
    v = v + sp.sigma * inv_normal_cdf(u);
  }
  if (sp.contention_rate > 0.0) {
    const double u4 = to_unit(h4);
    if (u4 < sp.contention_rate) v = v + sp.outlier_shift;
  }
  if (sp.tick > 0.0) {
    v = std::floor(v / sp.tick) * sp.tick;
  }
  return v;
}

void min_stat_scalar(const SampleParams& sp, const uint64_t* addrs,
                     const Band* bands, size_t n, uint32_t n_samples,
                     double* out) {
  for (size_t i = 0; i < n; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (uint32_t k = 0; k < n_samples; ++k) {
      m = std::min(m, probe_sample_ref(sp, addrs[i], bands[i], k));
    }
    out[i] = m;
  }
}

}  // namespace gatesim
