#pragma once
// Sampling kernel for the abort-timing channel.
//
// One probe sample is a pure function of (probe_seed, address, sample index):
// hash the triple, draw the band value, apply timer overhead/jitter, Gaussian
// measurement noise and occasional contention outliers, then quantize to the
// timer granularity.  Because samples are counter-based there is no shared
// RNG state: any slice of the work can run anywhere and still produce the
// same numbers.
//
// Two implementations exist: a scalar reference and an AVX2 variant that
// processes four addresses per step.  They are required to agree bit-for-bit
// (see tests); the active one is picked at runtime.

#include <cstdint>
#include <cstddef>

namespace gatesim {

// Domain constants separating the four draws derived from one sample key.
namespace kerneldetail {
inline constexpr uint64_t kDomBand = 0x2545F4914F6CDD1Dull;
inline constexpr uint64_t kDomJitter = 0x9E6C63D0876A9F4Bull;
inline constexpr uint64_t kDomGauss = 0xD6E8FEB86659FD93ull;
inline constexpr uint64_t kDomOutlier = 0xA5A3B31C68E87FD9ull;
}  // namespace kerneldetail

struct SampleParams {
  uint64_t probe_seed = 0;
  double timer_overhead = 0.0;  // additive serialization cost
  uint32_t jitter_count = 1;    // uniform draw over [0, jitter_count) cycles
  double tick = 0.0;            // quantization step; <= 0 disables
  double sigma = 0.0;           // Gaussian noise stddev
  double contention_rate = 0.0; // probability of an SMT-contention outlier
  double outlier_shift = 0.0;   // cycles added on contention
};

// Per-address timing band: `lo` plus a uniform draw over `count` values.
struct Band {
  uint32_t lo = 0;
  uint32_t count = 1;
};

// Reference semantics for a single sample.
double probe_sample_ref(const SampleParams& sp, uint64_t addr, Band band,
                        uint32_t sample_index);

// out[i] = min over sample_index < n_samples of sample(addrs[i]).
void min_stat_scalar(const SampleParams& sp, const uint64_t* addrs,
                     const Band* bands, size_t n, uint32_t n_samples,
                     double* out);
#ifdef GATESIM_HAVE_AVX2
void min_stat_avx2(const SampleParams& sp, const uint64_t* addrs,
                   const Band* bands, size_t n, uint32_t n_samples,
                   double* out);
#endif

enum class KernelIsa { Scalar, Avx2 };

// Runtime selection: AVX2 when the CPU has it, unless overridden.
KernelIsa active_kernel();
void force_kernel(KernelIsa isa);
void reset_kernel_choice();
const char* kernel_name(KernelIsa isa);
bool avx2_available();

// Dispatched entry point.
void min_stat(const SampleParams& sp, const uint64_t* addrs, const Band* bands,
              size_t n, uint32_t n_samples, double* out);

}  // namespace gatesim
