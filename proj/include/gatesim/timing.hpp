#pragma once
// Abort-timing side channel: a transaction touching a kernel address aborts
// either fast (translation exists) or slow (it does not), and the cycle
// count of the abort path leaks that one bit.  Mapped and unmapped probes
// draw from disjoint bands; timer backends add overhead, jitter or
// quantization; environmental noise adds Gaussian spread and occasional
// contention outliers.  The min-of-n statistic suppresses positive noise.

#include <cstdint>
#include <string>
#include <vector>

#include "gatesim/layout.hpp"
#include "gatesim/probe_kernel.hpp"

namespace gatesim {

enum class TimerKind { RdtscpTsx, CpuidRdtscTsx, CounterThread };

struct TimerModel {
  TimerKind kind = TimerKind::RdtscpTsx;
  double overhead = 0.0;
  uint32_t jitter_count = 1;  // uniform over [0, jitter_count) extra cycles
  double tick = 0.0;          // granularity; 0 = cycle-accurate

  static TimerModel make(TimerKind k) {
    switch (k) {
      case TimerKind::CpuidRdtscTsx:
        // cpuid serialization costs a fixed overhead plus pipeline jitter.
        return {k, 40.0, 13, 0.0};
      case TimerKind::CounterThread:
        // A spinning counter thread only resolves every other cycle.
        return {k, 0.0, 1, 2.0};
      case TimerKind::RdtscpTsx:
      default:
        return {k, 0.0, 1, 0.0};
    }
  }
};

const char* timer_kind_name(TimerKind k);
bool parse_timer_kind(const std::string& s, TimerKind* out);

struct NoiseModel {
  double sigma = 0.0;
  double contention_rate = 0.0;
  double outlier_shift = 0.0;
};

// Abort-cycle bands (inclusive) observed on the modeled part.
struct BandModel {
  uint32_t mapped_lo = 190;
  uint32_t mapped_hi = 197;
  uint32_t unmapped_lo = 220;
  uint32_t unmapped_hi = 234;
};

inline constexpr double kDefaultThreshold = 208.5;

struct TimingConfig {
  uint64_t seed = 1;
  TimerModel timer;
  NoiseModel noise;
  BandModel bands;
};

SampleParams make_sample_params(const TimingConfig& cfg);
Band band_for(const BandModel& bands, bool mapped);
Band band_of_address(const TimingConfig& cfg, const AddressSpaceLayout& lay,
                     uint64_t addr, View v);

// Individual probe samples for one address (trace output).
std::vector<double> probe_trace(const TimingConfig& cfg,
                                const AddressSpaceLayout& lay, uint64_t addr,
                                View v, uint32_t n_samples);

// Batched min-of-n statistic via the dispatched kernel.
std::vector<double> measure_min(const TimingConfig& cfg,
                                const AddressSpaceLayout& lay,
                                const std::vector<uint64_t>& addrs, View v,
                                uint32_t n_samples);

enum class ProbeClass { Mapped, Unmapped };
inline ProbeClass classify(double stat, double threshold) {
  return stat < threshold ? ProbeClass::Mapped : ProbeClass::Unmapped;
}

// Derive a decision threshold from two anchor addresses of known state:
// the slowest mapped sample vs the fastest unmapped sample, split down the
// middle.  Fails when noise collapses the separation.
struct Calibration {
  bool ok = false;
  double mapped_high = 0.0;
  double unmapped_low = 0.0;
  double threshold = 0.0;
  std::string message;
};
Calibration calibrate(const TimingConfig& cfg, const AddressSpaceLayout& lay,
                      uint64_t mapped_addr, uint64_t unmapped_addr, View v,
                      uint32_t n_samples);

}  // namespace gatesim
