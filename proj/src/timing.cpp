#include "gatesim/timing.hpp"

#include <algorithm>

#include "gatesim/rng.hpp"

namespace gatesim {

const char* timer_kind_name(TimerKind k) {
  switch (k) {
    case TimerKind::RdtscpTsx: return "rdtscp";
    case TimerKind::CpuidRdtscTsx: return "cpuid";
    case TimerKind::CounterThread: return "thread";
  }
  return "?";
}

bool parse_timer_kind(const std::string& s, TimerKind* out) {
  if (s == "rdtscp") {
    *out = TimerKind::RdtscpTsx;
  } else if (s == "cpuid") {
    *out = TimerKind::CpuidRdtscTsx;
  } else if (s == "thread") {
    *out = TimerKind::CounterThread;
  } else {
    return false;
  }
  return true;
}

SampleParams make_sample_params(const TimingConfig& cfg) {
  SampleParams sp;
  sp.probe_seed = substream(cfg.seed, kTagProbe);
  sp.timer_overhead = cfg.timer.overhead;
  sp.jitter_count = cfg.timer.jitter_count == 0 ? 1 : cfg.timer.jitter_count;
  sp.tick = cfg.timer.tick;
  sp.sigma = cfg.noise.sigma;
  sp.contention_rate = cfg.noise.contention_rate;
  sp.outlier_shift = cfg.noise.outlier_shift;
  return sp;
}

Band band_for(const BandModel& b, bool mapped) {
  if (mapped) return {b.mapped_lo, b.mapped_hi - b.mapped_lo + 1};
  return {b.unmapped_lo, b.unmapped_hi - b.unmapped_lo + 1};
}

Band band_of_address(const TimingConfig& cfg, const AddressSpaceLayout& lay,
                     uint64_t addr, View v) {
  return band_for(cfg.bands, lay.mapped(addr, v));
}

std::vector<double> probe_trace(const TimingConfig& cfg,
                                const AddressSpaceLayout& lay, uint64_t addr,
                                View v, uint32_t n_samples) {
  const SampleParams sp = make_sample_params(cfg);
  const Band band = band_of_address(cfg, lay, addr, v);
  std::vector<double> out(n_samples);
  for (uint32_t k = 0; k < n_samples; ++k) {
    out[k] = probe_sample_ref(sp, addr, band, k);
  }
  return out;
}

std::vector<double> measure_min(const TimingConfig& cfg,
                                const AddressSpaceLayout& lay,
                                const std::vector<uint64_t>& addrs, View v,
                                uint32_t n_samples) {
  const SampleParams sp = make_sample_params(cfg);
  std::vector<Band> bands(addrs.size());
  for (size_t i = 0; i < addrs.size(); ++i) {
    bands[i] = band_of_address(cfg, lay, addrs[i], v);
  }
  std::vector<double> out(addrs.size());
  min_stat(sp, addrs.data(), bands.data(), addrs.size(), n_samples, out.data());
  return out;
}

Calibration calibrate(const TimingConfig& cfg, const AddressSpaceLayout& lay,
                      uint64_t mapped_addr, uint64_t unmapped_addr, View v,
                      uint32_t n_samples) {
  Calibration cal;
  auto mapped = probe_trace(cfg, lay, mapped_addr, v, n_samples);
  auto unmapped = probe_trace(cfg, lay, unmapped_addr, v, n_samples);
  // Worst case on each side: the anchors must still be separated when the
  // mapped address shows its slowest probe and the unmapped its fastest.
  cal.mapped_high = *std::max_element(mapped.begin(), mapped.end());
  cal.unmapped_low = *std::min_element(unmapped.begin(), unmapped.end());
  if (cal.mapped_high >= cal.unmapped_low) {
    cal.ok = false;
    cal.message = "calibration failed: mapped and unmapped samples overlap";
    return cal;
  }
  cal.threshold = (cal.mapped_high + cal.unmapped_low) / 2.0;
  cal.ok = true;
  return cal;
}

}  // namespace gatesim
