#pragma once
// Pattern search over the kernel slide space.
//
// Candidates enumerate the 16-bit slide: 0xfffff80000000000 | (k << 20) |
// (low_const << 12) for k in [0, 65536).  A candidate is accepted when the
// timing channel classifies it as mapped, the page +0x2000 as mapped, and
// the guard page +0x1000 as unmapped - the table/hole/table signature.
//
// Simulated cost model: probing one candidate costs 1/rate seconds; the two
// confirmation probes of an initial hit piggyback on the same transaction
// window and are tracked but not charged.  With W workers, candidate k runs
// on worker k % W at tick k / W; all workers advance in lockstep and stop
// after the tick of the earliest confirmed hit, whose lowest candidate index
// wins.  That makes the discovered address independent of worker count and
// scheduling, while elapsed time divides by W.

#include <cstdint>
#include <vector>

#include "gatesim/layout.hpp"
#include "gatesim/timing.hpp"

namespace gatesim {

inline constexpr uint32_t kCandidateCount = 0x10000;

struct SearchConfig {
  uint64_t seed = 1;
  int core = 0;               // which core's pattern to hunt
  uint32_t samples = 16;      // probes per candidate
  double rate = 10.0;         // candidates per second
  int workers = 1;
  bool stop_on_first = true;
  bool fast = false;          // halve samples, double rate
  double threshold = kDefaultThreshold;
  TimerModel timer;
  NoiseModel noise;
  BandModel bands;
  bool collect_candidates = false;
};

struct CandidateRecord {
  uint64_t address = 0;
  double statistic = 0.0;
  bool mapped = false;
};

struct SearchReport {
  int core = 0;
  bool found = false;
  uint64_t idt = 0;
  uint64_t gdt = 0;
  uint32_t candidates_probed = 0;    // charged probes over all workers
  uint32_t confirmation_probes = 0;  // paired checks, not charged
  double simulated_seconds = 0.0;    // slowest worker's probe count / rate
  double rate = 0.0;
  uint32_t samples = 0;
  int workers = 1;
  std::vector<uint32_t> worker_probes;
  std::vector<CandidateRecord> candidates;  // filled when collect_candidates
};

SearchReport run_search(const AddressSpaceLayout& lay, const SearchConfig& cfg);

}  // namespace gatesim
