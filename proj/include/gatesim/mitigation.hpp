#pragma once
// Scenario assembly and end-to-end evaluation under mitigation combinations:
// UMIP, descriptor-table exiting with a VMM reply policy, kernel page-table
// isolation, and the dual-GDT scheme.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gatesim/cpu.hpp"
#include "gatesim/exploit.hpp"
#include "gatesim/layout.hpp"
#include "gatesim/mitigation_config.hpp"
#include "gatesim/search.hpp"

namespace gatesim {

// Base the hypervisor reports under the Spoof policy: plausible, canonical,
// and wrong.
inline constexpr uint64_t kSpoofTableBase = 0xFFFFF78000000000ull;

struct Scenario {
  MitigationConfig config;
  AddressSpaceLayout layout;
  std::vector<CpuCore> cpus;
  std::optional<DualGdtState> dual;
};

// Wire a generated layout and CPUs into a scenario: set CR4.UMIP, switch the
// page-table view semantics, and stand up the second GDT when requested.
// With everything off the inputs pass through unchanged.
Scenario apply(const MitigationConfig& cfg, AddressSpaceLayout layout,
               std::vector<CpuCore> cpus);

// Store instruction as the guest sees it: UMIP #GP passes through, a VM exit
// is absorbed by the VMM according to policy and a (possibly fake) value
// comes back.
Result<StoreValue> vmm_store(CpuCore& cpu, StoreInstr which,
                             const MitigationConfig& cfg);

struct EvalParams {
  int cores = 1;
  uint32_t samples = 16;
  double rate = 10.0;
  int workers = 1;
  bool fast = false;
  TimerModel timer = TimerModel::make(TimerKind::RdtscpTsx);
  NoiseModel noise;
  BandModel bands;
  double threshold = kDefaultThreshold;
  ShellcodeEffect effect = ShellcodeEffect::ElevateToken;
  bool restore = true;
  bool collect_candidates = false;
};

struct AttackOutcome {
  MitigationConfig config;
  uint64_t seed = 0;
  bool address_found = false;
  bool sgdt_truth = false;     // did ring-3 sgdt leak the real base?
  bool exploit_success = false;
  std::string failing_step;    // "none" on success
};

struct EvalResult {
  MitigationConfig config;
  uint64_t seed = 0;
  SearchReport search;
  std::string sgdt_observed;   // hex base, or the fault that replaced it
  std::optional<InstallRecord> install;
  ExploitOutcome exploit;
  bool patchguard_fired = false;
  std::string patchguard_note;
  double total_seconds = 0.0;
  AttackOutcome outcome;
  Scenario scenario;           // final state, for inspection
};

EvalResult evaluate(const MitigationConfig& cfg, uint64_t seed,
                    const EvalParams& ep);

// All 16 mitigation combinations x seeds; under descriptor-table exiting the
// VMM answers with the Spoof policy.
std::vector<AttackOutcome> outcome_matrix(const std::vector<uint64_t>& seeds,
                                          const EvalParams& ep);

}  // namespace gatesim
