#pragma once
// Mitigation switches shared by the CPU instruction model and the scenario
// driver.

#include <cstdint>
#include <vector>

namespace gatesim {

enum class VmmPolicy { PassThrough, Spoof, Deny };

// Two ways an OS can deploy a second, kernel-private GDT:
//  ReadOnlyUserGdt  - the user-visible pattern table is mapped read-only;
//                     gate installation faults.
//  SwappedGdtrOnly  - the pattern table stays writable as a decoy, but ring
//                     transitions resolve descriptors from the off-pattern
//                     kernel table, so the planted gate is never honored.
enum class DualGdtMode { ReadOnlyUserGdt, SwappedGdtrOnly };

struct MitigationConfig {
  bool umip = false;
  bool descriptor_table_exiting = false;
  VmmPolicy vmm_policy = VmmPolicy::PassThrough;
  bool kaiser = false;
  bool dual_gdt = false;
  DualGdtMode dual_mode = DualGdtMode::ReadOnlyUserGdt;
};

struct DualGdtState {
  DualGdtMode mode = DualGdtMode::ReadOnlyUserGdt;
  std::vector<uint64_t> user_base;    // per-core pattern (decoy) table
  std::vector<uint64_t> kernel_base;  // per-core authoritative table
};

inline const char* vmm_policy_name(VmmPolicy p) {
  switch (p) {
    case VmmPolicy::PassThrough: return "passthrough";
    case VmmPolicy::Spoof: return "spoof";
    case VmmPolicy::Deny: return "deny";
  }
  return "?";
}

}  // namespace gatesim
