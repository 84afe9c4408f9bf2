#pragma once
// End-to-end escalation chain: plant a ring-3-callable call gate in a free
// GDT slot with a write-what-where primitive, far-call through it, run the
// payload at ring 0, restore the table and return to ring 3 - all under the
// eyes of a periodic kernel integrity checker.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gatesim/cpu.hpp"
#include "gatesim/layout.hpp"

namespace gatesim {

// Write-what-where: arbitrary kernel writes, no read capability.  Writes go
// through the regular permission checks at the stated privilege, so a ring-3
// attempt or a read-only page faults exactly like the real thing.
struct WwwPrimitive {
  AddressSpaceLayout* lay = nullptr;
  int cpl = 0;
  View view = View::Kernel;

  Result<void> write(uint64_t addr, const uint8_t* data, size_t n) {
    return lay->write_bytes(addr, data, n, cpl, view);
  }
};

// The planted gate: ring-0 code selector, DPL 3 so ring 3 may call it,
// 64-bit call gate type, entry point chosen by the attacker.
CallGateDescriptor attack_gate(uint64_t entry_point);

struct InstallRecord {
  uint64_t address = 0;  // first byte of the claimed slot pair
  int slot = -1;
  std::array<uint8_t, 16> old_bytes{};
  std::array<uint8_t, 16> new_bytes{};
  size_t size = 16;
};

// Plant `gate` at `slot` of the table at gdt_base, remembering the previous
// bytes for restoration.
Result<InstallRecord> install_gate(WwwPrimitive& www, uint64_t gdt_base,
                                   int slot, const CallGateDescriptor& gate);
Result<void> restore_slots(WwwPrimitive& www, const InstallRecord& rec);

// Materialize a descriptor table from layout memory (descriptor fetch).
DescriptorTable fetch_table(const AddressSpaceLayout& lay, uint64_t base,
                            uint32_t limit, TableKind kind);

// Ring-3 CPU wired to a core's tables.
CpuCore make_cpu(const AddressSpaceLayout& lay, int core);

// What the ring-0 payload does once it runs.
enum class ShellcodeEffect { MarkerOnly, ElevateToken, ClearPtSupervisor };
const char* shellcode_effect_name(ShellcodeEffect e);

// Kernel-data offsets the payloads touch.
inline constexpr uint64_t kTokenPrivOffset = 0x40;
inline constexpr uint64_t kUserTokenPrivs = 0x0000000000000011ull;
inline constexpr uint64_t kFullTokenPrivs = 0xFFFFFFFFFFFFFFFFull;
inline constexpr uint64_t kMarkerOffset = 0x10;
inline constexpr uint32_t kMarkerValue = 0xC0DED00Du;
inline constexpr uint64_t kPtePatchOffset = 0x200;
inline constexpr uint64_t kShellcodeOffset = 0x100;

struct ExploitParams {
  Selector gate_selector;
  ShellcodeEffect effect = ShellcodeEffect::ElevateToken;
  bool restore = true;
  const InstallRecord* install = nullptr;
  const DualGdtState* dual = nullptr;
};

struct ExploitOutcome {
  bool success = false;
  std::vector<int> cpl_trace;
  std::optional<Fault> fault;
  std::string failing_op;
  std::vector<ShellcodeEffect> effects_applied;
  bool gdt_restored = false;
};

// Drive the chain on a ring-3 CPU.  Descriptor resolution honors the dual
// table state when present: SwappedGdtrOnly resolves the far call from the
// kernel table even though user-mode SGDT reported the decoy.
ExploitOutcome run_exploit(CpuCore& cpu, AddressSpaceLayout& lay,
                           const ExploitParams& ep);

// Periodic integrity watcher over one table page (PatchGuard-style):
// snapshot at arm time, then compare at uniform random intervals in
// [180 s, 600 s]; any mismatch is a bugcheck.
inline constexpr double kPgMinInterval = 180.0;
inline constexpr double kPgMaxInterval = 600.0;

struct PatchGuard {
  uint64_t guarded_base = 0;
  std::vector<uint8_t> snapshot;
  double now = 0.0;
  double next_check = 0.0;
  uint64_t stream = 0;
  uint64_t draws = 0;
  bool fired = false;
};

PatchGuard arm_patchguard(const AddressSpaceLayout& lay, uint64_t gdt_base,
                          double now, uint64_t seed);
// Advance simulated time; returns a Bugcheck fault if a check fails.
Result<void> pg_advance(PatchGuard& pg, const AddressSpaceLayout& lay,
                        double dt);

}  // namespace gatesim
