#pragma once
// Per-core privilege state machine: segment loads, gated control transfers
// and the descriptor-table instructions, with architectural checks and the
// visible/hidden split of segment registers.

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gatesim/descriptor_table.hpp"
#include "gatesim/fault.hpp"
#include "gatesim/mitigation_config.hpp"
#include "gatesim/selector.hpp"

namespace gatesim {

struct TableRegister {
  uint64_t base = 0;
  uint32_t limit = 0;
  bool operator==(const TableRegister&) const = default;
};

// Hidden descriptor cache: loaded once at segment-load time; later table
// writes do not affect it until the next load.
struct SegmentCache {
  uint64_t base = 0;
  uint32_t limit = 0;
  uint8_t type = 0;
  bool s = false;
  uint8_t dpl = 0;
  bool present = false;
  bool l = false;
  bool db = false;
};

struct SegmentRegister {
  Selector selector;
  SegmentCache cache;
};

struct Tss {
  struct RingStack {
    Selector ss;
    uint64_t sp = 0;
  };
  std::array<RingStack, 3> ring;  // stacks for transfers into rings 0..2
};

struct TraceEvent {
  std::string op;
  int cpl_before = 0;
  int cpl_after = 0;
  bool faulted = false;
  std::string fault;
};

inline constexpr uint64_t kCr4UmipBit = 1ull << 11;

struct CpuCore {
  int core_id = 0;
  int cpl = 3;
  DescriptorMode mode = DescriptorMode::Long64;

  SegmentRegister cs, ss, ds, es, fs, gs;
  TableRegister gdtr, idtr;
  Selector ldtr, tr;
  Tss tss;

  uint64_t cr4 = 0;
  uint64_t msr_lstar = 0;
  uint64_t rip = 0;
  uint64_t rsp = 0;
  std::vector<uint64_t> stack;  // top = back()

  std::vector<TraceEvent> trace;

  bool umip() const { return cr4 & kCr4UmipBit; }
  void set_umip(bool on) {
    if (on)
      cr4 |= kCr4UmipBit;
    else
      cr4 &= ~kCr4UmipBit;
  }
};

// --- segment loads -------------------------------------------------------

Result<void> load_data_segment(CpuCore& cpu, const DescriptorTable& table,
                               SegmentRegister& reg, Selector sel);
Result<void> load_stack_segment(CpuCore& cpu, const DescriptorTable& table,
                                Selector sel);

// --- far control transfers ----------------------------------------------

// Direct far jump to a code-segment selector (no gate).
Result<void> far_jump_code(CpuCore& cpu, const DescriptorTable& gdt,
                           Selector sel, uint64_t offset);
// CALL through a call-gate selector; switches stack and CPL when the gate
// targets more privileged code.
Result<void> far_call_through_gate(CpuCore& cpu, const DescriptorTable& gdt,
                                   Selector gate_sel);
// Far return; pop_bytes models "lret $n" (callee-cleaned gate parameters).
Result<void> far_return(CpuCore& cpu, const DescriptorTable& gdt,
                        uint16_t pop_bytes = 0);

// --- descriptor-table instructions --------------------------------------

enum class StoreInstr { Sgdt, Sidt, Sldt, Smsw, Str };
enum class LoadInstr { Lgdt, Lidt, Lldt, Ltr };

inline const char* store_instr_name(StoreInstr s) {
  switch (s) {
    case StoreInstr::Sgdt: return "sgdt";
    case StoreInstr::Sidt: return "sidt";
    case StoreInstr::Sldt: return "sldt";
    case StoreInstr::Smsw: return "smsw";
    case StoreInstr::Str: return "str";
  }
  return "?";
}
inline const char* load_instr_name(LoadInstr s) {
  switch (s) {
    case LoadInstr::Lgdt: return "lgdt";
    case LoadInstr::Lidt: return "lidt";
    case LoadInstr::Lldt: return "lldt";
    case LoadInstr::Ltr: return "ltr";
  }
  return "?";
}

// sgdt/sidt yield a TableRegister; sldt/str/smsw yield a 16-bit value.
using StoreValue = std::variant<TableRegister, uint16_t>;

// Unprivileged store path.  Precedence: UMIP #GP (cpl > 0) first, then the
// descriptor-table VM exit, then the raw value.
Result<StoreValue> exec_store_instruction(CpuCore& cpu, StoreInstr which,
                                          const MitigationConfig& cfg);
StoreValue store_raw(const CpuCore& cpu, StoreInstr which);

using LoadValue = std::variant<TableRegister, Selector>;
// Privileged loads: #GP at cpl > 0 always; VM exit at cpl 0 under exiting.
Result<void> exec_load_table_instruction(CpuCore& cpu, LoadInstr which,
                                         LoadValue value,
                                         const MitigationConfig& cfg);

}  // namespace gatesim
