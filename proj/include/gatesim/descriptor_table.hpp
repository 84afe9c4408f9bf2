#pragma once
// Descriptor tables as byte arrays plus typed accessors, mirroring how the
// hardware sees them: GDTR/IDTR hold only (base, limit) and every lookup is
// a bounds-checked byte fetch.

#include <cstdint>
#include <string>
#include <vector>

#include "gatesim/descriptor.hpp"
#include "gatesim/fault.hpp"
#include "gatesim/selector.hpp"

namespace gatesim {

enum class TableKind { Gdt, Idt, Ldt };

struct DescriptorTable {
  TableKind kind = TableKind::Gdt;
  uint64_t base = 0;
  std::vector<uint8_t> bytes;  // limit = bytes.size() - 1

  uint32_t limit() const {
    return bytes.empty() ? 0 : static_cast<uint32_t>(bytes.size() - 1);
  }
  size_t slot_count() const { return bytes.size() / 8; }

  const uint8_t* slot_ptr(size_t slot) const { return bytes.data() + slot * 8; }

  // Bounds-checked descriptor fetch for a selector (data/code/gate access
  // path).  Faults mention the selector so callers can surface the cause.
  Result<DecodedEntry> lookup(Selector sel, DescriptorMode mode) const;

  // Raw slot read without privilege semantics, for dumps and tests.
  DecodedEntry entry_at(size_t slot, DescriptorMode mode) const;

  void write_slot(size_t slot, const uint8_t* data, size_t n);
  bool slot_is_zero(size_t slot) const;
};

// First slot index >= first_slot whose 16 bytes (two slots) are free, or -1.
int find_free_slot_pair(const DescriptorTable& t, size_t first_slot);

// Canonical OS tables used by every simulated core.
//
// GDT slots: 0 null, 1 ring-0 code (0x08), 2 ring-0 data (0x10),
// 3 ring-3 code (0x18), 4 ring-3 data (0x20), 5+6 64-bit TSS; the rest of
// the page stays zero (free for an attacker to claim).
DescriptorTable make_os_gdt(uint64_t base, uint64_t tss_base);
// IDT: 256 16-byte interrupt gates -> handler_base + 16 * vector.
DescriptorTable make_os_idt(uint64_t base, uint64_t handler_base);

inline constexpr Selector kSelKernelCode = Selector(0x08);
inline constexpr Selector kSelKernelData = Selector(0x10);
inline constexpr Selector kSelUserCode = Selector(0x18 | 3);
inline constexpr Selector kSelUserData = Selector(0x20 | 3);
inline constexpr Selector kSelTss = Selector(0x28);

// Classic 16-bytes-per-line hex dump ("<addr>: b0 b1 ... b15").
std::string hex_dump(uint64_t base, const uint8_t* data, size_t n);

}  // namespace gatesim
