#pragma once
// Kernel address-space layout for the simulated target.
//
// Two page-table views model KAISER-style isolation: the kernel view maps
// everything, the user view only the interrupt/syscall surface that must
// stay mapped for the machine to function (per-core IDT and GDT pages, the
// syscall entry page, interrupt stubs, and the page-table pages themselves).
// With isolation disabled both views are identical.  All pages are 4 KiB.
//
// Per-core tables sit inside a randomized slide window but keep a fixed
// sub-page pattern: the IDT page address is
//     0xfffff80000000000 | (x << 20) | (low_const << 12)
// with a 16-bit random x, and the GDT follows at IDT + 0x2000 with an
// unmapped guard page between them.  That (mapped, hole, mapped) triple is
// exactly what the timing search keys on.

#include <cstdint>
#include <map>
#include <vector>

#include "gatesim/fault.hpp"

namespace gatesim {

enum class View { User, Kernel };

inline constexpr uint64_t kPageSize = 0x1000;
inline constexpr uint64_t kSlideBase = 0xFFFFF80000000000ull;
inline constexpr uint64_t kIdtGdtGap = 0x2000;
inline constexpr uint8_t kCore0LowConst = 0x5B;

// Windows far above the slide region (>= 2^32 away from every candidate, so
// nothing in them can ever satisfy the search pattern).
inline constexpr uint64_t kFarBase = kSlideBase + 0x3000000000ull;
inline constexpr uint64_t kLstarWindow = kFarBase + 0x000000000ull;
inline constexpr uint64_t kPtWindow = kFarBase + 0x040000000ull;
inline constexpr uint64_t kStubWindow = kFarBase + 0x080000000ull;
inline constexpr uint64_t kKdataWindow = kFarBase + 0x0C0000000ull;
inline constexpr uint64_t kDualGdtWindow = kFarBase + 0x100000000ull;
inline constexpr uint64_t kWindowSpan = 0x040000000ull;  // 1 GiB each

inline constexpr uint64_t kUserCodePage = 0x0000000000010000ull;
inline constexpr uint64_t kUserStackPage = 0x0000000000011000ull;

inline constexpr uint64_t page_of(uint64_t addr) { return addr & ~(kPageSize - 1); }

struct PageFlags {
  bool in_user = false;
  bool in_kernel = true;
  bool supervisor = true;
  bool writable = true;
};

struct CoreTables {
  uint16_t x = 0;          // per-core 16-bit slide
  uint8_t low_const = 0;   // bits 12..19 of the table addresses
  uint64_t idt_base = 0;
  uint64_t gdt_base = 0;   // idt_base + 0x2000
  uint64_t tss_base = 0;
};

struct LayoutParams {
  uint64_t seed = 1;
  int cores = 1;
  bool kaiser = false;
};

class AddressSpaceLayout {
 public:
  LayoutParams params;
  std::vector<CoreTables> cores;
  uint64_t lstar = 0;
  uint64_t pt_region = 0;  // 4 contiguous page-table pages
  std::vector<uint64_t> stub_pages;
  uint64_t scratch_page = 0;  // kernel data: shellcode staging / markers
  uint64_t token_page = 0;    // kernel data: process token object

  void add_page(uint64_t page, PageFlags f);
  bool has_page(uint64_t page) const;
  const PageFlags* page_flags(uint64_t page) const;
  PageFlags* page_flags_mut(uint64_t page);

  // The single fact the timing channel leaks: is this address backed by a
  // translation in the given view?
  bool mapped(uint64_t addr, View v) const;

  // Permission-checked accesses (page must be mapped in the view; supervisor
  // pages need cpl 0; writes need a writable page).
  Result<void> write_bytes(uint64_t addr, const uint8_t* data, size_t n,
                           int cpl, View v);
  Result<std::vector<uint8_t>> read_bytes(uint64_t addr, size_t n, int cpl,
                                          View v) const;

  // Unchecked backdoors for construction, snapshots and assertions.
  void poke(uint64_t addr, const uint8_t* data, size_t n);
  std::vector<uint8_t> peek(uint64_t addr, size_t n) const;

  const std::map<uint64_t, PageFlags>& pages() const { return pages_; }

 private:
  Result<void> check_access(uint64_t addr, size_t n, int cpl, View v,
                            bool write) const;

  std::map<uint64_t, PageFlags> pages_;
  // One backing store per page, shared by both views (same frame).
  std::map<uint64_t, std::vector<uint8_t>> backing_;
};

// Candidate k of the pattern search for a given low_const.
constexpr uint64_t candidate_address(uint32_t k, uint8_t low_const) {
  return kSlideBase | (static_cast<uint64_t>(k) << 20) |
         (static_cast<uint64_t>(low_const) << 12);
}

AddressSpaceLayout generate_layout(const LayoutParams& p);

}  // namespace gatesim
