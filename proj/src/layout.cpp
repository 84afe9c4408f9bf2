#include "gatesim/layout.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include "gatesim/descriptor_table.hpp"
#include "gatesim/hexfmt.hpp"
#include "gatesim/rng.hpp"

namespace gatesim {

void AddressSpaceLayout::add_page(uint64_t page, PageFlags f) {
  pages_[page_of(page)] = f;
  backing_[page_of(page)].assign(kPageSize, 0);
}

bool AddressSpaceLayout::has_page(uint64_t page) const {
  return pages_.count(page_of(page)) != 0;
}

const PageFlags* AddressSpaceLayout::page_flags(uint64_t page) const {
  auto it = pages_.find(page_of(page));
  return it == pages_.end() ? nullptr : &it->second;
}

PageFlags* AddressSpaceLayout::page_flags_mut(uint64_t page) {
  auto it = pages_.find(page_of(page));
  return it == pages_.end() ? nullptr : &it->second;
}

bool AddressSpaceLayout::mapped(uint64_t addr, View v) const {
  const PageFlags* f = page_flags(addr);
  if (!f) return false;
  // Without isolation there is a single page table: every mapping is
  // reachable from user mode too (supervisor bit still applies to access).
  if (v == View::User && params.kaiser) return f->in_user;
  return f->in_kernel;
}

Result<void> AddressSpaceLayout::check_access(uint64_t addr, size_t n, int cpl,
                                              View v, bool write) const {
  for (uint64_t page = page_of(addr); page < addr + n; page += kPageSize) {
    if (!mapped(page, v)) {
      return Fault::page("address " + hex16(page) + " not mapped in " +
                         (v == View::User ? "user" : "kernel") + std::string(" view"));
    }
    const PageFlags* f = page_flags(page);
    if (f->supervisor && cpl > 0) {
      return Fault::page("supervisor page " + hex16(page) + " from cpl " +
                         std::to_string(cpl));
    }
    if (write && !f->writable) {
      return Fault::page("read-only page " + hex16(page));
    }
  }
  return {};
}

Result<void> AddressSpaceLayout::write_bytes(uint64_t addr, const uint8_t* data,
                                             size_t n, int cpl, View v) {
  if (auto r = check_access(addr, n, cpl, v, true); !r) return r;
  poke(addr, data, n);
  return {};
}

Result<std::vector<uint8_t>> AddressSpaceLayout::read_bytes(uint64_t addr,
                                                            size_t n, int cpl,
                                                            View v) const {
  if (auto r = check_access(addr, n, cpl, v, false); !r) return r.fault();
  return peek(addr, n);
}

void AddressSpaceLayout::poke(uint64_t addr, const uint8_t* data, size_t n) {
  size_t done = 0;
  while (done < n) {
    uint64_t page = page_of(addr + done);
    uint64_t off = (addr + done) - page;
    size_t chunk = std::min<size_t>(n - done, kPageSize - off);
    auto it = backing_.find(page);
    if (it != backing_.end()) {
      std::memcpy(it->second.data() + off, data + done, chunk);
    }
    done += chunk;
  }
}

std::vector<uint8_t> AddressSpaceLayout::peek(uint64_t addr, size_t n) const {
  std::vector<uint8_t> out(n, 0);
  size_t done = 0;
  while (done < n) {
    uint64_t page = page_of(addr + done);
    uint64_t off = (addr + done) - page;
    size_t chunk = std::min<size_t>(n - done, kPageSize - off);
    auto it = backing_.find(page);
    if (it != backing_.end()) {
      std::memcpy(out.data() + done, it->second.data() + off, chunk);
    }
    done += chunk;
  }
  return out;
}

namespace {

// Distinct-page allocator over one of the far windows.
class PageDraw {
 public:
  PageDraw(SplitMix64& rng, std::set<uint64_t>& used) : rng_(rng), used_(used) {}

  uint64_t one(uint64_t window) {
    for (;;) {
      uint64_t page = window + (rng_.next_below(kWindowSpan >> 12) << 12);
      if (used_.insert(page).second) return page;
    }
  }

  // n contiguous fresh pages; returns the first.
  uint64_t run(uint64_t window, int n) {
    for (;;) {
      uint64_t first =
          window + (rng_.next_below((kWindowSpan >> 12) - n) << 12);
      bool ok = true;
      for (int i = 0; i < n; ++i)
        ok &= used_.count(first + static_cast<uint64_t>(i) * kPageSize) == 0;
      if (!ok) continue;
      for (int i = 0; i < n; ++i)
        used_.insert(first + static_cast<uint64_t>(i) * kPageSize);
      return first;
    }
  }

 private:
  SplitMix64& rng_;
  std::set<uint64_t>& used_;
};

}  // namespace

AddressSpaceLayout generate_layout(const LayoutParams& p) {
  AddressSpaceLayout lay;
  lay.params = p;
  SplitMix64 rng(substream(p.seed, kTagLayout));

  const int n = std::max(1, p.cores);
  lay.cores.resize(n);
  for (int c = 0; c < n; ++c) {
    lay.cores[c].x = static_cast<uint16_t>(rng.next_below(0x10000));
  }

  // low_const values live on the lattice {3 + 4k}: any two differ by at
  // least 4 pages, so the (table, hole, table) triples of different cores
  // can never interleave into a false pattern match.  Core 0 is pinned to
  // the well-known 0x5b.
  std::vector<uint8_t> lattice;
  for (int k = 0; k < 64; ++k) {
    uint8_t v = static_cast<uint8_t>(3 + 4 * k);
    if (v != kCore0LowConst) lattice.push_back(v);
  }
  for (size_t i = lattice.size() - 1; i > 0; --i) {
    size_t j = rng.next_below(i + 1);
    std::swap(lattice[i], lattice[j]);
  }
  lay.cores[0].low_const = kCore0LowConst;
  for (int c = 1; c < n; ++c) lay.cores[c].low_const = lattice[c - 1];

  for (int c = 0; c < n; ++c) {
    auto& ct = lay.cores[c];
    ct.idt_base = candidate_address(ct.x, ct.low_const);
    ct.gdt_base = ct.idt_base + kIdtGdtGap;
  }

  std::set<uint64_t> used;
  PageDraw draw(rng, used);
  uint64_t lstar_page = draw.one(kLstarWindow);
  lay.lstar = lstar_page + 0x500;
  lay.pt_region = draw.run(kPtWindow, 4);
  for (int i = 0; i < 4; ++i) lay.stub_pages.push_back(draw.one(kStubWindow));
  lay.scratch_page = draw.one(kKdataWindow);
  lay.token_page = draw.one(kKdataWindow);
  for (int c = 0; c < n; ++c) lay.cores[c].tss_base = draw.one(kKdataWindow);

  const PageFlags leak{true, true, true, true};       // minimal mapped surface
  const PageFlags kdata{false, true, true, true};     // kernel-only data
  const PageFlags user{true, true, false, true};      // ring-3 pages

  for (auto& ct : lay.cores) {
    lay.add_page(ct.idt_base, leak);
    lay.add_page(ct.gdt_base, leak);
    lay.add_page(ct.tss_base, kdata);
  }
  lay.add_page(lstar_page, leak);
  for (int i = 0; i < 4; ++i)
    lay.add_page(lay.pt_region + static_cast<uint64_t>(i) * kPageSize, leak);
  for (uint64_t s : lay.stub_pages) lay.add_page(s, leak);
  lay.add_page(lay.scratch_page, kdata);
  lay.add_page(lay.token_page, kdata);
  lay.add_page(kUserCodePage, user);
  lay.add_page(kUserStackPage, user);

  // Table contents.  Interrupt handlers vector through the first stub page.
  for (auto& ct : lay.cores) {
    DescriptorTable idt = make_os_idt(ct.idt_base, lay.stub_pages[0]);
    DescriptorTable gdt = make_os_gdt(ct.gdt_base, ct.tss_base);
    lay.poke(ct.idt_base, idt.bytes.data(), idt.bytes.size());
    lay.poke(ct.gdt_base, gdt.bytes.data(), gdt.bytes.size());
  }
  std::vector<uint8_t> stub_fill(kPageSize, 0xCC);
  for (uint64_t s : lay.stub_pages) lay.poke(s, stub_fill.data(), stub_fill.size());

  return lay;
}

}  // namespace gatesim
