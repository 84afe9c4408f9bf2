#include "doctest.h"

#include <set>

#include "gatesim/descriptor_table.hpp"
#include "gatesim/layout.hpp"

using namespace gatesim;

TEST_CASE("frozen seeds reproduce the published first-core addresses") {
  // Each address obeys the fffff80XXXX5b000 pattern of the first core.
  struct Fix { uint64_t seed; uint64_t idt; };
  const Fix fixtures[] = {
      {2955, 0xFFFFF8036385B000ULL},
      {57085, 0xFFFFF8027CA5B000ULL},
      {32529, 0xFFFFF80053A5B000ULL},
      {73119, 0xFFFFF8076525B000ULL},
  };
  for (const Fix& f : fixtures) {
    AddressSpaceLayout lay = generate_layout({f.seed, 1, false});
    CHECK(lay.cores[0].idt_base == f.idt);
    CHECK(lay.cores[0].gdt_base == f.idt + 0x2000);
    CHECK(lay.cores[0].low_const == 0x5B);
  }
}

TEST_CASE("candidate_address composes the pattern") {
  CHECK(candidate_address(0x3638, 0x5B) == 0xFFFFF8036385B000ULL);
  CHECK(candidate_address(0, 0x5B) == 0xFFFFF8000005B000ULL);
  // Strictly increasing in k.
  uint64_t prev = 0;
  for (uint32_t k = 0; k < 0x10000; k += 0x111) {
    uint64_t a = candidate_address(k, 0x5B);
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("layout invariants hold across seeds and core counts") {
  for (uint64_t seed : {1ull, 2ull, 99ull, 123456ull}) {
    AddressSpaceLayout lay = generate_layout({seed, 8, false});
    REQUIRE(lay.cores.size() == 8);
    std::set<uint8_t> lows;
    for (const CoreTables& c : lay.cores) {
      // Pattern membership and the 0x2000 pairing.
      CHECK(c.idt_base == candidate_address(c.x, c.low_const));
      CHECK(c.gdt_base == c.idt_base + kIdtGdtGap);
      CHECK(lay.mapped(c.idt_base, View::Kernel));
      CHECK(lay.mapped(c.gdt_base, View::Kernel));
      // The guard hole between them is what the search confirms against.
      CHECK(!lay.mapped(c.idt_base + 0x1000, View::Kernel));
      lows.insert(c.low_const);
    }
    CHECK(lay.cores[0].low_const == kCore0LowConst);
    // Distinct per-core low constants: a core's candidate set can only ever
    // contain its own tables.
    CHECK(lows.size() == 8);
    // Far windows stay out of every candidate set.
    for (const CoreTables& c : lay.cores) {
      for (uint64_t far : {lay.lstar, lay.pt_region, lay.scratch_page}) {
        CHECK(((far >> 36) & 0xF) != 0x0);  // 0xFFFFF83... vs 0xFFFFF80...
        (void)c;
      }
    }
  }
}

TEST_CASE("no cross-core candidate collisions") {
  // Any mapped page inside core c's candidate set must be core c's own IDT
  // or nothing; other cores' tables can never alias into it.
  AddressSpaceLayout lay = generate_layout({7, 8, false});
  for (const CoreTables& c : lay.cores) {
    for (const CoreTables& other : lay.cores) {
      if (&c == &other) continue;
      CHECK(((other.idt_base >> 12) & 0xFF) != c.low_const);
      CHECK(((other.gdt_base >> 12) & 0xFF) != c.low_const);
    }
  }
}

TEST_CASE("generation is deterministic") {
  AddressSpaceLayout a = generate_layout({42, 4, false});
  AddressSpaceLayout b = generate_layout({42, 4, false});
  REQUIRE(a.cores.size() == b.cores.size());
  for (size_t i = 0; i < a.cores.size(); ++i) {
    CHECK(a.cores[i].idt_base == b.cores[i].idt_base);
    CHECK(a.cores[i].tss_base == b.cores[i].tss_base);
  }
  CHECK(a.lstar == b.lstar);
  CHECK(a.pt_region == b.pt_region);
  CHECK(a.stub_pages == b.stub_pages);
}

TEST_CASE("kaiser flips the user view, never the kernel view") {
  AddressSpaceLayout iso = generate_layout({5, 2, true});
  AddressSpaceLayout flat = generate_layout({5, 2, false});
  // Same physical placement either way.
  CHECK(iso.cores[0].idt_base == flat.cores[0].idt_base);

  // The leak surface stays user-mapped even under isolation; that is the
  // whole point of the attack surface.
  CHECK(iso.mapped(iso.cores[0].idt_base, View::User));
  CHECK(iso.mapped(iso.cores[0].gdt_base, View::User));
  CHECK(iso.mapped(iso.lstar, View::User));

  // Ordinary kernel data vanishes from the user view under isolation.
  CHECK(!iso.mapped(iso.scratch_page, View::User));
  CHECK(!iso.mapped(iso.token_page, View::User));
  CHECK(flat.mapped(flat.scratch_page, View::User));
  // And the kernel view always maps it.
  CHECK(iso.mapped(iso.scratch_page, View::Kernel));
}

TEST_CASE("access checks enforce view, privilege and writability") {
  AddressSpaceLayout lay = generate_layout({9, 1, true});
  uint8_t buf[4] = {1, 2, 3, 4};

  // Supervisor page from cpl 3 faults even where mapped.
  auto r = lay.write_bytes(lay.cores[0].gdt_base, buf, 4, 3, View::User);
  CHECK(!r.ok());
  CHECK(r.fault().kind == FaultKind::PageFault);

  // Unmapped-in-view faults.
  r = lay.write_bytes(lay.scratch_page, buf, 4, 0, View::User);
  CHECK(!r.ok());

  // Kernel view at cpl 0 succeeds and the bytes land.
  r = lay.write_bytes(lay.scratch_page, buf, 4, 0, View::Kernel);
  REQUIRE(r.ok());
  auto back = lay.read_bytes(lay.scratch_page, 4, 0, View::Kernel);
  REQUIRE(back.ok());
  CHECK(back.value() == std::vector<uint8_t>({1, 2, 3, 4}));

  // User code page is user-writable from cpl 3.
  r = lay.write_bytes(kUserCodePage, buf, 4, 3, View::User);
  CHECK(r.ok());
}

TEST_CASE("tables are populated at generation time") {
  AddressSpaceLayout lay = generate_layout({1, 1, false});
  DescriptorTable gdt;
  gdt.kind = TableKind::Gdt;
  gdt.base = lay.cores[0].gdt_base;
  gdt.bytes = lay.peek(lay.cores[0].gdt_base, 0x1000);
  auto code = gdt.lookup(Selector{kSelKernelCode}, DescriptorMode::Long64);
  REQUIRE(code.ok());
  CHECK(code.value().kind == DecodedEntry::Kind::Segment);
  CHECK(code.value().seg.l);
  CHECK(code.value().seg.dpl == 0);
  auto tss = gdt.lookup(Selector{kSelTss}, DescriptorMode::Long64);
  REQUIRE(tss.ok());
  CHECK(tss.value().kind == DecodedEntry::Kind::SystemSegment);
  CHECK(tss.value().seg.base == lay.cores[0].tss_base);
}
