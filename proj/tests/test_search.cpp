#include "doctest.h"

#include <cmath>

#include "gatesim/search.hpp"

using namespace gatesim;

namespace {

SearchConfig quick_config(uint64_t seed, int workers = 1) {
  SearchConfig cfg;
  cfg.seed = seed;
  cfg.samples = 2;  // noiseless classification needs only one clean sample
  cfg.workers = workers;
  return cfg;
}

}  // namespace

TEST_CASE("noiseless full-rate search reports the planted pair") {
  AddressSpaceLayout lay = generate_layout({2955, 1, false});
  SearchConfig cfg = quick_config(2955);
  cfg.samples = 16;
  SearchReport rep = run_search(lay, cfg);
  REQUIRE(rep.found);
  CHECK(rep.idt == 0xFFFFF8036385B000ULL);
  CHECK(rep.gdt == 0xFFFFF8036385D000ULL);
  CHECK(rep.gdt == rep.idt + 0x2000);
  // k = 0x3638 means 0x3639 candidates were charged before the stop.
  CHECK(rep.candidates_probed == 0x3639);
  CHECK(rep.simulated_seconds == doctest::Approx(0x3639 / 10.0));
  CHECK(rep.confirmation_probes == 2);
}

TEST_CASE("noiseless soundness across a thousand seeds") {
  for (uint64_t seed = 1; seed <= 1000; ++seed) {
    AddressSpaceLayout lay = generate_layout({seed, 1, false});
    SearchReport rep = run_search(lay, quick_config(seed, 4));
    REQUIRE_MESSAGE(rep.found, "seed " << seed);
    REQUIRE_MESSAGE(rep.idt == lay.cores[0].idt_base, "seed " << seed);
    REQUIRE(rep.gdt == lay.cores[0].gdt_base);
  }
}

TEST_CASE("findings are identical across worker counts") {
  AddressSpaceLayout lay = generate_layout({404, 1, false});
  SearchReport one = run_search(lay, quick_config(404, 1));
  for (int w : {2, 3, 4, 8, 16}) {
    SearchReport many = run_search(lay, quick_config(404, w));
    CHECK(many.found == one.found);
    CHECK(many.idt == one.idt);
    CHECK(many.gdt == one.gdt);
    // Parallel time shrinks roughly by 1/w (exactly at candidate
    // granularity: the slowest worker runs floor(k/w)+1 candidates).
    uint32_t k = static_cast<uint32_t>((one.idt >> 20) & 0xFFFF);
    CHECK(many.simulated_seconds ==
          doctest::Approx((k / static_cast<uint32_t>(w) + 1) / many.rate));
  }
}

TEST_CASE("exhaustive single-core scan accounts 6553.6 simulated seconds") {
  AddressSpaceLayout lay = generate_layout({7, 1, false});
  SearchConfig cfg = quick_config(7);
  cfg.stop_on_first = false;
  SearchReport rep = run_search(lay, cfg);
  CHECK(rep.found);
  CHECK(rep.idt == lay.cores[0].idt_base);
  CHECK(rep.candidates_probed == 65536);
  CHECK(rep.simulated_seconds == 6553.6);
  CHECK(rep.simulated_seconds == rep.candidates_probed / rep.rate);
}

TEST_CASE("eight workers split the exhaustive scan to 819.2 seconds") {
  AddressSpaceLayout lay = generate_layout({7, 1, false});
  SearchConfig cfg = quick_config(7, 8);
  cfg.stop_on_first = false;
  SearchReport rep = run_search(lay, cfg);
  CHECK(rep.candidates_probed == 65536);
  CHECK(rep.simulated_seconds == 819.2);
  REQUIRE(rep.worker_probes.size() == 8);
  for (uint32_t p : rep.worker_probes) CHECK(p == 8192);
}

TEST_CASE("fast mode halves samples and doubles the rate") {
  AddressSpaceLayout lay = generate_layout({11, 1, false});
  SearchConfig cfg = quick_config(11);
  cfg.samples = 16;
  cfg.fast = true;
  SearchReport rep = run_search(lay, cfg);
  CHECK(rep.samples == 8);
  CHECK(rep.rate == 20.0);
  CHECK(rep.found);

  SearchConfig slow = quick_config(11);
  slow.samples = 16;
  SearchReport srep = run_search(lay, slow);
  // Same discovery, half the simulated time.
  CHECK(rep.idt == srep.idt);
  CHECK(rep.simulated_seconds == doctest::Approx(srep.simulated_seconds / 2));
}

TEST_CASE("per-candidate records match ground truth with zero misclassifications") {
  AddressSpaceLayout lay = generate_layout({31, 1, false});
  SearchConfig cfg = quick_config(31);
  cfg.stop_on_first = false;
  cfg.collect_candidates = true;
  SearchReport rep = run_search(lay, cfg);
  REQUIRE(rep.candidates.size() == 65536);
  uint32_t mis = 0;
  uint64_t prev = 0;
  for (const CandidateRecord& r : rep.candidates) {
    CHECK(r.address > prev);  // sorted ascending
    prev = r.address;
    bool truly = lay.mapped(r.address, View::User);
    if (r.mapped != truly) ++mis;
  }
  CHECK(mis == 0);
  // Exactly one candidate is mapped: the IDT page itself.
  uint32_t mapped_count = 0;
  for (const CandidateRecord& r : rep.candidates)
    if (r.mapped) ++mapped_count;
  CHECK(mapped_count == 1);
}

TEST_CASE("stub and syscall pages never enter the findings") {
  for (uint64_t seed : {1ull, 19ull, 77ull}) {
    AddressSpaceLayout lay = generate_layout({seed, 2, false});
    SearchReport rep = run_search(lay, quick_config(seed, 4));
    REQUIRE(rep.found);
    for (uint64_t stub : lay.stub_pages) {
      CHECK(rep.idt != stub);
      CHECK(rep.gdt != stub);
    }
    CHECK(rep.idt != page_of(lay.lstar));
  }
}

TEST_CASE("searching a second core uses that core's pattern") {
  AddressSpaceLayout lay = generate_layout({5, 4, false});
  SearchConfig cfg = quick_config(5, 8);
  cfg.core = 2;
  SearchReport rep = run_search(lay, cfg);
  REQUIRE(rep.found);
  CHECK(rep.idt == lay.cores[2].idt_base);
  CHECK(rep.core == 2);
}

TEST_CASE("no-hit scans terminate with absent findings, not errors") {
  // A layout without core 3 tables: scan core 0's pattern on a foreign
  // low_const by hunting core-1 pattern in a single-core layout.
  AddressSpaceLayout lay = generate_layout({13, 1, false});
  SearchConfig cfg = quick_config(13);
  // Forge a config against a low_const no core owns by probing core 0's
  // pattern in a layout whose tables were all unmapped.
  AddressSpaceLayout empty = lay;
  // Strip the table pages out of both views.
  for (const CoreTables& c : lay.cores) {
    empty.page_flags_mut(c.idt_base)->in_user = false;
    empty.page_flags_mut(c.idt_base)->in_kernel = false;
    empty.page_flags_mut(c.gdt_base)->in_user = false;
    empty.page_flags_mut(c.gdt_base)->in_kernel = false;
  }
  SearchReport rep = run_search(empty, cfg);
  CHECK(!rep.found);
  CHECK(rep.idt == 0);
  CHECK(rep.candidates_probed == 65536);  // exhausted the space
}

TEST_CASE("reports are bit-identical across repeated runs") {
  AddressSpaceLayout lay = generate_layout({99, 1, false});
  SearchConfig cfg = quick_config(99, 8);
  cfg.noise.sigma = 2.0;
  cfg.noise.contention_rate = 0.05;
  cfg.noise.outlier_shift = 30.0;
  cfg.samples = 16;
  SearchReport a = run_search(lay, cfg);
  SearchReport b = run_search(lay, cfg);
  CHECK(a.found == b.found);
  CHECK(a.idt == b.idt);
  CHECK(a.candidates_probed == b.candidates_probed);
  CHECK(a.simulated_seconds == b.simulated_seconds);
  CHECK(a.worker_probes == b.worker_probes);
}

TEST_CASE("noisy accuracy: 100 seeded layouts at sigma 3 recover >= 99") {
  int correct = 0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    AddressSpaceLayout lay = generate_layout({seed, 1, false});
    SearchConfig cfg = quick_config(seed, 8);
    cfg.samples = 16;
    cfg.noise.sigma = 3.0;
    SearchReport rep = run_search(lay, cfg);
    if (rep.found && rep.idt == lay.cores[0].idt_base &&
        rep.gdt == lay.cores[0].gdt_base) {
      ++correct;
    }
  }
  CHECK(correct >= 99);
}

TEST_CASE("fast rate trades accuracy under noise") {
  // Contention outliers push samples upward; with half the samples the min
  // statistic is measurably more fragile, so doubling the probe rate costs
  // accuracy.
  int slow_correct = 0, fast_correct = 0;
  for (uint64_t seed = 1; seed <= 120; ++seed) {
    AddressSpaceLayout lay = generate_layout({seed, 1, false});
    SearchConfig cfg = quick_config(seed, 8);
    cfg.samples = 16;
    cfg.noise.sigma = 2.0;
    cfg.noise.contention_rate = 0.7;
    cfg.noise.outlier_shift = 30.0;
    SearchReport slow = run_search(lay, cfg);
    if (slow.found && slow.idt == lay.cores[0].idt_base) ++slow_correct;
    cfg.fast = true;
    SearchReport fast = run_search(lay, cfg);
    if (fast.found && fast.idt == lay.cores[0].idt_base) ++fast_correct;
  }
  CHECK(slow_correct >= 115);      // 16 samples ride out the outliers
  CHECK(fast_correct < slow_correct);
  CHECK(slow_correct - fast_correct >= 3);
}
