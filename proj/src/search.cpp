#include "gatesim/search.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>

namespace gatesim {

namespace {

struct Hit {
  uint32_t tick;
  uint32_t k;
};

struct WorkerOut {
  std::vector<Hit> initial_hits;    // mapped-class candidates (pre-confirm)
  std::vector<Hit> confirmed_hits;
  std::vector<CandidateRecord> records;
  uint32_t assigned = 0;
};

constexpr uint32_t kChunk = 512;

}  // namespace

SearchReport run_search(const AddressSpaceLayout& lay, const SearchConfig& cfg) {
  SearchReport rep;
  rep.core = cfg.core;
  rep.workers = std::max(1, cfg.workers);
  rep.rate = cfg.fast ? cfg.rate * 2.0 : cfg.rate;
  rep.samples = cfg.fast ? std::max(1u, cfg.samples / 2) : cfg.samples;

  const uint8_t low_const =
      lay.cores[static_cast<size_t>(cfg.core)].low_const;
  const int W = rep.workers;
  const uint32_t n_samples = rep.samples;

  TimingConfig tc;
  tc.seed = cfg.seed;
  tc.timer = cfg.timer;
  tc.noise = cfg.noise;
  tc.bands = cfg.bands;
  const SampleParams sp = make_sample_params(tc);

  auto stat_of = [&](uint64_t addr) {
    Band band = band_of_address(tc, lay, addr, View::User);
    double out;
    min_stat(sp, &addr, &band, 1, n_samples, &out);
    return out;
  };

  std::atomic<uint32_t> cancel_tick{std::numeric_limits<uint32_t>::max()};
  std::vector<WorkerOut> outs(W);

  auto worker_fn = [&](int w) {
    WorkerOut& out = outs[w];
    // Worker w owns candidates w, w+W, w+2W, ...; tick = position in that
    // sequence, so tick t across all workers means "t+1 candidates of my
    // share probed".
    std::vector<uint64_t> addrs;
    std::vector<Band> bands;
    std::vector<double> stats;
    uint32_t tick = 0;
    for (uint32_t k0 = static_cast<uint32_t>(w); k0 < kCandidateCount;
         k0 += static_cast<uint32_t>(W) * kChunk) {
      if (tick > cancel_tick.load(std::memory_order_relaxed)) break;
      addrs.clear();
      bands.clear();
      for (uint32_t j = 0; j < kChunk; ++j) {
        uint64_t k = k0 + static_cast<uint64_t>(j) * W;
        if (k >= kCandidateCount) break;
        uint64_t a = candidate_address(static_cast<uint32_t>(k), low_const);
        addrs.push_back(a);
        bands.push_back(band_of_address(tc, lay, a, View::User));
      }
      if (addrs.empty()) break;
      stats.resize(addrs.size());
      min_stat(sp, addrs.data(), bands.data(), addrs.size(), n_samples,
               stats.data());
      bool stop = false;
      for (size_t j = 0; j < addrs.size(); ++j, ++tick) {
        uint32_t k = k0 + static_cast<uint32_t>(j) * W;
        bool mapped_class = stats[j] < cfg.threshold;
        if (cfg.collect_candidates) {
          out.records.push_back({addrs[j], stats[j], mapped_class});
        }
        if (!mapped_class) continue;
        out.initial_hits.push_back({tick, k});
        // Confirmation pair: sibling table at +0x2000 and the guard hole.
        double sib = stat_of(addrs[j] + kIdtGdtGap);
        double hole = stat_of(addrs[j] + kIdtGdtGap / 2);
        if (sib < cfg.threshold && hole >= cfg.threshold) {
          out.confirmed_hits.push_back({tick, k});
          if (cfg.stop_on_first) {
            // Publish our tick so other workers can stop scheduling later
            // ticks; the final winner is resolved after the join.
            uint32_t cur = cancel_tick.load(std::memory_order_relaxed);
            while (tick < cur && !cancel_tick.compare_exchange_weak(
                                     cur, tick, std::memory_order_relaxed)) {
            }
            stop = true;
            break;
          }
        }
      }
      if (stop) break;
    }
    uint32_t assigned = 0;
    for (uint32_t k = static_cast<uint32_t>(w); k < kCandidateCount; k += W) {
      ++assigned;
    }
    out.assigned = assigned;
  };

  if (W == 1) {
    worker_fn(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(W);
    for (int w = 0; w < W; ++w) threads.emplace_back(worker_fn, w);
    for (auto& th : threads) th.join();
  }

  // Resolve the winner from the lockstep model: earliest tick, then lowest
  // candidate index.  This is independent of actual thread interleaving.
  uint32_t best_tick = std::numeric_limits<uint32_t>::max();
  uint32_t best_k = std::numeric_limits<uint32_t>::max();
  for (const auto& out : outs) {
    for (const Hit& h : out.confirmed_hits) {
      if (h.tick < best_tick || (h.tick == best_tick && h.k < best_k)) {
        best_tick = h.tick;
        best_k = h.k;
      }
    }
  }

  const bool hit = cfg.stop_on_first &&
                   best_tick != std::numeric_limits<uint32_t>::max();
  rep.worker_probes.resize(W);
  uint64_t total = 0;
  uint32_t slowest = 0;
  for (int w = 0; w < W; ++w) {
    uint32_t probes = outs[w].assigned;
    if (hit) probes = std::min(probes, best_tick + 1);
    rep.worker_probes[w] = probes;
    total += probes;
    slowest = std::max(slowest, probes);
  }
  rep.candidates_probed = static_cast<uint32_t>(total);
  rep.simulated_seconds = static_cast<double>(slowest) / rep.rate;

  // Everything scheduled at tick <= best_tick actually ran; trim overshoot.
  auto in_schedule = [&](uint32_t k) {
    return !hit || (k / W) <= best_tick;
  };
  for (const auto& out : outs) {
    for (const Hit& h : out.initial_hits) {
      if (in_schedule(h.k)) rep.confirmation_probes += 2;
    }
  }
  if (cfg.collect_candidates) {
    for (const auto& out : outs) {
      for (const auto& r : out.records) {
        uint32_t k = static_cast<uint32_t>((r.address >> 20) & 0xFFFF);
        if (in_schedule(k)) rep.candidates.push_back(r);
      }
    }
    std::sort(rep.candidates.begin(), rep.candidates.end(),
              [](const CandidateRecord& a, const CandidateRecord& b) {
                return a.address < b.address;
              });
  }

  if (best_tick != std::numeric_limits<uint32_t>::max()) {
    rep.found = true;
    rep.idt = candidate_address(best_k, low_const);
    rep.gdt = rep.idt + kIdtGdtGap;
  } else if (!cfg.stop_on_first) {
    // Exhaustive mode: report the first confirmed hit if any exists.
    uint32_t first_k = std::numeric_limits<uint32_t>::max();
    for (const auto& out : outs) {
      for (const Hit& h : out.confirmed_hits) first_k = std::min(first_k, h.k);
    }
    if (first_k != std::numeric_limits<uint32_t>::max()) {
      rep.found = true;
      rep.idt = candidate_address(first_k, low_const);
      rep.gdt = rep.idt + kIdtGdtGap;
    }
  }
  return rep;
}

}  // namespace gatesim
