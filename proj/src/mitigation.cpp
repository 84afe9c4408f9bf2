#include "gatesim/mitigation.hpp"

#include <utility>

#include "gatesim/hexfmt.hpp"
#include "gatesim/rng.hpp"

namespace gatesim {

Scenario apply(const MitigationConfig& cfg, AddressSpaceLayout layout,
               std::vector<CpuCore> cpus) {
  Scenario sc;
  sc.config = cfg;
  sc.layout = std::move(layout);
  sc.cpus = std::move(cpus);

  for (CpuCore& cpu : sc.cpus) cpu.set_umip(cfg.umip);
  // Isolation is a property of how the views are consulted; flipping the
  // flag is the whole switch.
  sc.layout.params.kaiser = cfg.kaiser;

  if (cfg.dual_gdt) {
    DualGdtState dual;
    dual.mode = cfg.dual_mode;
    SplitMix64 rng(substream(sc.layout.params.seed, kTagDualGdt));
    for (size_t c = 0; c < sc.layout.cores.size(); ++c) {
      const uint64_t user_base = sc.layout.cores[c].gdt_base;
      uint64_t kernel_base;
      do {
        kernel_base =
            kDualGdtWindow + (rng.next_below(kWindowSpan >> 12) << 12);
      } while (sc.layout.has_page(kernel_base));
      // Kernel-private copy of the table, never part of the user view.
      sc.layout.add_page(kernel_base, PageFlags{false, true, true, true});
      auto bytes = sc.layout.peek(user_base, kPageSize);
      sc.layout.poke(kernel_base, bytes.data(), bytes.size());
      if (cfg.dual_mode == DualGdtMode::ReadOnlyUserGdt) {
        sc.layout.page_flags_mut(user_base)->writable = false;
      }
      dual.user_base.push_back(user_base);
      dual.kernel_base.push_back(kernel_base);
    }
    sc.dual = std::move(dual);
  }
  return sc;
}

Result<StoreValue> vmm_store(CpuCore& cpu, StoreInstr which,
                             const MitigationConfig& cfg) {
  auto r = exec_store_instruction(cpu, which, cfg);
  if (r.ok()) return r;
  if (r.fault().kind != FaultKind::VmExit) return r;  // e.g. UMIP #GP

  switch (cfg.vmm_policy) {
    case VmmPolicy::PassThrough:
      return store_raw(cpu, which);
    case VmmPolicy::Spoof:
      switch (which) {
        case StoreInstr::Sgdt:
          return StoreValue(TableRegister{kSpoofTableBase + 0x2000, 0xFFF});
        case StoreInstr::Sidt:
          return StoreValue(TableRegister{kSpoofTableBase, 0xFFF});
        case StoreInstr::Sldt:
        case StoreInstr::Str:
          return StoreValue(static_cast<uint16_t>(0));
        case StoreInstr::Smsw:
          return StoreValue(static_cast<uint16_t>(0x33));
      }
      break;
    case VmmPolicy::Deny:
      switch (which) {
        case StoreInstr::Sgdt:
        case StoreInstr::Sidt:
          return StoreValue(TableRegister{0, 0});
        default:
          return StoreValue(static_cast<uint16_t>(0));
      }
  }
  return StoreValue(static_cast<uint16_t>(0));
}

EvalResult evaluate(const MitigationConfig& cfg, uint64_t seed,
                    const EvalParams& ep) {
  EvalResult R;
  R.config = cfg;
  R.seed = seed;

  LayoutParams lp{seed, ep.cores, cfg.kaiser};
  AddressSpaceLayout lay = generate_layout(lp);
  std::vector<CpuCore> cpus;
  for (int c = 0; c < ep.cores; ++c) cpus.push_back(make_cpu(lay, c));
  Scenario sc = apply(cfg, std::move(lay), std::move(cpus));
  CpuCore& cpu = sc.cpus[0];

  // Step 1: the cheap leak.  Under UMIP or a lying VMM this path dies or
  // misleads - which is exactly why the timing fallback exists.
  auto sv = vmm_store(cpu, StoreInstr::Sgdt, cfg);
  if (sv.ok()) {
    const auto& tr = std::get<TableRegister>(sv.value());
    R.sgdt_observed = hex16(tr.base);
    R.outcome.sgdt_truth = tr.base == cpu.gdtr.base;
  } else {
    R.sgdt_observed = sv.fault().to_string();
    R.outcome.sgdt_truth = false;
  }

  // Step 2: the timing search, oblivious to every store-side mitigation.
  SearchConfig scfg;
  scfg.seed = seed;
  scfg.core = 0;
  scfg.samples = ep.samples;
  scfg.rate = ep.rate;
  scfg.workers = ep.workers;
  scfg.fast = ep.fast;
  scfg.threshold = ep.threshold;
  scfg.timer = ep.timer;
  scfg.noise = ep.noise;
  scfg.bands = ep.bands;
  scfg.collect_candidates = ep.collect_candidates;
  R.search = run_search(sc.layout, scfg);
  const uint64_t true_idt = sc.layout.cores[0].idt_base;
  R.outcome.address_found = R.search.found && R.search.idt == true_idt;

  // Step 3: the integrity watcher runs during the whole attack over the
  // authoritative table.
  const uint64_t guarded = sc.dual ? sc.dual->kernel_base[0]
                                   : sc.layout.cores[0].gdt_base;
  PatchGuard pg = arm_patchguard(sc.layout, guarded, 0.0, seed);
  std::string failing;
  if (auto r = pg_advance(pg, sc.layout, R.search.simulated_seconds); !r) {
    R.patchguard_fired = true;
    R.patchguard_note = r.fault().to_string();
  }

  if (!R.outcome.address_found) {
    failing = "search";
  } else {
    // Step 4: plant the gate in the first free slot pair of the discovered
    // table and take the ring-0 round trip.
    DescriptorTable table =
        fetch_table(sc.layout, R.search.gdt, 0xFFF, TableKind::Gdt);
    int slot = find_free_slot_pair(table, 7);
    if (slot < 0) {
      failing = "install_gate";
    } else {
      WwwPrimitive www{&sc.layout, 0, View::Kernel};
      CallGateDescriptor gate =
          attack_gate(sc.layout.scratch_page + kShellcodeOffset);
      auto inst = install_gate(www, R.search.gdt, slot, gate);
      if (!inst) {
        failing = std::string("install_gate ") +
                  fault_kind_name(inst.fault().kind);
        R.exploit.fault = inst.fault();
        R.exploit.failing_op = "install_gate";
      } else {
        R.install = inst.value();
        ExploitParams epp;
        epp.gate_selector =
            Selector::make(static_cast<uint16_t>(slot), false, 3);
        epp.effect = ep.effect;
        epp.restore = ep.restore;
        epp.install = &R.install.value();
        epp.dual = sc.dual ? &*sc.dual : nullptr;
        R.exploit = run_exploit(cpu, sc.layout, epp);
        if (!R.exploit.success) {
          failing = R.exploit.failing_op;
          if (R.exploit.fault) {
            failing += std::string(" ") +
                       fault_kind_name(R.exploit.fault->kind);
          }
        }
      }
    }
  }

  // Step 5: survive a full checker window after the attack.
  if (auto r = pg_advance(pg, sc.layout, kPgMaxInterval + 1.0); !r) {
    R.patchguard_fired = true;
    R.patchguard_note = r.fault().to_string();
    failing = "patchguard Bugcheck";
  }
  R.total_seconds = pg.now;

  R.outcome.config = cfg;
  R.outcome.seed = seed;
  R.outcome.exploit_success = R.exploit.success && !R.patchguard_fired;
  R.outcome.failing_step = failing.empty() ? "none" : failing;
  R.scenario = std::move(sc);
  return R;
}

std::vector<AttackOutcome> outcome_matrix(const std::vector<uint64_t>& seeds,
                                          const EvalParams& ep) {
  std::vector<AttackOutcome> rows;
  for (int umip = 0; umip <= 1; ++umip) {
    for (int dte = 0; dte <= 1; ++dte) {
      for (int kaiser = 0; kaiser <= 1; ++kaiser) {
        for (int dual = 0; dual <= 1; ++dual) {
          MitigationConfig cfg;
          cfg.umip = umip;
          cfg.descriptor_table_exiting = dte;
          cfg.vmm_policy = dte ? VmmPolicy::Spoof : VmmPolicy::PassThrough;
          cfg.kaiser = kaiser;
          cfg.dual_gdt = dual;
          for (uint64_t seed : seeds) {
            rows.push_back(evaluate(cfg, seed, ep).outcome);
          }
        }
      }
    }
  }
  return rows;
}

}  // namespace gatesim
