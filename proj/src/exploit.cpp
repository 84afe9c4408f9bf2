#include "gatesim/exploit.hpp"

#include <cstring>

#include "gatesim/hexfmt.hpp"
#include "gatesim/rng.hpp"

namespace gatesim {

const char* shellcode_effect_name(ShellcodeEffect e) {
  switch (e) {
    case ShellcodeEffect::MarkerOnly: return "marker";
    case ShellcodeEffect::ElevateToken: return "elevate-token";
    case ShellcodeEffect::ClearPtSupervisor: return "clear-pt-supervisor";
  }
  return "?";
}

CallGateDescriptor attack_gate(uint64_t entry_point) {
  CallGateDescriptor g;
  g.mode = DescriptorMode::Long64;
  g.selector = kSelKernelCode;
  g.offset = entry_point;
  g.type = kTypeCallGate32;
  g.dpl = 3;
  g.present = true;
  return g;
}

Result<InstallRecord> install_gate(WwwPrimitive& www, uint64_t gdt_base,
                                   int slot, const CallGateDescriptor& gate) {
  InstallRecord rec;
  rec.slot = slot;
  rec.address = gdt_base + static_cast<uint64_t>(slot) * 8;
  const EncodedGate enc = encode(gate);
  rec.size = enc.size;
  rec.new_bytes = enc.bytes;
  auto old = www.lay->peek(rec.address, rec.size);
  std::memcpy(rec.old_bytes.data(), old.data(), rec.size);
  if (auto r = www.write(rec.address, enc.bytes.data(), enc.size); !r) {
    return r.fault();
  }
  return rec;
}

Result<void> restore_slots(WwwPrimitive& www, const InstallRecord& rec) {
  return www.write(rec.address, rec.old_bytes.data(), rec.size);
}

DescriptorTable fetch_table(const AddressSpaceLayout& lay, uint64_t base,
                            uint32_t limit, TableKind kind) {
  DescriptorTable t;
  t.kind = kind;
  t.base = base;
  t.bytes = lay.peek(base, static_cast<size_t>(limit) + 1);
  return t;
}

CpuCore make_cpu(const AddressSpaceLayout& lay, int core) {
  const CoreTables& ct = lay.cores[static_cast<size_t>(core)];
  CpuCore cpu;
  cpu.core_id = core;
  cpu.cpl = 3;
  cpu.mode = DescriptorMode::Long64;
  cpu.gdtr = {ct.gdt_base, 0xFFF};
  cpu.idtr = {ct.idt_base, 0xFFF};
  cpu.tr = kSelTss;
  cpu.ldtr = Selector(0);
  cpu.msr_lstar = lay.lstar;
  cpu.tss.ring[0] = {kSelKernelData, ct.tss_base + 0xE00};
  cpu.rip = kUserCodePage + 0x100;
  cpu.rsp = kUserStackPage + 0xF00;

  DescriptorTable gdt = fetch_table(lay, ct.gdt_base, 0xFFF, TableKind::Gdt);
  auto load = [&](SegmentRegister& reg, Selector sel) {
    auto e = gdt.lookup(sel, cpu.mode);
    if (e.ok() && e.value().kind == DecodedEntry::Kind::Segment) {
      reg.selector = sel;
      SegmentCache c;
      const auto& d = e.value().seg;
      c.base = d.base;
      c.limit = d.effective_limit();
      c.type = d.type;
      c.s = d.s;
      c.dpl = d.dpl;
      c.present = d.present;
      c.l = d.l;
      c.db = d.db;
      reg.cache = c;
    }
  };
  load(cpu.cs, kSelUserCode);
  load(cpu.ss, kSelUserData);
  load(cpu.ds, kSelUserData);
  load(cpu.es, kSelUserData);
  load(cpu.fs, kSelUserData);
  load(cpu.gs, kSelUserData);
  cpu.trace.clear();
  return cpu;
}

namespace {

// Ring-0 payload: a couple of kernel writes, exactly what real shellcode
// behind a gate would do.
Result<void> run_shellcode(CpuCore& cpu, AddressSpaceLayout& lay,
                           ShellcodeEffect effect) {
  switch (effect) {
    case ShellcodeEffect::MarkerOnly: {
      uint8_t b[4];
      std::memcpy(b, &kMarkerValue, 4);
      return lay.write_bytes(lay.scratch_page + kMarkerOffset, b, 4, cpu.cpl,
                             View::Kernel);
    }
    case ShellcodeEffect::ElevateToken: {
      uint8_t b[8];
      uint64_t v = kFullTokenPrivs;
      std::memcpy(b, &v, 8);
      return lay.write_bytes(lay.token_page + kTokenPrivOffset, b, 8, cpu.cpl,
                             View::Kernel);
    }
    case ShellcodeEffect::ClearPtSupervisor: {
      // Rewrite the PTE for the token page with the U/S bit clear, then
      // reflect the new permission in the page map.
      uint64_t pte = lay.token_page | 0x7;  // present | rw | user
      uint8_t b[8];
      std::memcpy(b, &pte, 8);
      auto r = lay.write_bytes(lay.pt_region + kPtePatchOffset, b, 8, cpu.cpl,
                               View::Kernel);
      if (!r) return r;
      if (PageFlags* f = lay.page_flags_mut(lay.token_page)) {
        f->supervisor = false;
        f->in_user = true;
      }
      return {};
    }
  }
  return {};
}

}  // namespace

ExploitOutcome run_exploit(CpuCore& cpu, AddressSpaceLayout& lay,
                           const ExploitParams& ep) {
  ExploitOutcome out;
  out.cpl_trace.push_back(cpu.cpl);

  const bool swap_mode = ep.dual && ep.dual->mode == DualGdtMode::SwappedGdtrOnly;
  // Hardware resolves the far call from the table GDTR points at during the
  // transition: the kernel table under a swapped dual-GDT scheme, otherwise
  // whatever the user-visible GDTR says.
  uint64_t resolve_base = cpu.gdtr.base;
  if (swap_mode) {
    resolve_base = ep.dual->kernel_base[static_cast<size_t>(cpu.core_id)];
  }
  DescriptorTable gdt = fetch_table(lay, resolve_base, cpu.gdtr.limit,
                                    TableKind::Gdt);

  if (auto r = far_call_through_gate(cpu, gdt, ep.gate_selector); !r) {
    out.fault = r.fault();
    out.failing_op = "far_call";
    out.cpl_trace.push_back(cpu.cpl);
    out.gdt_restored = false;
    return out;
  }
  out.cpl_trace.push_back(cpu.cpl);

  // Ring 0: the OS side of a dual-GDT scheme reloads GDTR on entry.
  const uint64_t user_gdtr = cpu.gdtr.base;
  if (ep.dual) {
    cpu.gdtr.base = ep.dual->kernel_base[static_cast<size_t>(cpu.core_id)];
  }

  if (auto r = run_shellcode(cpu, lay, ep.effect); r.ok()) {
    out.effects_applied.push_back(ep.effect);
  } else {
    out.fault = r.fault();
    out.failing_op = "shellcode";
  }

  if (ep.restore && ep.install && !out.fault) {
    WwwPrimitive kernel_writer{&lay, cpu.cpl, View::Kernel};
    if (auto r = restore_slots(kernel_writer, *ep.install); !r) {
      out.fault = r.fault();
      out.failing_op = "restore";
    }
  }

  // Return path resolves from the table active at ring 0.
  DescriptorTable ret_gdt =
      fetch_table(lay, cpu.gdtr.base, cpu.gdtr.limit, TableKind::Gdt);
  if (auto r = far_return(cpu, ret_gdt); !r) {
    if (!out.fault) {
      out.fault = r.fault();
      out.failing_op = "far_return";
    }
    out.cpl_trace.push_back(cpu.cpl);
    return out;
  }
  if (ep.dual) {
    cpu.gdtr.base = user_gdtr;  // back to the user-visible table
  }
  out.cpl_trace.push_back(cpu.cpl);

  if (ep.install) {
    auto cur = lay.peek(ep.install->address, ep.install->size);
    out.gdt_restored = std::memcmp(cur.data(), ep.install->old_bytes.data(),
                                   ep.install->size) == 0;
  } else {
    out.gdt_restored = true;
  }
  out.success = !out.fault && cpu.cpl == 3 &&
                out.cpl_trace.size() >= 3 && out.cpl_trace[1] == 0;
  return out;
}

PatchGuard arm_patchguard(const AddressSpaceLayout& lay, uint64_t gdt_base,
                          double now, uint64_t seed) {
  PatchGuard pg;
  pg.guarded_base = gdt_base;
  pg.snapshot = lay.peek(gdt_base, kPageSize);
  pg.now = now;
  pg.stream = substream(seed, kTagPatchGuard);
  pg.draws = 0;
  const double u = to_unit(mix64(pg.stream + ++pg.draws));
  pg.next_check = now + kPgMinInterval + u * (kPgMaxInterval - kPgMinInterval);
  return pg;
}

Result<void> pg_advance(PatchGuard& pg, const AddressSpaceLayout& lay,
                        double dt) {
  if (pg.fired) return Fault::bugcheck("integrity check already fired");
  const double target = pg.now + dt;
  while (pg.next_check <= target) {
    pg.now = pg.next_check;
    auto cur = lay.peek(pg.guarded_base, kPageSize);
    if (cur != pg.snapshot) {
      pg.fired = true;
      return Fault::bugcheck("guarded table at " + hex16(pg.guarded_base) +
                             " modified");
    }
    const double u = to_unit(mix64(pg.stream + ++pg.draws));
    pg.next_check =
        pg.now + kPgMinInterval + u * (kPgMaxInterval - kPgMinInterval);
  }
  pg.now = target;
  return {};
}

}  // namespace gatesim
