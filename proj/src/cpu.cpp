#include "gatesim/cpu.hpp"

#include <algorithm>
#include <cstdarg>
#include <cstdio>

namespace gatesim {

namespace {

std::string fmts(const char* fmt, ...) {
  char buf[160];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

SegmentCache cache_from(const SegmentDescriptor& d) {
  SegmentCache c;
  c.base = d.base;
  c.limit = d.effective_limit();
  c.type = d.type;
  c.s = d.s;
  c.dpl = d.dpl;
  c.present = d.present;
  c.l = d.l;
  c.db = d.db;
  return c;
}

void trace_op(CpuCore& cpu, const char* op, int before,
              const Result<void>& r) {
  TraceEvent ev;
  ev.op = op;
  ev.cpl_before = before;
  ev.cpl_after = cpu.cpl;
  if (!r.ok()) {
    ev.faulted = true;
    ev.fault = r.fault().to_string();
  }
  cpu.trace.push_back(std::move(ev));
}

struct TraceScope {
  CpuCore& cpu;
  const char* op;
  int before;
  TraceScope(CpuCore& c, const char* o) : cpu(c), op(o), before(c.cpl) {}
  Result<void> done(Result<void> r) {
    trace_op(cpu, op, before, r);
    return r;
  }
};

}  // namespace

Result<void> load_data_segment(CpuCore& cpu, const DescriptorTable& table,
                               SegmentRegister& reg, Selector sel) {
  TraceScope t(cpu, "mov_seg");
  if (sel.is_null()) {
    // Null is legal for data segments; any use faults later.
    reg.selector = sel;
    reg.cache = SegmentCache{};
    return t.done({});
  }
  auto e = table.lookup(sel, cpu.mode);
  if (!e) return t.done(e.fault());
  const auto& d = e.value().seg;
  if (e.value().kind != DecodedEntry::Kind::Segment ||
      !(d.is_data() || d.code_readable())) {
    return t.done(Fault::gp(
        fmts("selector 0x%04x is not a data or readable code segment", sel.raw)));
  }
  const int epl = cpu.cpl > sel.rpl() ? cpu.cpl : sel.rpl();
  if (!d.conforming() && d.dpl < epl) {
    return t.done(Fault::gp(fmts("dpl %u below max(cpl %d, rpl %u)", d.dpl,
                                 cpu.cpl, sel.rpl())));
  }
  if (!d.present) {
    return t.done(Fault::gp(fmts("segment 0x%04x not present", sel.raw)));
  }
  reg.selector = sel;
  reg.cache = cache_from(d);
  return t.done({});
}

Result<void> load_stack_segment(CpuCore& cpu, const DescriptorTable& table,
                                Selector sel) {
  TraceScope t(cpu, "mov_ss");
  if (sel.is_null()) return t.done(Fault::gp("null stack selector"));
  auto e = table.lookup(sel, cpu.mode);
  if (!e) return t.done(e.fault());
  const auto& d = e.value().seg;
  if (e.value().kind != DecodedEntry::Kind::Segment || !d.data_writable()) {
    return t.done(
        Fault::gp(fmts("selector 0x%04x is not writable data", sel.raw)));
  }
  if (sel.rpl() != cpu.cpl || d.dpl != cpu.cpl) {
    return t.done(Fault::gp(fmts("stack rpl %u / dpl %u must equal cpl %d",
                                 sel.rpl(), d.dpl, cpu.cpl)));
  }
  if (!d.present) {
    return t.done(Fault::gp(fmts("stack segment 0x%04x not present", sel.raw)));
  }
  cpu.ss.selector = sel;
  cpu.ss.cache = cache_from(d);
  return t.done({});
}

Result<void> far_jump_code(CpuCore& cpu, const DescriptorTable& gdt,
                           Selector sel, uint64_t offset) {
  TraceScope t(cpu, "far_jmp");
  auto e = gdt.lookup(sel, cpu.mode);
  if (!e) return t.done(e.fault());
  const auto& d = e.value().seg;
  if (e.value().kind != DecodedEntry::Kind::Segment || !d.is_code()) {
    return t.done(
        Fault::gp(fmts("far jmp target 0x%04x is not code", sel.raw)));
  }
  if (d.conforming()) {
    // Conforming code accepts callers at or below its privilege and runs at
    // the caller's level.
    if (d.dpl > cpu.cpl) {
      return t.done(
          Fault::gp(fmts("conforming dpl %u above cpl %d", d.dpl, cpu.cpl)));
    }
  } else {
    if (sel.rpl() > cpu.cpl || d.dpl != cpu.cpl) {
      return t.done(Fault::gp(
          fmts("nonconforming target needs dpl == cpl (dpl %u, cpl %d, rpl %u)",
               d.dpl, cpu.cpl, sel.rpl())));
    }
  }
  if (!d.present) {
    return t.done(Fault::gp(fmts("code segment 0x%04x not present", sel.raw)));
  }
  cpu.cs.selector =
      Selector(static_cast<uint16_t>((sel.raw & ~0x3u) | cpu.cpl));
  cpu.cs.cache = cache_from(d);
  cpu.rip = offset;
  return t.done({});
}

Result<void> far_call_through_gate(CpuCore& cpu, const DescriptorTable& gdt,
                                   Selector gate_sel) {
  TraceScope t(cpu, "far_call");
  auto ge = gdt.lookup(gate_sel, cpu.mode);
  if (!ge) return t.done(ge.fault());
  const DecodedEntry& entry = ge.value();
  switch (entry.kind) {
    case DecodedEntry::Kind::CallGate:
      break;
    case DecodedEntry::Kind::Null:
      return t.done(
          Fault::gp(fmts("selector 0x%04x references an empty slot", gate_sel.raw)));
    case DecodedEntry::Kind::Reserved:
      return t.done(Fault::gp(fmts("reserved descriptor type 0x%x",
                                   entry.seg.type)));
    case DecodedEntry::Kind::OtherGate:
      return t.done(Fault::gp(
          fmts("gate type 0x%x not callable from call far", entry.gate.type)));
    default:
      return t.done(Fault::gp(
          fmts("selector 0x%04x is not a call gate", gate_sel.raw)));
  }
  const CallGateDescriptor& gate = entry.gate;
  if (!gate.present) {
    return t.done(Fault::gp(fmts("call gate 0x%04x not present", gate_sel.raw)));
  }
  // Gate access: both CPL and RPL must be at or above (numerically <=) the
  // gate's DPL.
  const int epl = cpu.cpl > gate_sel.rpl() ? cpu.cpl : gate_sel.rpl();
  if (epl > gate.dpl) {
    return t.done(Fault::gp(
        fmts("gate dpl %u below max(cpl %d, rpl %u)", gate.dpl, cpu.cpl,
             gate_sel.rpl())));
  }
  if (gate.selector.is_null()) {
    return t.done(Fault::gp("gate target selector is null"));
  }
  auto te = gdt.lookup(gate.selector, cpu.mode);
  if (!te) return t.done(te.fault());
  const auto& target = te.value().seg;
  if (te.value().kind != DecodedEntry::Kind::Segment || !target.is_code()) {
    return t.done(Fault::gp(
        fmts("gate target 0x%04x is not code", gate.selector.raw)));
  }
  if (cpu.mode == DescriptorMode::Long64 && !target.l) {
    return t.done(Fault::gp(
        fmts("gate target 0x%04x is not 64-bit code", gate.selector.raw)));
  }
  if (target.dpl > cpu.cpl) {
    // A gate may lead inward or sideways, never outward.
    return t.done(
        Fault::gp(fmts("gate target dpl %u above cpl %d", target.dpl, cpu.cpl)));
  }
  if (!target.present) {
    return t.done(Fault::gp(
        fmts("gate target 0x%04x not present", gate.selector.raw)));
  }

  const bool inward = !target.conforming() && target.dpl < cpu.cpl;
  const int new_cpl = target.conforming() ? cpu.cpl : target.dpl;

  SegmentRegister new_ss = cpu.ss;
  uint64_t new_rsp = cpu.rsp;
  if (inward) {
    const Tss::RingStack& rs = cpu.tss.ring[new_cpl];
    auto se = gdt.lookup(rs.ss, cpu.mode);
    if (!se) return t.done(se.fault());
    const auto& sd = se.value().seg;
    if (se.value().kind != DecodedEntry::Kind::Segment ||
        !sd.data_writable() || sd.dpl != new_cpl || !sd.present) {
      return t.done(Fault::gp(
          fmts("tss ring-%d stack selector 0x%04x invalid", new_cpl, rs.ss.raw)));
    }
    new_ss.selector = rs.ss;
    new_ss.cache = cache_from(sd);
    new_rsp = rs.sp;
  }

  // All checks passed: commit.
  const uint64_t old_ss = cpu.ss.selector.raw;
  const uint64_t old_rsp = cpu.rsp;
  const uint64_t old_cs = cpu.cs.selector.raw;
  const uint64_t old_rip = cpu.rip;
  if (inward) {
    // Legacy gates copy the caller's parameters to the new stack.
    std::vector<uint64_t> params;
    if (cpu.mode == DescriptorMode::Legacy32 && gate.param_count > 0) {
      size_t n = std::min<size_t>(gate.param_count, cpu.stack.size());
      params.assign(cpu.stack.end() - n, cpu.stack.end());
    }
    cpu.ss = new_ss;
    cpu.rsp = new_rsp;
    cpu.stack.push_back(old_ss);
    cpu.stack.push_back(old_rsp);
    for (uint64_t p : params) cpu.stack.push_back(p);
  }
  cpu.stack.push_back(old_cs);
  cpu.stack.push_back(old_rip);
  cpu.cpl = new_cpl;
  cpu.cs.selector =
      Selector(static_cast<uint16_t>((gate.selector.raw & ~0x3u) | new_cpl));
  cpu.cs.cache = cache_from(target);
  cpu.rip = cpu.mode == DescriptorMode::Long64 ? gate.offset
                                               : (gate.offset & 0xFFFFFFFFull);
  return t.done({});
}

Result<void> far_return(CpuCore& cpu, const DescriptorTable& gdt,
                        uint16_t pop_bytes) {
  TraceScope t(cpu, "far_return");
  if (cpu.stack.size() < 2) {
    return t.done(Fault::gp("return frame underflow"));
  }
  const uint64_t new_rip = cpu.stack[cpu.stack.size() - 1];
  const Selector new_cs(static_cast<uint16_t>(cpu.stack[cpu.stack.size() - 2]));
  const int new_rpl = new_cs.rpl();
  if (new_rpl < cpu.cpl) {
    return t.done(Fault::gp(
        fmts("far return to inner ring (rpl %u < cpl %d)", new_rpl, cpu.cpl)));
  }
  auto ce = gdt.lookup(new_cs, cpu.mode);
  if (!ce) return t.done(ce.fault());
  const auto& cd = ce.value().seg;
  if (ce.value().kind != DecodedEntry::Kind::Segment || !cd.is_code()) {
    return t.done(
        Fault::gp(fmts("return cs 0x%04x is not code", new_cs.raw)));
  }
  if (cd.conforming() ? cd.dpl > new_rpl : cd.dpl != new_rpl) {
    return t.done(Fault::gp(
        fmts("return cs dpl %u incompatible with rpl %d", cd.dpl, new_rpl)));
  }
  if (!cd.present) {
    return t.done(Fault::gp(fmts("return cs 0x%04x not present", new_cs.raw)));
  }

  if (new_rpl == cpu.cpl) {
    cpu.stack.resize(cpu.stack.size() - 2);
    for (unsigned i = 0; i < pop_bytes / 8u && !cpu.stack.empty(); ++i) {
      cpu.stack.pop_back();
    }
    cpu.cs.selector = new_cs;
    cpu.cs.cache = cache_from(cd);
    cpu.rip = new_rip;
    return t.done({});
  }

  // Outward return: gate parameters sit between the CS:IP and SS:SP pairs.
  size_t need = 2 + pop_bytes / 8u + 2;
  if (cpu.stack.size() < need) {
    return t.done(Fault::gp("return frame underflow (outer frame)"));
  }
  size_t idx = cpu.stack.size() - 2 - pop_bytes / 8u;
  const uint64_t new_rsp = cpu.stack[idx - 1];
  const Selector new_ss(static_cast<uint16_t>(cpu.stack[idx - 2]));
  auto se = gdt.lookup(new_ss, cpu.mode);
  if (!se) return t.done(se.fault());
  const auto& sd = se.value().seg;
  if (se.value().kind != DecodedEntry::Kind::Segment || !sd.data_writable() ||
      sd.dpl != new_rpl || !sd.present) {
    return t.done(
        Fault::gp(fmts("return ss 0x%04x invalid for rpl %d", new_ss.raw, new_rpl)));
  }

  cpu.stack.resize(idx - 2);
  cpu.cpl = new_rpl;
  cpu.cs.selector = new_cs;
  cpu.cs.cache = cache_from(cd);
  cpu.rip = new_rip;
  cpu.ss.selector = new_ss;
  cpu.ss.cache = cache_from(sd);
  cpu.rsp = new_rsp;
  // Data segments cached at higher privilege are flushed on the way out.
  for (SegmentRegister* r : {&cpu.ds, &cpu.es, &cpu.fs, &cpu.gs}) {
    const bool conf = (r->cache.type & 0x8) && (r->cache.type & 0x4);
    if (r->cache.s && !conf && r->cache.dpl < new_rpl) {
      r->selector = Selector(0);
      r->cache = SegmentCache{};
    }
  }
  return t.done({});
}

StoreValue store_raw(const CpuCore& cpu, StoreInstr which) {
  switch (which) {
    case StoreInstr::Sgdt: return cpu.gdtr;
    case StoreInstr::Sidt: return cpu.idtr;
    case StoreInstr::Sldt: return cpu.ldtr.raw;
    case StoreInstr::Str: return cpu.tr.raw;
    case StoreInstr::Smsw: return static_cast<uint16_t>(0x33);  // CR0 low word
  }
  return static_cast<uint16_t>(0);
}

Result<StoreValue> exec_store_instruction(CpuCore& cpu, StoreInstr which,
                                          const MitigationConfig& cfg) {
  const char* name = store_instr_name(which);
  TraceScope t(cpu, name);
  if (cpu.cpl > 0 && cpu.umip()) {
    auto f = Fault::gp(fmts("%s blocked by umip at cpl %d", name, cpu.cpl));
    (void)t.done(f);
    return f;
  }
  if (cfg.descriptor_table_exiting) {
    auto f = Fault::vmexit(name);
    (void)t.done(f);
    return f;
  }
  (void)t.done({});
  return store_raw(cpu, which);
}

Result<void> exec_load_table_instruction(CpuCore& cpu, LoadInstr which,
                                         LoadValue value,
                                         const MitigationConfig& cfg) {
  const char* name = load_instr_name(which);
  TraceScope t(cpu, name);
  if (cpu.cpl > 0) {
    return t.done(
        Fault::gp(fmts("%s is privileged (cpl %d)", name, cpu.cpl)));
  }
  if (cfg.descriptor_table_exiting) {
    return t.done(Fault::vmexit(name));
  }
  switch (which) {
    case LoadInstr::Lgdt:
      cpu.gdtr = std::get<TableRegister>(value);
      break;
    case LoadInstr::Lidt:
      cpu.idtr = std::get<TableRegister>(value);
      break;
    case LoadInstr::Lldt:
      cpu.ldtr = std::get<Selector>(value);
      break;
    case LoadInstr::Ltr:
      cpu.tr = std::get<Selector>(value);
      break;
  }
  return t.done({});
}

}  // namespace gatesim
