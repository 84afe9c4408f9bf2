#include "gatesim/reports.hpp"

#include <cmath>

#include "gatesim/descriptor_table.hpp"
#include "gatesim/hexfmt.hpp"

namespace gatesim {

namespace {

std::string low_const_hex(uint8_t v) {
  char buf[3];
  std::snprintf(buf, sizeof buf, "%02x", v);
  return buf;
}

std::string bytes_hex(const uint8_t* p, size_t n) {
  std::string out;
  for (size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += hex_byte(p[i]);
  }
  return out;
}

}  // namespace

ojson layout_json(const AddressSpaceLayout& lay) {
  ojson j;
  j["seed"] = lay.params.seed;
  ojson cores = ojson::array();
  for (const CoreTables& ct : lay.cores) {
    ojson c;
    c["idt"] = hex16(ct.idt_base);
    c["gdt"] = hex16(ct.gdt_base);
    c["low_const"] = low_const_hex(ct.low_const);
    cores.push_back(std::move(c));
  }
  j["cores"] = std::move(cores);
  j["lstar"] = hex16(lay.lstar);
  j["pt_region"] = hex16(lay.pt_region);
  ojson stubs = ojson::array();
  for (uint64_t s : lay.stub_pages) stubs.push_back(hex16(s));
  j["stubs"] = std::move(stubs);
  return j;
}

std::string layout_text(const AddressSpaceLayout& lay) {
  std::string out;
  out += "seed " + std::to_string(lay.params.seed) + ", cores " +
         std::to_string(lay.cores.size()) + ", isolation " +
         (lay.params.kaiser ? "on" : "off") + "\n";
  for (size_t c = 0; c < lay.cores.size(); ++c) {
    const CoreTables& ct = lay.cores[c];
    out += "core " + std::to_string(c) + ": idt " + hex16(ct.idt_base) +
           "  gdt " + hex16(ct.gdt_base) + "  low_const " +
           low_const_hex(ct.low_const) + "\n";
  }
  out += "lstar " + hex16(lay.lstar) + "\n";
  out += "pt_region " + hex16(lay.pt_region) + "\n";
  out += "stubs";
  for (uint64_t s : lay.stub_pages) out += " " + hex16(s);
  out += "\n";
  const CoreTables& c0 = lay.cores[0];
  out += "gdt[0] slots 0-7:\n";
  auto gdt = lay.peek(c0.gdt_base, 64);
  out += hex_dump(c0.gdt_base, gdt.data(), gdt.size());
  out += "idt[0] vectors 0-3:\n";
  auto idt = lay.peek(c0.idt_base, 64);
  out += hex_dump(c0.idt_base, idt.data(), idt.size());
  return out;
}

std::string probe_csv(const TimingConfig& cfg, const AddressSpaceLayout& lay,
                      const std::vector<uint64_t>& addrs, uint32_t n_samples) {
  std::string out = "address,sample_index,cycles\n";
  char line[80];
  for (uint64_t a : addrs) {
    auto samples = probe_trace(cfg, lay, a, View::User, n_samples);
    for (uint32_t k = 0; k < samples.size(); ++k) {
      std::snprintf(line, sizeof line, "%s,%u,%.1f\n", hex16(a).c_str(), k,
                    samples[k]);
      out += line;
    }
  }
  return out;
}

ojson search_json(const SearchReport& rep) {
  ojson j;
  j["core"] = rep.core;
  if (rep.found) {
    j["idt"] = hex16(rep.idt);
    j["gdt"] = hex16(rep.gdt);
  } else {
    j["idt"] = nullptr;
    j["gdt"] = nullptr;
  }
  j["candidates_probed"] = rep.candidates_probed;
  j["simulated_seconds"] = round1(rep.simulated_seconds);
  j["rate"] = rep.rate;
  j["found"] = rep.found;
  j["samples"] = rep.samples;
  j["workers"] = rep.workers;
  j["worker_probes"] = rep.worker_probes;
  j["confirmation_probes"] = rep.confirmation_probes;
  return j;
}

std::string candidates_csv(const SearchReport& rep) {
  std::string out = "address,statistic,class\n";
  char line[80];
  for (const CandidateRecord& r : rep.candidates) {
    std::snprintf(line, sizeof line, "%s,%.4f,%s\n", hex16(r.address).c_str(),
                  r.statistic, r.mapped ? "mapped" : "unmapped");
    out += line;
  }
  return out;
}

ojson exploit_json(const EvalResult& R) {
  ojson j;
  j["seed"] = R.seed;
  ojson cfg;
  cfg["umip"] = R.config.umip;
  cfg["descriptor_table_exiting"] = R.config.descriptor_table_exiting;
  cfg["vmm_policy"] = vmm_policy_name(R.config.vmm_policy);
  cfg["kaiser"] = R.config.kaiser;
  cfg["dual_gdt"] = R.config.dual_gdt;
  cfg["dual_mode"] = R.config.dual_mode == DualGdtMode::ReadOnlyUserGdt
                         ? "readonly-user"
                         : "swapped-gdtr";
  j["config"] = std::move(cfg);
  ojson sg;
  sg["observed"] = R.sgdt_observed;
  sg["truth"] = R.outcome.sgdt_truth;
  j["sgdt"] = std::move(sg);
  j["search"] = search_json(R.search);
  if (R.install) {
    ojson ins;
    ins["address"] = hex16(R.install->address);
    ins["slot"] = R.install->slot;
    ins["old_bytes"] = bytes_hex(R.install->old_bytes.data(), R.install->size);
    ins["new_bytes"] = bytes_hex(R.install->new_bytes.data(), R.install->size);
    j["install"] = std::move(ins);
  } else {
    j["install"] = nullptr;
  }
  ojson ex;
  ex["success"] = R.exploit.success;
  ex["cpl_trace"] = R.exploit.cpl_trace;
  if (R.exploit.fault) {
    ex["fault"] = R.exploit.fault->to_string();
    ex["failing_op"] = R.exploit.failing_op;
  } else {
    ex["fault"] = nullptr;
    ex["failing_op"] = nullptr;
  }
  ojson effects = ojson::array();
  for (ShellcodeEffect e : R.exploit.effects_applied) {
    effects.push_back(shellcode_effect_name(e));
  }
  ex["effects"] = std::move(effects);
  ex["gdt_restored"] = R.exploit.gdt_restored;
  ex["simulated_time"] = round1(R.total_seconds);
  j["exploit"] = std::move(ex);
  ojson pg;
  pg["fired"] = R.patchguard_fired;
  pg["note"] = R.patchguard_note;
  j["patchguard"] = std::move(pg);
  j["total_seconds"] = round1(R.total_seconds);
  ojson oc;
  oc["address_found"] = R.outcome.address_found;
  oc["sgdt_truth"] = R.outcome.sgdt_truth;
  oc["exploit_success"] = R.outcome.exploit_success;
  oc["failing_step"] = R.outcome.failing_step;
  j["outcome"] = std::move(oc);
  return j;
}

std::string matrix_csv(const std::vector<AttackOutcome>& rows) {
  std::string out =
      "umip,dte,vmm_policy,kaiser,dual_gdt,seed,address_found,sgdt_truth,"
      "exploit_success,failing_step\n";
  char line[160];
  for (const AttackOutcome& r : rows) {
    std::snprintf(line, sizeof line, "%d,%d,%s,%d,%d,%llu,%d,%d,%d,%s\n",
                  r.config.umip ? 1 : 0,
                  r.config.descriptor_table_exiting ? 1 : 0,
                  vmm_policy_name(r.config.vmm_policy),
                  r.config.kaiser ? 1 : 0, r.config.dual_gdt ? 1 : 0,
                  static_cast<unsigned long long>(r.seed),
                  r.address_found ? 1 : 0, r.sgdt_truth ? 1 : 0,
                  r.exploit_success ? 1 : 0, r.failing_step.c_str());
    out += line;
  }
  return out;
}

}  // namespace gatesim
