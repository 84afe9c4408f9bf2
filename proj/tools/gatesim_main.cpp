// Command-line front end: generate layouts, trace probes, run the timing
// search, drive the full chain, and sweep the mitigation matrix.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gatesim/exploit.hpp"
#include "gatesim/hexfmt.hpp"
#include "gatesim/layout.hpp"
#include "gatesim/mitigation.hpp"
#include "gatesim/probe_kernel.hpp"
#include "gatesim/reports.hpp"
#include "gatesim/search.hpp"
#include "gatesim/timing.hpp"

namespace {

using namespace gatesim;

struct Opts {
  uint64_t seed = 1;
  int cores = 1;
  double sigma = 0.0;
  double contention = 0.0;
  double outlier_shift = 30.0;
  uint32_t samples = 16;
  std::string timer = "rdtscp";
  double rate = 10.0;
  bool umip = false;
  bool dte = false;
  std::string vmm = "passthrough";
  bool kaiser = false;
  bool dual = false;
  std::string dual_mode = "readonly";
  std::string out;
  std::string format;
  std::string kernel;  // scalar | avx2 | auto

  int core = 0;
  int workers = 1;
  bool fast = false;
  bool exhaustive = false;
  double threshold = kDefaultThreshold;
  std::vector<std::string> addrs;
  std::string candidates_file;
  std::string effect = "elevate-token";
  bool no_restore = false;
  std::string seeds = "1,2,3";
  std::string config_path;
};

void add_shared(CLI::App* cmd, Opts& o) {
  cmd->add_option("--seed", o.seed, "deterministic run seed");
  cmd->add_option("--cores", o.cores, "simulated cores")
      ->check(CLI::Range(1, 64));
  cmd->add_option("--noise-sigma", o.sigma, "gaussian noise stddev (cycles)");
  cmd->add_option("--contention-rate", o.contention,
                  "probability of a contention outlier per probe");
  cmd->add_option("--outlier-shift", o.outlier_shift,
                  "cycles added on contention");
  cmd->add_option("--samples", o.samples, "probes per address")
      ->check(CLI::Range(1u, 1u << 20));
  cmd->add_option("--timer", o.timer, "timer backend")
      ->check(CLI::IsMember({"rdtscp", "cpuid", "thread"}));
  cmd->add_option("--rate", o.rate, "candidate addresses per second");
  cmd->add_flag("--umip", o.umip, "enable cr4.umip");
  cmd->add_flag("--dte", o.dte, "enable descriptor-table exiting");
  cmd->add_option("--vmm", o.vmm, "vmm reply policy under --dte")
      ->check(CLI::IsMember({"passthrough", "spoof", "deny"}));
  cmd->add_flag("--kaiser", o.kaiser, "enable kernel page-table isolation");
  cmd->add_flag("--dual-gdt", o.dual, "enable the dual-GDT scheme");
  cmd->add_option("--dual-mode", o.dual_mode, "dual-GDT flavor")
      ->check(CLI::IsMember({"readonly", "swapped"}));
  cmd->add_option("--out", o.out, "write output to file instead of stdout");
  cmd->add_option("--format", o.format, "output format");
  cmd->add_option("--kernel", o.kernel, "sampling kernel")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  cmd->add_option("--config", o.config_path,
                  "flat key=value file; explicit flags override it");
}

// Expand a flat key=value config file into --key=value tokens inserted right
// after the subcommand name.  Explicit command-line options appear later in
// the argument list, so with take-last semantics they override the file.
bool inject_config_tokens(std::vector<std::string>& args, std::string* err) {
  static const char* kSubcommands[] = {"layout", "probe", "search", "exploit",
                                       "matrix"};
  size_t sub_idx = args.size();
  for (size_t i = 0; i < args.size() && sub_idx == args.size(); ++i) {
    for (const char* name : kSubcommands) {
      if (args[i] == name) sub_idx = i;
    }
  }
  if (sub_idx == args.size()) return true;  // no subcommand; parser will say so

  std::string path;
  for (size_t i = sub_idx + 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) {
        *err = "--config requires a file path";
        return false;
      }
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return true;

  std::ifstream f(path);
  if (!f) {
    *err = "cannot read config file " + path;
    return false;
  }
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    size_t b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    size_t e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
    if (key.empty()) {
      *err = path + ":" + std::to_string(lineno) + ": expected key=value";
      return false;
    }
    tokens.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  args.insert(args.begin() + static_cast<long>(sub_idx) + 1, tokens.begin(),
              tokens.end());
  return true;
}

TimerKind timer_kind(const Opts& o) {
  TimerKind k = TimerKind::RdtscpTsx;
  parse_timer_kind(o.timer, &k);
  return k;
}

VmmPolicy vmm_policy(const Opts& o) {
  if (o.vmm == "spoof") return VmmPolicy::Spoof;
  if (o.vmm == "deny") return VmmPolicy::Deny;
  return VmmPolicy::PassThrough;
}

MitigationConfig mitigation_config(const Opts& o) {
  MitigationConfig cfg;
  cfg.umip = o.umip;
  cfg.descriptor_table_exiting = o.dte;
  cfg.vmm_policy = vmm_policy(o);
  cfg.kaiser = o.kaiser;
  cfg.dual_gdt = o.dual;
  cfg.dual_mode = o.dual_mode == "swapped" ? DualGdtMode::SwappedGdtrOnly
                                           : DualGdtMode::ReadOnlyUserGdt;
  return cfg;
}

TimingConfig timing_config(const Opts& o) {
  TimingConfig tc;
  tc.seed = o.seed;
  tc.timer = TimerModel::make(timer_kind(o));
  tc.noise.sigma = o.sigma;
  tc.noise.contention_rate = o.contention;
  tc.noise.outlier_shift = o.outlier_shift;
  return tc;
}

SearchConfig search_config(const Opts& o) {
  SearchConfig sc;
  sc.seed = o.seed;
  sc.core = o.core;
  sc.samples = o.samples;
  sc.rate = o.rate;
  sc.workers = o.workers;
  sc.stop_on_first = !o.exhaustive;
  sc.fast = o.fast;
  sc.threshold = o.threshold;
  sc.timer = TimerModel::make(timer_kind(o));
  sc.noise.sigma = o.sigma;
  sc.noise.contention_rate = o.contention;
  sc.noise.outlier_shift = o.outlier_shift;
  sc.collect_candidates = !o.candidates_file.empty();
  return sc;
}

EvalParams eval_params(const Opts& o) {
  EvalParams ep;
  ep.cores = o.cores;
  ep.samples = o.samples;
  ep.rate = o.rate;
  ep.workers = o.workers;
  ep.fast = o.fast;
  ep.timer = TimerModel::make(timer_kind(o));
  ep.noise.sigma = o.sigma;
  ep.noise.contention_rate = o.contention;
  ep.noise.outlier_shift = o.outlier_shift;
  ep.threshold = o.threshold;
  ep.restore = !o.no_restore;
  if (o.effect == "marker") ep.effect = ShellcodeEffect::MarkerOnly;
  else if (o.effect == "clear-pt-supervisor")
    ep.effect = ShellcodeEffect::ClearPtSupervisor;
  else ep.effect = ShellcodeEffect::ElevateToken;
  return ep;
}

void apply_kernel_choice(const Opts& o) {
  if (o.kernel == "scalar") force_kernel(KernelIsa::Scalar);
  else if (o.kernel == "avx2") force_kernel(KernelIsa::Avx2);
}

int emit(const Opts& o, const std::string& text) {
  if (o.out.empty()) {
    std::fputs(text.c_str(), stdout);
    return 0;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) {
    std::fprintf(stderr, "error: cannot open %s\n", o.out.c_str());
    return 1;
  }
  f << text;
  return 0;
}

int cmd_layout(const Opts& o) {
  AddressSpaceLayout lay =
      generate_layout({o.seed, o.cores, o.kaiser});
  if (o.format == "text") return emit(o, layout_text(lay));
  return emit(o, layout_json(lay).dump(2) + "\n");
}

int cmd_probe(const Opts& o) {
  apply_kernel_choice(o);
  AddressSpaceLayout lay = generate_layout({o.seed, o.cores, o.kaiser});
  std::vector<uint64_t> addrs;
  for (const std::string& s : o.addrs) {
    auto v = parse_u64(s);
    if (!v) {
      std::fprintf(stderr, "error: bad address '%s'\n", s.c_str());
      return 1;
    }
    addrs.push_back(*v);
  }
  if (addrs.empty()) {
    // Default demo pair: the core-0 IDT page and an unmapped neighbor.
    addrs.push_back(lay.cores[0].idt_base);
    addrs.push_back(lay.cores[0].idt_base - 0x1000);
  }
  return emit(o, probe_csv(timing_config(o), lay, addrs, o.samples));
}

int cmd_search(const Opts& o) {
  apply_kernel_choice(o);
  AddressSpaceLayout lay = generate_layout({o.seed, o.cores, o.kaiser});
  SearchReport rep = run_search(lay, search_config(o));
  if (!o.candidates_file.empty()) {
    std::ofstream f(o.candidates_file, std::ios::binary);
    f << candidates_csv(rep);
  }
  return emit(o, search_json(rep).dump(2) + "\n");
}

int cmd_exploit(const Opts& o) {
  apply_kernel_choice(o);
  EvalResult R = evaluate(mitigation_config(o), o.seed, eval_params(o));
  return emit(o, exploit_json(R).dump(2) + "\n");
}

int cmd_matrix(const Opts& o) {
  apply_kernel_choice(o);
  std::vector<uint64_t> seeds;
  std::stringstream ss(o.seeds);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto v = parse_u64(item);
    if (!v) {
      std::fprintf(stderr, "error: bad seed '%s'\n", item.c_str());
      return 1;
    }
    seeds.push_back(*v);
  }
  if (seeds.empty()) seeds = {1, 2, 3};
  return emit(o, matrix_csv(outcome_matrix(seeds, eval_params(o))));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"call-gate privilege-escalation simulator"};
  app.require_subcommand(1);
  Opts o;

  CLI::App* layout = app.add_subcommand("layout", "generate an address-space layout");
  add_shared(layout, o);

  CLI::App* probe = app.add_subcommand("probe", "trace timing probes as CSV");
  add_shared(probe, o);
  probe->add_option("--addr", o.addrs, "addresses to probe (hex)");

  CLI::App* search = app.add_subcommand("search", "run the pattern search");
  add_shared(search, o);
  search->add_option("--core", o.core, "which core's pattern to hunt");
  search->add_option("--workers", o.workers, "parallel probe workers")
      ->check(CLI::Range(1, 256));
  search->add_flag("--fast", o.fast, "halve samples, double rate");
  search->add_flag("--exhaustive", o.exhaustive, "scan all candidates");
  search->add_option("--threshold", o.threshold, "mapped/unmapped cutoff");
  search->add_option("--candidates", o.candidates_file,
                     "write per-candidate CSV to this file");

  CLI::App* exploit = app.add_subcommand("exploit", "run the full chain");
  add_shared(exploit, o);
  exploit->add_option("--workers", o.workers, "parallel probe workers")
      ->check(CLI::Range(1, 256));
  exploit->add_flag("--fast", o.fast, "halve samples, double rate");
  exploit->add_option("--threshold", o.threshold, "mapped/unmapped cutoff");
  exploit->add_option("--effect", o.effect, "ring-0 payload")
      ->check(CLI::IsMember({"marker", "elevate-token", "clear-pt-supervisor"}));
  exploit->add_flag("--no-restore", o.no_restore,
                    "leave the planted gate in place");

  CLI::App* matrix = app.add_subcommand("matrix", "sweep mitigation combinations");
  add_shared(matrix, o);
  matrix->add_option("--seeds", o.seeds, "comma-separated seeds");
  matrix->add_option("--workers", o.workers, "parallel probe workers")
      ->check(CLI::Range(1, 256));
  matrix->add_flag("--fast", o.fast, "halve samples, double rate");
  matrix->add_option("--threshold", o.threshold, "mapped/unmapped cutoff");

  // Config-file values arrive as injected tokens ahead of the explicit ones;
  // take-last makes the explicit occurrence win.
  for (CLI::App* sub : {layout, probe, search, exploit, matrix}) {
    for (CLI::Option* opt : sub->get_options()) {
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_err;
  if (!inject_config_tokens(args, &config_err)) {
    std::fprintf(stderr, "error: %s\n", config_err.c_str());
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (layout->parsed()) return cmd_layout(o);
  if (probe->parsed()) return cmd_probe(o);
  if (search->parsed()) return cmd_search(o);
  if (exploit->parsed()) return cmd_exploit(o);
  if (matrix->parsed()) return cmd_matrix(o);
  return 0;
}
