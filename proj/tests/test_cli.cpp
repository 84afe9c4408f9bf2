// End-to-end checks of the command-line binary: every subcommand is run as a
// child process and judged on exit code and captured output.
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

using njson = nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string temp_path(const char* tag) {
  static int counter = 0;
  return "/tmp/gatesim_cli_" + std::to_string(::getpid()) + "_" + tag + "_" +
         std::to_string(counter++);
}

RunResult run_cli(const std::string& args) {
  RunResult r;
  const std::string out = temp_path("out"), err = temp_path("err");
  const std::string cmd =
      std::string(GATESIM_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
  int status = std::system(cmd.c_str());
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  std::remove(out.c_str());
  std::remove(err.c_str());
  return r;
}

}  // namespace

TEST_CASE("every subcommand is byte-for-byte reproducible") {
  const char* invocations[] = {
      "layout --seed 5 --cores 2",
      "probe --seed 5 --samples 3 --noise-sigma 2 --contention-rate 0.2",
      "search --seed 2955 --samples 2 --noise-sigma 1.5",
      "exploit --seed 1 --samples 2",
      "matrix --seeds 1 --samples 2",
  };
  for (const char* inv : invocations) {
    CAPTURE(inv);
    RunResult a = run_cli(inv);
    RunResult b = run_cli(inv);
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(!a.out.empty());
  }
}

TEST_CASE("layout emits the documented JSON and honors --cores") {
  RunResult r = run_cli("layout --seed 9 --cores 4");
  REQUIRE(r.exit_code == 0);
  njson j = njson::parse(r.out);
  CHECK(j["seed"] == 9);
  REQUIRE(j["cores"].size() == 4);
  for (const auto& c : j["cores"]) {
    uint64_t idt = std::stoull(c["idt"].get<std::string>(), nullptr, 16);
    uint64_t gdt = std::stoull(c["gdt"].get<std::string>(), nullptr, 16);
    CHECK(gdt - idt == 0x2000);
    CHECK(c["idt"].get<std::string>().size() == 16);
  }
  CHECK(j.contains("lstar"));
  CHECK(j.contains("pt_region"));
  CHECK(j.contains("stubs"));

  RunResult t = run_cli("layout --seed 9 --format text");
  REQUIRE(t.exit_code == 0);
  CHECK(t.out.find("core 0: idt fffff8") != std::string::npos);
  CHECK(t.out.find("gdt[0] slots 0-7:") != std::string::npos);
}

TEST_CASE("probe defaults to a mapped/unmapped demo pair") {
  RunResult r = run_cli("probe --seed 3 --samples 5");
  REQUIRE(r.exit_code == 0);
  std::istringstream in(r.out);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "address,sample_index,cycles");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * 5);
}

TEST_CASE("search over a planted layout reports the known tables") {
  RunResult r = run_cli("search --seed 2955 --samples 2");
  REQUIRE(r.exit_code == 0);
  njson j = njson::parse(r.out);
  CHECK(j["found"] == true);
  CHECK(j["idt"] == "fffff8036385b000");
  CHECK(j["gdt"] == "fffff8036385d000");
  CHECK(j["core"] == 0);

  RunResult x = run_cli("search --seed 2955 --samples 1 --exhaustive --workers 8");
  REQUIRE(x.exit_code == 0);
  njson jx = njson::parse(x.out);
  CHECK(jx["candidates_probed"] == 65536);
  CHECK(jx["simulated_seconds"] == 819.2);
}

TEST_CASE("search writes the per-candidate table on request") {
  const std::string csv = temp_path("cand");
  RunResult r = run_cli("search --seed 2955 --samples 2 --candidates " + csv);
  REQUIRE(r.exit_code == 0);
  std::string body = slurp(csv);
  std::remove(csv.c_str());
  CHECK(body.rfind("address,statistic,class\n", 0) == 0);
  CHECK(body.find(",mapped\n") != std::string::npos);
  CHECK(body.find(",unmapped\n") != std::string::npos);
}

TEST_CASE("exploit succeeds end to end and reports the ring trip") {
  RunResult r = run_cli("exploit --seed 1 --samples 2 --effect marker");
  REQUIRE(r.exit_code == 0);
  njson j = njson::parse(r.out);
  CHECK(j["exploit"]["success"] == true);
  CHECK(j["exploit"]["cpl_trace"] == njson::array({3, 0, 3}));
  CHECK(j["exploit"]["gdt_restored"] == true);
  CHECK(j["exploit"]["effects"] == njson::array({"marker"}));
  CHECK(j["outcome"]["failing_step"] == "none");
}

TEST_CASE("a defeated attack is still a clean process exit") {
  RunResult r = run_cli("exploit --seed 1 --samples 2 --dual-gdt");
  REQUIRE(r.exit_code == 0);  // the tool worked; the attacker failed
  njson j = njson::parse(r.out);
  CHECK(j["outcome"]["exploit_success"] == false);
  CHECK(j["outcome"]["failing_step"] == "install_gate PageFault");
  CHECK(j["outcome"]["address_found"] == true);

  RunResult s = run_cli("exploit --seed 1 --samples 2 --dual-gdt --dual-mode swapped");
  REQUIRE(s.exit_code == 0);
  njson js = njson::parse(s.out);
  CHECK(js["outcome"]["exploit_success"] == false);
  std::string step = js["outcome"]["failing_step"].get<std::string>();
  CHECK(step.rfind("far_call GeneralProtection", 0) == 0);
}

TEST_CASE("matrix prints the full grid for the given seeds") {
  RunResult r = run_cli("matrix --seeds 1 --samples 2");
  REQUIRE(r.exit_code == 0);
  std::istringstream in(r.out);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "umip,dte,vmm_policy,kaiser,dual_gdt,seed,address_found,sgdt_truth,"
        "exploit_success,failing_step");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 16);
}

TEST_CASE("bad inputs are usage errors, not crashes") {
  CHECK(run_cli("layout --cores 0").exit_code != 0);
  CHECK(run_cli("probe --samples 0").exit_code != 0);
  CHECK(run_cli("search --workers 0").exit_code != 0);
  CHECK(run_cli("probe --timer sundial").exit_code != 0);
  CHECK(run_cli("exploit --effect rootkit").exit_code != 0);
  CHECK(run_cli("teleport").exit_code != 0);
  CHECK(run_cli("").exit_code != 0);  // a subcommand is required

  RunResult bad = run_cli("probe --addr zz --samples 1");
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("bad address") != std::string::npos);
}

TEST_CASE("--out routes the artifact to a file and keeps stdout quiet") {
  const std::string path = temp_path("layout");
  RunResult r = run_cli("layout --seed 7 --out " + path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.empty());
  njson j = njson::parse(slurp(path));
  std::remove(path.c_str());
  CHECK(j["seed"] == 7);
}

TEST_CASE("config files feed defaults; explicit flags win") {
  const std::string cfg = temp_path("cfg");
  {
    std::ofstream f(cfg);
    f << "seed=2955\n"
      << "samples=4\n"
      << "noise-sigma=0\n";
  }
  RunResult r = run_cli("search --config " + cfg);
  REQUIRE(r.exit_code == 0);
  njson j = njson::parse(r.out);
  CHECK(j["idt"] == "fffff8036385b000");
  CHECK(j["samples"] == 4);

  RunResult o = run_cli("search --config " + cfg + " --samples 6");
  REQUIRE(o.exit_code == 0);
  njson jo = njson::parse(o.out);
  CHECK(jo["samples"] == 6);
  std::remove(cfg.c_str());
}

TEST_CASE("kernel selection never changes the artifact bytes") {
  RunResult scalar = run_cli("search --seed 77 --samples 4 --noise-sigma 3 --kernel scalar");
  RunResult simd = run_cli("search --seed 77 --samples 4 --noise-sigma 3 --kernel avx2");
  REQUIRE(scalar.exit_code == 0);
  REQUIRE(simd.exit_code == 0);
  CHECK(scalar.out == simd.out);
}
