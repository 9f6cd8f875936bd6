// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//
//   acceptance --cli build/tools/phitune --runbook docs/knl_runbook.md --workdir /tmp/acc

#include <CLI11.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "oracles.hpp"
#include "phitune/gemm.hpp"
#include "phitune/orchestrator.hpp"
#include "phitune/pinning.hpp"
#include "phitune/report.hpp"
#include "phitune/sweep.hpp"
#include "phitune/topology.hpp"

namespace fs = std::filesystem;
using namespace phitune;

namespace {

// Collects the reasons a criterion failed; empty means pass.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++count_;
  }
  bool passed() const { return count_ == 0; }
  std::string summary() const {
    std::string out;
    for (const auto& f : failures_) out += "\n      - " + f;
    if (count_ > failures_.size()) out += "\n      ... " + std::to_string(count_) + " total";
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

struct Criterion {
  std::string id;
  std::string title;
  std::function<void(Check&)> body;
};

void peak_model(Check& c) {
  const double peak = practical_peak(PeakModel{128, 16, 1.1});
  c.require(std::abs(peak - 2252.8) <= 2252.8 * 1e-4,
            "practical_peak(128,16,1.1) = " + format_double(peak));
  c.require(static_cast<long>(peak) == 2252, "truncated peak is not 2252");
}

void constant_memory(Check& c) {
  for (const auto& point : standard_grid(64)) {
    const auto n = matrix_size(48000, point.nproc);
    const auto bytes = footprint_bytes(n, point.nproc);
    c.require(bytes >= 54'900'000'000ull && bytes <= 55'300'000'000ull,
              "p=" + std::to_string(point.nproc) + " footprint " + std::to_string(bytes));
    const bool square = point.nproc == 1 || point.nproc == 4 || point.nproc == 16 ||
                        point.nproc == 64;
    if (square) {
      c.require(bytes == 55'296'000'000ull,
                "p=" + std::to_string(point.nproc) + " not exact: " + std::to_string(bytes));
    }
  }
}

void pinning_soundness(Check& c) {
  const auto topo = knl7210();
  for (std::uint32_t p = 1; p <= 64; ++p) {
    const auto violations = verify(assign(topo, p));
    c.require(violations.empty(),
              "nproc=" + std::to_string(p) + ": " +
                  (violations.empty() ? std::string() : violations.front().message));
  }
  const auto four = format_cpulist(assign(topo, 4).assignments[0]);
  c.require(four == "0-15,64-79,128-143,192-207", "4-way process 0 cpulist is " + four);
}

void numbering_rules(Check& c) {
  const auto topo = knl7210();
  for (std::uint32_t cpu = 0; cpu < 256; ++cpu) {
    const std::uint32_t p = cpu % 64;
    std::vector<std::uint32_t> got;
    for (const auto s : topo.sibling_cpus(CpuId{cpu})) got.push_back(s.value);
    c.require(got == std::vector<std::uint32_t>{p, p + 64, p + 128, p + 192},
              "siblings of cpu " + std::to_string(cpu));
    const auto core = topo.decompose(CpuId{cpu}).core;
    if (core % 2 == 0) {
      c.require(topo.tile_of(core) == topo.tile_of(core + 1),
                "cores " + std::to_string(core) + "," + std::to_string(core + 1) +
                    " on different tiles");
    }
  }
}

void gemm_oracle(Check& c) {
  std::vector<std::size_t> sizes;
  for (std::size_t n = 1; n <= 64; ++n) sizes.push_back(n);
  sizes.push_back(128);
  for (const std::size_t n : sizes) {
    const auto a = generate_matrix(n, 1000 + n);
    const auto b = generate_matrix(n, 2000 + n);
    const auto expected = oracle::naive_multiply(oracle::to_vector(a), oracle::to_vector(b), n);
    for (const unsigned t : {1u, 2u, 4u}) {
      const double err = oracle::max_abs_diff(multiply(a, b, t).data(), expected);
      c.require(err <= 1e-9 * static_cast<double>(n),
                "n=" + std::to_string(n) + " t=" + std::to_string(t) +
                    " err=" + format_double(err));
    }
  }
  for (const std::uint32_t t : {1u, 2u, 4u}) {
    const GemmTask task{96, t, 42, 2};
    const auto first = run(task);
    const auto second = run(task);
    c.require(std::bit_cast<std::uint64_t>(first.checksum) ==
                  std::bit_cast<std::uint64_t>(second.checksum),
              "checksum differs between runs at nthread=" + std::to_string(t));
  }
}

int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void desk_sweep(Check& c, const fs::path& cli, const fs::path& workdir) {
  const long host = std::max(1L, ::sysconf(_SC_NPROCESSORS_ONLN));
  // largest power of two within the host, at least 2 so the sweep has a
  // multi-process point, at most 8 to bound the runtime
  const auto cores = std::clamp<std::uint32_t>(
      std::bit_floor(static_cast<std::uint32_t>(host)), 2u, 8u);
  fs::create_directories(workdir);
  const auto machine = workdir / "desk.machine";
  std::ofstream(machine) << "num_tiles=" << cores
                         << "\ncores_per_tile=1\nhyperthreads_per_core=1\n";
  const bool pin = host >= static_cast<long>(cores) && std::system("command -v taskset >/dev/null 2>&1") == 0;
  const auto out = workdir / "desk_run";
  fs::remove_all(out);
  const std::string command = cli.string() + " run --machine " + machine.string() +
                              " --base-n 1024 --reps 2 --grid standard --cooldown 0 --out " +
                              out.string() + (pin ? "" : " --no-pin") + " > " +
                              (workdir / "desk_run.log").string() + " 2>&1";
  std::cout << "      (" << cores << " modeled cores, " << (pin ? "pinned" : "--no-pin") << ")\n";
  const int code = run_command(command);
  c.require(code == 0, "run exited with " + std::to_string(code) + "; see " +
                           (workdir / "desk_run.log").string());

  std::vector<BenchResult> rows;
  try {
    rows = read_csv(out / "results.csv");
  } catch (const std::exception& e) {
    c.require(false, std::string("results CSV did not parse: ") + e.what());
    return;
  }
  std::size_t expected_rows = 0;
  for (const auto& p : standard_grid(cores)) expected_rows += p.nproc;
  c.require(rows.size() == expected_rows, "expected " + std::to_string(expected_rows) +
                                              " rows, got " + std::to_string(rows.size()));
  for (const auto& r : rows) {
    c.require(r.gflops > 0, "row with gflops <= 0");
    const double flops = 2.0 * std::pow(static_cast<double>(r.n), 3);
    const double back = r.gflops * r.seconds * 1e9;
    c.require(std::abs(back - flops) <= flops * 1e-12,
              "flop identity off for n=" + std::to_string(r.n));
    c.require(r.n == matrix_size(1024, r.point.nproc), "row has wrong n");
  }
}

void dry_run_fidelity(Check& c) {
  SweepPlan plan;
  plan.points = standard_grid(64);
  plan.reps = 1;
  RunSpec spec{plan, knl7210(), BuiltinWorker{"phitune"}, {}, "out", true, true, {}};

  auto check_text = [&](const std::string& text, const std::string& affinity) {
    std::istringstream in(text);
    std::string line;
    std::size_t commands = 0;
    std::string nthread;
    while (std::getline(in, line)) {
      if (line.rfind("# point ", 0) == 0) {
        const auto x = line.find('x');
        nthread = line.substr(x + 1, line.find(' ', x) - x - 1);
        continue;
      }
      ++commands;
      c.require(line.find("taskset --cpu-list ") != std::string::npos, "no taskset: " + line);
      c.require(line.find(" OMP_NUM_THREADS=" + nthread + " ") != std::string::npos,
                "OMP_NUM_THREADS mismatch: " + line);
      c.require(line.find(" KMP_AFFINITY=" + affinity + " ") != std::string::npos,
                "KMP_AFFINITY mismatch: " + line);
    }
    c.require(commands == 127, "expected 127 command lines, got " + std::to_string(commands));
  };
  check_text(dry_run(spec), "granularity=fine");
  spec.env_overrides["KMP_AFFINITY"] = "granularity=core";
  check_text(dry_run(spec), "granularity=core");
}

void desk_substitute(Check& c, const fs::path& runbook) {
  // argsort invariance and synthetic ranking against a brute-force oracle
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> g(1, 2000);
  const auto labels = MemoryModeLabel::all();
  const std::vector<SweepPoint> points = standard_grid(64);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<MemoryModeLabel, std::vector<double>>> modes;
    for (const auto& m : labels) {
      std::vector<double> v;
      for (std::size_t i = 0; i < points.size(); ++i) v.push_back(g(rng));
      modes.emplace_back(m, v);
    }
    auto to_comparison = [&](double scale) {
      ModeComparison comp;
      comp.baseline = MemoryModeLabel{ClusterMode::kAll2All, McdramMode::kFlat};
      for (const auto& [m, v] : modes) {
        ModeSeries s{m, {}};
        for (std::size_t i = 0; i < points.size(); ++i) s.gflops[points[i]] = v[i] * scale;
        comp.modes.push_back(s);
      }
      return comp;
    };
    const auto base = compare_modes(to_comparison(1.0), 2252.8);
    const auto scaled = compare_modes(to_comparison(3.7), 2252.8);
    const auto expected = oracle::rank_by_mean(modes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      c.require(base.ranking[i].mode == expected[i], "ranking differs from brute force");
      c.require(base.ranking[i].mode == scaled.ranking[i].mode, "ranking not scale invariant");
    }
  }
  c.require(fs::is_regular_file(runbook), "runbook missing: " + runbook.string());
  std::ifstream in(runbook);
  std::stringstream text;
  text << in.rdbuf();
  c.require(text.str().find("phitune run") != std::string::npos,
            "runbook does not describe the run step");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phitune acceptance suite"};
  fs::path cli;
  fs::path runbook;
  fs::path workdir = fs::temp_directory_path() / "phitune_acceptance";
  app.add_option("--cli", cli, "phitune executable")->required();
  app.add_option("--runbook", runbook, "Hardware runbook document")->required();
  app.add_option("--workdir", workdir, "Scratch directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {"C1", "peak model 128x16x1.1 = 2252.8 Gflops", peak_model},
      {"C2", "constant-memory sizing over standard_grid(64)", constant_memory},
      {"C3", "pinning soundness on 32x2x4 for nproc 1..64", pinning_soundness},
      {"C4", "numbering rules over all 256 cpus", numbering_rules},
      {"C5", "GEMM equals naive oracle; checksums stable", gemm_oracle},
      {"C6", "end-to-end desk sweep via `phitune run`",
       [&](Check& c) { desk_sweep(c, cli, workdir); }},
      {"C7", "dry-run of standard 64-core plan", dry_run_fidelity},
      {"C8", "desk substitute: ranking properties + hardware runbook",
       [&](Check& c) { desk_substitute(c, runbook); }},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.body(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (check.passed() ? "[PASS] " : "[FAIL] ") << criterion.id << "  "
              << criterion.title << "  (" << std::fixed << std::setprecision(2) << secs << " s)"
              << check.summary() << std::endl;
    if (!check.passed()) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
