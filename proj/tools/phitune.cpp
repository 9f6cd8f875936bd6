// phitune: plan, launch and report pinned DGEMM sweeps on manycore nodes.
//
//   phitune plan     --machine machines/knl7210.machine --base-n 48000 --out sweep.plan
//   phitune dry-run  --machine machines/knl7210.machine --plan sweep.plan
//   phitune run      --machine machines/knl7210.machine --plan sweep.plan --out results/
//   phitune report   --results results/results.csv --machine machines/knl7210.machine
//
// `phitune worker` is the built-in benchmark process that `run` launches.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "phitune/error.hpp"
#include "phitune/gemm.hpp"
#include "phitune/machine.hpp"
#include "phitune/orchestrator.hpp"
#include "phitune/report.hpp"
#include "phitune/sweep.hpp"
#include "phitune/topology.hpp"

namespace fs = std::filesystem;
using namespace phitune;

namespace {

constexpr int kExitWorkerFailure = 1;
constexpr int kExitUsage = 2;

struct PlanOptions {
  std::string machine;
  std::string plan_file;
  std::uint64_t base_n = 48000;
  std::uint32_t reps = 3;
  std::uint64_t seed = 1;
  std::string mode;
  std::string grid = "standard";
  std::vector<std::uint32_t> procs;
  std::vector<std::uint32_t> threads;
};

struct LaunchOptions {
  std::string out = "phitune-out";
  bool no_pin = false;
  std::string worker_cmd;
  std::vector<std::string> env;
  double cooldown_s = 1.0;
};

void add_machine_option(CLI::App* cmd, PlanOptions& opts) {
  cmd->add_option("--machine", opts.machine, "Machine description file")
      ->check(CLI::ExistingFile);
}

void add_plan_options(CLI::App* cmd, PlanOptions& opts, bool allow_plan_file) {
  add_machine_option(cmd, opts);
  std::vector<CLI::Option*> planning = {
      cmd->add_option("--base-n", opts.base_n, "Matrix dimension at nproc=1")->check(
          CLI::PositiveNumber),
      cmd->add_option("--reps", opts.reps, "Timed repetitions per process")->check(
          CLI::PositiveNumber),
      cmd->add_option("--seed", opts.seed, "Base RNG seed"),
      cmd->add_option("--mode", opts.mode, "Memory mode label <cluster>-<mcdram>"),
      cmd->add_option("--grid", opts.grid, "standard or full")
          ->check(CLI::IsMember({"standard", "full"})),
      cmd->add_option("--procs", opts.procs, "Process counts for --grid full")->delimiter(','),
      cmd->add_option("--threads", opts.threads, "Thread counts for --grid full")->delimiter(','),
  };
  if (allow_plan_file) {
    auto* plan = cmd->add_option("--plan", opts.plan_file, "Plan file from `phitune plan`")
                     ->check(CLI::ExistingFile);
    for (auto* o : planning) plan->excludes(o);
  }
}

void add_launch_options(CLI::App* cmd, LaunchOptions& opts) {
  cmd->add_option("--out", opts.out, "Output directory for result files")->capture_default_str();
  cmd->add_flag("--no-pin", opts.no_pin, "Launch without taskset pinning");
  cmd->add_option("--worker-cmd", opts.worker_cmd,
                  "External worker template using {N} {NTHREAD} {SEED} {RESULT_FILE}");
  cmd->add_option("--env", opts.env, "Environment override KEY=VALUE (repeatable)");
  cmd->add_option("--cooldown", opts.cooldown_s, "Seconds to idle between points")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

std::optional<MachineDescription> load_optional_machine(const PlanOptions& opts) {
  if (opts.machine.empty()) return std::nullopt;
  return load_machine(opts.machine);
}

Topology resolve_topology(const std::optional<MachineDescription>& machine) {
  if (machine) return machine->topology;
  if (auto host = detect_host_topology()) return *host;
  throw Error(Errc::kEnvironment, "cannot detect host cpus; pass --machine");
}

SweepPlan build_plan(const PlanOptions& opts, const std::optional<MachineDescription>& machine) {
  if (!opts.plan_file.empty()) {
    return load_plan(opts.plan_file);
  }
  SweepPlan plan;
  plan.base_n = opts.base_n;
  plan.reps = opts.reps;
  plan.seed = opts.seed;
  if (!opts.mode.empty()) {
    plan.mode = MemoryModeLabel::parse(opts.mode);
  } else if (machine && machine->mode) {
    plan.mode = *machine->mode;
  }
  if (opts.grid == "standard") {
    if (!opts.procs.empty() || !opts.threads.empty()) {
      throw Error(Errc::kInvalidArgument, "--procs/--threads need --grid full");
    }
    plan.points = standard_grid(resolve_topology(machine).total_cores());
  } else {
    plan.points = full_grid(opts.procs, opts.threads);
  }
  plan.validate();
  return plan;
}

RunSpec build_spec(const PlanOptions& popts, const LaunchOptions& lopts, bool dry) {
  const auto machine = load_optional_machine(popts);
  RunSpec spec{build_plan(popts, machine), resolve_topology(machine), BuiltinWorker{}, {}, {},
               dry,  !lopts.no_pin, std::chrono::milliseconds(0)};
  spec.cooldown = std::chrono::milliseconds(static_cast<long long>(lopts.cooldown_s * 1000.0));
  spec.output_dir = lopts.out;
  if (!lopts.worker_cmd.empty()) {
    spec.worker = CommandTemplate{lopts.worker_cmd};
  } else {
    std::error_code ec;
    auto self = fs::read_symlink("/proc/self/exe", ec);
    spec.worker = BuiltinWorker{ec ? std::string("phitune") : self.string()};
  }
  for (const auto& kv : lopts.env) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(Errc::kInvalidArgument, "--env expects KEY=VALUE, got '" + kv + "'");
    }
    spec.env_overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return spec;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
}

PeakModel resolve_peak(const std::optional<MachineDescription>& machine) {
  if (machine && machine->peak) return *machine->peak;
  std::cerr << "note: no peak model in machine file; using Xeon Phi 7210 values (128, 16, 1.1)\n";
  return knl7210_peak();
}

int cmd_plan(const PlanOptions& opts, const std::string& out) {
  const auto machine = load_optional_machine(opts);
  const auto plan = build_plan(opts, machine);
  if (out.empty()) {
    std::cout << write_plan(plan);
  } else {
    save_plan(plan, out);
    std::cerr << "wrote " << plan.points.size() << " points to " << out << '\n';
  }
  return 0;
}

int cmd_dry_run(const PlanOptions& popts, const LaunchOptions& lopts) {
  std::cout << dry_run(build_spec(popts, lopts, true));
  return 0;
}

int cmd_run(const PlanOptions& popts, const LaunchOptions& lopts) {
  const auto spec = build_spec(popts, lopts, false);
  fs::create_directories(spec.output_dir);
  write_text(spec.output_dir / "run_manifest.txt", write_manifest(spec, materialize(spec)));
  write_text(spec.output_dir / "plan.txt", write_plan(spec.plan));

  const auto report = execute(spec, &std::cerr);
  emit_csv(report.results, spec.output_dir / "results.csv");

  std::string failures;
  for (const auto& f : report.failures) {
    failures += "point " + to_string(f.point) + " process " + std::to_string(f.process_index) +
                " " + std::string(to_string(f.kind)) + ": " + f.diagnostic + "\n";
  }
  if (!failures.empty()) {
    write_text(spec.output_dir / "failures.txt", failures);
    std::cerr << failures;
  }

  if (!report.results.empty()) {
    const auto machine = load_optional_machine(popts);
    const auto table =
        compare_modes(build_comparison(report.results), practical_peak(resolve_peak(machine)));
    std::cout << format_table(table);
  }
  std::cerr << report.results.size() << " results, " << report.failures.size()
            << " failures; results in " << (spec.output_dir / "results.csv").string() << '\n';
  return report.ok() ? 0 : kExitWorkerFailure;
}

int cmd_report(const std::vector<std::string>& inputs, const PlanOptions& popts,
               const std::string& baseline, const std::string& out) {
  std::vector<BenchResult> results;
  for (const auto& path : inputs) {
    auto part = read_csv(path);
    results.insert(results.end(), part.begin(), part.end());
  }
  std::optional<MemoryModeLabel> base;
  if (!baseline.empty()) base = MemoryModeLabel::parse(baseline);
  const auto machine = load_optional_machine(popts);
  const auto table =
      compare_modes(build_comparison(results, base), practical_peak(resolve_peak(machine)));
  std::cout << format_table(table);
  if (!out.empty()) {
    const fs::path dir = out;
    fs::create_directories(dir);
    write_text(dir / "comparison.csv", comparison_csv(table));
    write_text(dir / "figure_all_modes.csv", figure_csv(table));
    const auto highlighted = highlighted_modes(table);
    write_text(dir / "figure_best_modes.csv", figure_csv(table, highlighted));
  }
  return 0;
}

struct WorkerOptions {
  GemmTask task;
  std::uint32_t nproc = 1;
  std::uint32_t proc_index = 0;
  std::string mode = "all2all-flat";
  std::string cpulist;
  std::string result_file;
  bool unpinned = false;
};

int cmd_worker(const WorkerOptions& opts) {
  std::string path = opts.result_file;
  if (path.empty()) {
    if (const char* env = std::getenv("RESULT_FILE")) path = env;
  }
  if (path.empty()) {
    throw Error(Errc::kInvalidArgument, "worker needs --result-file or RESULT_FILE");
  }
  BenchResult result = run(opts.task);
  result.point = SweepPoint{opts.nproc, opts.task.nthread};
  result.process_index = opts.proc_index;
  result.mode = MemoryModeLabel::parse(opts.mode);
  result.cpulist = opts.cpulist;
  result.pinned = !opts.unpinned;

  std::cout << "n=" << result.n << " nthread=" << opts.task.nthread << " reps:";
  for (const double s : result.rep_seconds) std::cout << ' ' << s;
  std::cout << "\nbest=" << result.seconds << "s gflops=" << result.gflops
            << " checksum=" << format_double(result.checksum) << std::endl;

  const BenchResult rows[] = {result};
  emit_csv(rows, path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phitune: pinned DGEMM sweeps for manycore nodes"};
  app.require_subcommand(1);

  PlanOptions plan_opts;
  LaunchOptions launch_opts;

  std::string plan_out;
  auto* plan_cmd = app.add_subcommand("plan", "Emit a sweep plan file");
  add_plan_options(plan_cmd, plan_opts, false);
  plan_cmd->add_option("--out", plan_out, "Plan file path (stdout when omitted)");

  auto* dry_cmd = app.add_subcommand("dry-run", "Print the launch command lines only");
  add_plan_options(dry_cmd, plan_opts, true);
  add_launch_options(dry_cmd, launch_opts);

  auto* run_cmd = app.add_subcommand("run", "Execute the sweep and collect results");
  add_plan_options(run_cmd, plan_opts, true);
  add_launch_options(run_cmd, launch_opts);

  std::vector<std::string> report_inputs;
  std::string baseline;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Compare memory modes from result CSVs");
  report_cmd->add_option("--results", report_inputs, "Results CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  add_machine_option(report_cmd, plan_opts);
  report_cmd->add_option("--baseline", baseline, "Baseline mode (default all2all-flat)");
  report_cmd->add_option("--out", report_out, "Directory for comparison and figure CSVs");

  WorkerOptions worker_opts;
  auto* worker_cmd = app.add_subcommand("worker", "Built-in DGEMM benchmark process");
  worker_cmd->group("");  // internal
  worker_cmd->add_option("--n", worker_opts.task.n)->required()->check(CLI::PositiveNumber);
  worker_cmd->add_option("--nthread", worker_opts.task.nthread)->check(CLI::PositiveNumber);
  worker_cmd->add_option("--seed", worker_opts.task.seed);
  worker_cmd->add_option("--reps", worker_opts.task.reps)->check(CLI::PositiveNumber);
  worker_cmd->add_option("--nproc", worker_opts.nproc)->check(CLI::PositiveNumber);
  worker_cmd->add_option("--proc-index", worker_opts.proc_index);
  worker_cmd->add_option("--mode", worker_opts.mode);
  worker_cmd->add_option("--cpulist", worker_opts.cpulist);
  worker_cmd->add_option("--result-file", worker_opts.result_file);
  worker_cmd->add_flag("--unpinned", worker_opts.unpinned);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan_cmd) return cmd_plan(plan_opts, plan_out);
    if (*dry_cmd) return cmd_dry_run(plan_opts, launch_opts);
    if (*run_cmd) return cmd_run(plan_opts, launch_opts);
    if (*report_cmd) return cmd_report(report_inputs, plan_opts, baseline, report_out);
    if (*worker_cmd) return cmd_worker(worker_opts);
  } catch (const Error& e) {
    std::cerr << "phitune: " << e.what() << '\n';
    return e.code() == Errc::kResource || e.code() == Errc::kEnvironment ? 3 : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "phitune: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
