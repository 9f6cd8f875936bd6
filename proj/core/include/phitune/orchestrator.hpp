#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "phitune/gemm.hpp"
#include "phitune/sweep.hpp"
#include "phitune/topology.hpp"

namespace phitune {

// The built-in worker: `<executable> worker --n ... --result-file ...`.
struct BuiltinWorker {
  std::string executable;
};

// External worker command run through /bin/sh. Placeholders {N}, {NTHREAD},
// {SEED} and {RESULT_FILE} are substituted; "{{" and "}}" are literal braces.
struct CommandTemplate {
  std::string text;
};

using Worker = std::variant<BuiltinWorker, CommandTemplate>;

struct RunSpec {
  SweepPlan plan;
  Topology topology;
  Worker worker;
  std::map<std::string, std::string> env_overrides;
  std::filesystem::path output_dir;
  bool dry_run = false;
  bool pin = true;
  std::chrono::milliseconds cooldown{1000};
};

struct LaunchRecord {
  SweepPoint point;
  std::uint32_t process_index = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::string cpulist;
  EnvList env;  // OMP_NUM_THREADS, KMP_AFFINITY, RESULT_FILE, then extra overrides
  std::filesystem::path result_file;
  std::filesystem::path log_file;
  std::vector<std::string> argv;
  std::string command_line;

  const std::string* env_value(std::string_view key) const;
};

// Replaces the placeholders in a worker template; throws kTemplate naming any
// unknown placeholder or unbalanced brace.
std::string substitute_template(std::string_view text,
                                const std::map<std::string, std::string>& values);

// Quotes a word for POSIX sh when it contains anything unsafe.
std::string shell_quote(std::string_view word);

std::vector<LaunchRecord> materialize(const RunSpec& spec);

// Command lines grouped per point under "# point PxT  N=<n>" headers.
std::string dry_run(const RunSpec& spec);

struct WorkerFailure {
  enum class Kind { kSpawn, kExit, kSignal, kMissingResult, kCorruptResult };

  SweepPoint point;
  std::uint32_t process_index = 0;
  Kind kind = Kind::kExit;
  int status = 0;  // exit code or signal number
  std::string diagnostic;
};

std::string_view to_string(WorkerFailure::Kind kind) noexcept;

struct ExecutionReport {
  std::vector<BenchResult> results;
  std::vector<WorkerFailure> failures;

  bool ok() const noexcept { return failures.empty(); }
};

// Throws kEnvironment when taskset is missing or the host has fewer online
// cpus than the topology describes.
void check_pinning_supported(const Topology& topology);

// Reads one worker result file: either a full results-CSV row (optionally
// preceded by the header) or the short form "n,seconds[,checksum]". Launch
// context (point, process index, cpulist, mode, env) comes from the record.
BenchResult parse_worker_result(std::string_view text, const LaunchRecord& record,
                                const RunSpec& spec);

// Runs the plan point by point; the processes of one point run concurrently.
// Per-process failures are collected, never thrown.
ExecutionReport execute(const RunSpec& spec, std::ostream* progress = nullptr);

std::string write_manifest(const RunSpec& spec, const std::vector<LaunchRecord>& records);

}  // namespace phitune
