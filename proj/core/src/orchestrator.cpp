#include "phitune/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "phitune/error.hpp"
#include "phitune/pinning.hpp"
#include "phitune/report.hpp"

extern char** environ;

namespace phitune {

namespace {

constexpr std::string_view kPlaceholders[] = {"N", "NTHREAD", "SEED", "RESULT_FILE"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string tail(const std::string& text, std::size_t limit) {
  if (text.size() <= limit) return text;
  return "..." + text.substr(text.size() - limit);
}

std::string join_command(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += shell_quote(w);
  }
  return out;
}

}  // namespace

const std::string* LaunchRecord::env_value(std::string_view key) const {
  for (const auto& [k, v] : env) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::string substitute_template(std::string_view text,
                                const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      out += '{';
      ++i;
    } else if (ch == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      out += '}';
      ++i;
    } else if (ch == '{') {
      const auto close = text.find('}', i);
      if (close == std::string_view::npos) {
        throw Error(Errc::kTemplate, "unterminated placeholder at offset " + std::to_string(i) +
                                         " in '" + std::string(text) + "'");
      }
      const std::string name(text.substr(i + 1, close - i - 1));
      const bool known = std::find(std::begin(kPlaceholders), std::end(kPlaceholders), name) !=
                         std::end(kPlaceholders);
      const auto it = values.find(name);
      if (!known || it == values.end()) {
        throw Error(Errc::kTemplate, "unknown placeholder {" + name +
                                         "}; supported: {N} {NTHREAD} {SEED} {RESULT_FILE}");
      }
      out += it->second;
      i = close;
    } else if (ch == '}') {
      throw Error(Errc::kTemplate,
                  "stray '}' at offset " + std::to_string(i) + " in '" + std::string(text) + "'");
    } else {
      out += ch;
    }
  }
  return out;
}

std::string shell_quote(std::string_view word) {
  const bool safe =
      !word.empty() && std::all_of(word.begin(), word.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) ||
               std::strchr("@%+=:,./-_", c) != nullptr;
      });
  if (safe) return std::string(word);
  std::string out = "'";
  for (const char c : word) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

std::vector<LaunchRecord> materialize(const RunSpec& spec) {
  spec.plan.validate();
  std::vector<LaunchRecord> records;
  for (const auto& point : spec.plan.points) {
    const PinPlan pins = assign(spec.topology, point.nproc);
    const std::uint64_t n = matrix_size(spec.plan.base_n, point.nproc);
    const auto point_dir = spec.output_dir / "results" / to_string(point);

    for (std::uint32_t k = 0; k < point.nproc; ++k) {
      LaunchRecord rec;
      rec.point = point;
      rec.process_index = k;
      rec.n = n;
      rec.seed = spec.plan.seed + k;
      rec.cpulist = format_cpulist(pins.assignments[k]);
      rec.result_file = point_dir / ("proc" + std::to_string(k) + ".csv");
      rec.log_file = point_dir / ("proc" + std::to_string(k) + ".log");

      rec.env = {{"OMP_NUM_THREADS", std::to_string(point.nthread)},
                 {"KMP_AFFINITY", "granularity=fine"},
                 {"RESULT_FILE", rec.result_file.string()}};
      for (const auto& [key, value] : spec.env_overrides) {
        auto it = std::find_if(rec.env.begin(), rec.env.end(),
                               [&](const auto& kv) { return kv.first == key; });
        if (it != rec.env.end()) {
          it->second = value;
        } else {
          rec.env.emplace_back(key, value);
        }
      }

      std::vector<std::string> prefix;
      if (spec.pin) {
        prefix = {"taskset", "--cpu-list", rec.cpulist};
      }
      prefix.emplace_back("env");
      for (const auto& [key, value] : rec.env) {
        prefix.push_back(key + "=" + value);
      }

      rec.argv = prefix;
      if (const auto* builtin = std::get_if<BuiltinWorker>(&spec.worker)) {
        std::vector<std::string> worker = {builtin->executable,
                                           "worker",
                                           "--n",
                                           std::to_string(n),
                                           "--nthread",
                                           std::to_string(point.nthread),
                                           "--seed",
                                           std::to_string(rec.seed),
                                           "--reps",
                                           std::to_string(spec.plan.reps),
                                           "--nproc",
                                           std::to_string(point.nproc),
                                           "--proc-index",
                                           std::to_string(k),
                                           "--mode",
                                           spec.plan.mode.str(),
                                           "--cpulist",
                                           rec.cpulist,
                                           "--result-file",
                                           rec.result_file.string()};
        if (!spec.pin) worker.emplace_back("--unpinned");
        rec.argv.insert(rec.argv.end(), worker.begin(), worker.end());
        rec.command_line = join_command(rec.argv);
      } else {
        const auto& tmpl = std::get<CommandTemplate>(spec.worker);
        const std::string command =
            substitute_template(tmpl.text, {{"N", std::to_string(n)},
                                            {"NTHREAD", std::to_string(point.nthread)},
                                            {"SEED", std::to_string(rec.seed)},
                                            {"RESULT_FILE", rec.result_file.string()}});
        rec.argv.insert(rec.argv.end(), {"/bin/sh", "-c", command});
        rec.command_line = join_command(prefix) + " " + command;
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::string dry_run(const RunSpec& spec) {
  const auto records = materialize(spec);
  std::string out;
  const SweepPoint* current = nullptr;
  for (const auto& rec : records) {
    if (current == nullptr || *current != rec.point || rec.process_index == 0) {
      out += "# point " + to_string(rec.point) + "  N=" + std::to_string(rec.n) + "\n";
      current = &rec.point;
    }
    out += rec.command_line;
    out += '\n';
  }
  return out;
}

std::string_view to_string(WorkerFailure::Kind kind) noexcept {
  switch (kind) {
    case WorkerFailure::Kind::kSpawn: return "spawn";
    case WorkerFailure::Kind::kExit: return "exit";
    case WorkerFailure::Kind::kSignal: return "signal";
    case WorkerFailure::Kind::kMissingResult: return "missing-result";
    case WorkerFailure::Kind::kCorruptResult: return "corrupt-result";
  }
  return "unknown";
}

void check_pinning_supported(const Topology& topology) {
  bool found = false;
  if (const char* path = std::getenv("PATH")) {
    std::string_view dirs(path);
    while (!dirs.empty() && !found) {
      const auto colon = dirs.find(':');
      const auto dir = dirs.substr(0, colon);
      const auto candidate = std::filesystem::path(dir.empty() ? "." : dir) / "taskset";
      found = ::access(candidate.c_str(), X_OK) == 0;
      dirs = colon == std::string_view::npos ? std::string_view{} : dirs.substr(colon + 1);
    }
  }
  if (!found) {
    throw Error(Errc::kEnvironment, "taskset not found on PATH; rerun with --no-pin");
  }
  const long online = ::sysconf(_SC_NPROCESSORS_ONLN);
  if (online < static_cast<long>(topology.total_cpus())) {
    throw Error(Errc::kEnvironment, "pinning needs " + std::to_string(topology.total_cpus()) +
                                        " cpus but the host has " + std::to_string(online) +
                                        "; rerun with --no-pin");
  }
}

BenchResult parse_worker_result(std::string_view text, const LaunchRecord& record,
                                const RunSpec& spec) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == kResultsHeader) continue;
    lines.push_back(line);
  }
  if (lines.size() != 1) {
    throw Error(Errc::kParse, "expected one result row, found " + std::to_string(lines.size()));
  }

  BenchResult result;
  const auto fields = split_csv_row(lines.front());
  if (fields.size() == 13) {
    result = parse_csv_row(lines.front());
  } else if (fields.size() == 2 || fields.size() == 3) {
    std::uint64_t n = 0;
    const auto& nf = fields[0];
    const auto [ptr, ec] = std::from_chars(nf.data(), nf.data() + nf.size(), n);
    if (nf.empty() || ec != std::errc{} || ptr != nf.data() + nf.size() || n == 0) {
      throw Error(Errc::kParse, "bad matrix dimension '" + nf + "'");
    }
    result.n = n;
    result.seconds = parse_double(fields[1]);
    result.checksum = fields.size() == 3 ? parse_double(fields[2]) : 0.0;
    if (!(result.seconds > 0)) {
      throw Error(Errc::kParse, "seconds must be > 0");
    }
    result.gflops = gflops_of(n, result.seconds);
    result.rep_seconds = {result.seconds};
    result.timestamp = format_utc(std::chrono::system_clock::now());
  } else {
    throw Error(Errc::kParse, "result row has " + std::to_string(fields.size()) +
                                  " fields; expected 13 or n,seconds[,checksum]");
  }
  if (!(result.seconds > 0) || !(result.gflops > 0)) {
    throw Error(Errc::kParse, "non-positive timing in result row");
  }
  result.point = record.point;
  result.process_index = record.process_index;
  result.cpulist = record.cpulist;
  result.pinned = spec.pin;
  result.mode = spec.plan.mode;
  result.env = record.env;
  return result;
}

namespace {

struct Child {
  const LaunchRecord* record = nullptr;
  pid_t pid = -1;
  int spawn_error = 0;
};

Child spawn_worker(const LaunchRecord& rec) {
  Child child{&rec, -1, 0};
  std::error_code ec;
  std::filesystem::remove(rec.result_file, ec);

  std::vector<char*> argv;
  argv.reserve(rec.argv.size() + 1);
  for (const auto& a : rec.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, rec.log_file.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  const int rc = ::posix_spawnp(&child.pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    child.pid = -1;
    child.spawn_error = rc;
  }
  return child;
}

}  // namespace

ExecutionReport execute(const RunSpec& spec, std::ostream* progress) {
  if (spec.dry_run) {
    throw Error(Errc::kInvalidArgument, "execute called on a dry-run spec");
  }
  const auto records = materialize(spec);
  if (spec.pin) {
    check_pinning_supported(spec.topology);
  }

  ExecutionReport report;
  std::size_t begin = 0;
  bool first_point = true;
  while (begin < records.size()) {
    std::size_t end = begin;
    while (end < records.size() && records[end].point == records[begin].point &&
           (end == begin || records[end].process_index != 0)) {
      ++end;
    }
    if (!first_point && spec.cooldown.count() > 0) {
      std::this_thread::sleep_for(spec.cooldown);
    }
    first_point = false;

    const auto& point = records[begin].point;
    std::error_code ec;
    std::filesystem::create_directories(records[begin].result_file.parent_path(), ec);
    if (ec) {
      throw Error(Errc::kIo, "cannot create " + records[begin].result_file.parent_path().string() +
                                 ": " + ec.message());
    }
    if (progress) {
      *progress << "point " << to_string(point) << " N=" << records[begin].n << ": launching "
                << (end - begin) << " process" << (end - begin == 1 ? "" : "es") << std::endl;
    }

    std::vector<Child> children;
    for (std::size_t i = begin; i < end; ++i) {
      children.push_back(spawn_worker(records[i]));
    }

    for (auto& child : children) {
      const auto& rec = *child.record;
      auto fail = [&](WorkerFailure::Kind kind, int status, std::string diagnostic) {
        report.failures.push_back(
            WorkerFailure{rec.point, rec.process_index, kind, status, std::move(diagnostic)});
      };
      if (child.pid < 0) {
        fail(WorkerFailure::Kind::kSpawn, child.spawn_error,
             std::string("cannot launch ") + rec.argv.front() + ": " +
                 std::strerror(child.spawn_error));
        continue;
      }
      int status = 0;
      while (::waitpid(child.pid, &status, 0) < 0) {
        if (errno != EINTR) break;
      }
      const std::string log = tail(read_file(rec.log_file), 2000);
      if (WIFSIGNALED(status)) {
        fail(WorkerFailure::Kind::kSignal, WTERMSIG(status),
             "killed by signal " + std::to_string(WTERMSIG(status)) + "\n" + log);
        continue;
      }
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        fail(WorkerFailure::Kind::kExit, code, "exit status " + std::to_string(code) + "\n" + log);
        continue;
      }
      if (!std::filesystem::exists(rec.result_file)) {
        fail(WorkerFailure::Kind::kMissingResult, 0,
             "no result file at " + rec.result_file.string() + "\n" + log);
        continue;
      }
      try {
        report.results.push_back(parse_worker_result(read_file(rec.result_file), rec, spec));
      } catch (const Error& e) {
        fail(WorkerFailure::Kind::kCorruptResult, 0,
             rec.result_file.string() + ": " + e.detail());
      }
    }
    if (progress) {
      double total = 0;
      for (const auto& r : report.results) {
        if (r.point == point) total += r.gflops;
      }
      *progress << "point " << to_string(point) << " done: " << total << " Gflops" << std::endl;
    }
    begin = end;
  }
  return report;
}

std::string write_manifest(const RunSpec& spec, const std::vector<LaunchRecord>& records) {
  std::ostringstream out;
  out << "# phitune run manifest\n";
  out << "started=" << format_utc(std::chrono::system_clock::now()) << '\n';
  out << "num_tiles=" << spec.topology.num_tiles() << '\n';
  out << "cores_per_tile=" << spec.topology.cores_per_tile() << '\n';
  out << "hyperthreads_per_core=" << spec.topology.hyperthreads_per_core() << '\n';
  out << "pinned=" << (spec.pin ? "true" : "false") << '\n';
  out << "cooldown_ms=" << spec.cooldown.count() << '\n';
  if (const auto* tmpl = std::get_if<CommandTemplate>(&spec.worker)) {
    out << "worker=" << tmpl->text << '\n';
  } else {
    out << "worker=builtin\n";
  }
  for (const auto& [k, v] : spec.env_overrides) {
    out << "env_override=" << k << '=' << v << '\n';
  }
  out << "\n# plan\n" << write_plan(spec.plan);
  out << "\n# launches\n";
  for (const auto& rec : records) {
    out << rec.command_line << '\n';
  }
  return out.str();
}

}  // namespace phitune
