#include "phitune/sweep.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "phitune/error.hpp"

namespace phitune {

std::string to_string(const SweepPoint& point) {
  return std::to_string(point.nproc) + "x" + std::to_string(point.nthread);
}

namespace {

constexpr std::array<std::pair<ClusterMode, std::string_view>, 5> kClusterNames{{
    {ClusterMode::kAll2All, "all2all"},
    {ClusterMode::kHemisphere, "hemisphere"},
    {ClusterMode::kQuadrant, "quadrant"},
    {ClusterMode::kSnc2, "snc-2"},
    {ClusterMode::kSnc4, "snc-4"},
}};

constexpr std::array<std::pair<McdramMode, std::string_view>, 3> kMcdramNames{{
    {McdramMode::kFlat, "flat"},
    {McdramMode::kCache, "cache"},
    {McdramMode::kHybrid, "hybrid"},
}};

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_unsigned(std::string_view text, std::string_view what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::kParse, "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(ClusterMode mode) noexcept {
  for (const auto& [m, name] : kClusterNames) {
    if (m == mode) return name;
  }
  return "?";
}

std::string_view to_string(McdramMode mode) noexcept {
  for (const auto& [m, name] : kMcdramNames) {
    if (m == mode) return name;
  }
  return "?";
}

std::string MemoryModeLabel::str() const {
  return std::string(to_string(cluster)) + "-" + std::string(to_string(mcdram));
}

ClusterMode MemoryModeLabel::parse_cluster(std::string_view text) {
  for (const auto& [m, name] : kClusterNames) {
    if (name == text) return m;
  }
  throw Error(Errc::kParse, "unknown cluster mode '" + std::string(text) +
                                "' (expected all2all, hemisphere, quadrant, snc-2 or snc-4)");
}

McdramMode MemoryModeLabel::parse_mcdram(std::string_view text) {
  for (const auto& [m, name] : kMcdramNames) {
    if (name == text) return m;
  }
  throw Error(Errc::kParse,
              "unknown MCDRAM mode '" + std::string(text) + "' (expected flat, cache or hybrid)");
}

MemoryModeLabel MemoryModeLabel::parse(std::string_view text) {
  // cluster names may contain '-' themselves (snc-2), so split at the last one
  const auto dash = text.rfind('-');
  if (dash == std::string_view::npos) {
    throw Error(Errc::kParse, "memory mode '" + std::string(text) + "' is not <cluster>-<mcdram>");
  }
  return MemoryModeLabel{parse_cluster(text.substr(0, dash)), parse_mcdram(text.substr(dash + 1))};
}

std::array<MemoryModeLabel, 15> MemoryModeLabel::all() {
  std::array<MemoryModeLabel, 15> out{};
  std::size_t i = 0;
  for (const auto& [cluster, cname] : kClusterNames) {
    for (const auto& [mcdram, mname] : kMcdramNames) {
      out[i++] = MemoryModeLabel{cluster, mcdram};
    }
  }
  return out;
}

void SweepPlan::validate() const {
  if (points.empty()) {
    throw Error(Errc::kInvalidArgument, "sweep plan has no points");
  }
  if (base_n == 0) {
    throw Error(Errc::kInvalidArgument, "base_n must be >= 1");
  }
  if (reps == 0) {
    throw Error(Errc::kInvalidArgument, "reps must be >= 1");
  }
  for (const auto& p : points) {
    if (p.nproc == 0 || p.nthread == 0) {
      throw Error(Errc::kInvalidArgument, "sweep point " + to_string(p) + " has a zero count");
    }
  }
}

std::vector<SweepPoint> standard_grid(std::uint32_t total_cores) {
  if (total_cores == 0 || !std::has_single_bit(total_cores)) {
    throw Error(Errc::kUnsupportedGrid,
                "standard grid needs a power-of-two core count, got " +
                    std::to_string(total_cores) + "; use full_grid with explicit procs/threads");
  }
  std::vector<SweepPoint> out;
  for (std::uint32_t p = 1; p <= total_cores; p *= 2) {
    out.push_back(SweepPoint{p, total_cores / p});
    if (p == total_cores) break;
  }
  return out;
}

std::vector<SweepPoint> full_grid(std::span<const std::uint32_t> procs,
                                  std::span<const std::uint32_t> threads) {
  if (procs.empty() || threads.empty()) {
    throw Error(Errc::kInvalidArgument, "full grid needs non-empty process and thread lists");
  }
  std::vector<SweepPoint> out;
  out.reserve(procs.size() * threads.size());
  for (const auto p : procs) {
    for (const auto t : threads) {
      if (p == 0 || t == 0) {
        throw Error(Errc::kInvalidArgument, "process and thread counts must be >= 1");
      }
      out.push_back(SweepPoint{p, t});
    }
  }
  return out;
}

std::uint64_t matrix_size(std::uint64_t base_n, std::uint32_t nproc) {
  if (base_n == 0 || nproc == 0) {
    throw Error(Errc::kInvalidArgument, "matrix_size needs base_n >= 1 and nproc >= 1");
  }
  if (base_n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::kInvalidArgument, "base_n too large");
  }
  // floor(base_n / sqrt(nproc)) == floor(sqrt(floor(base_n^2 / nproc))), done in
  // integers so perfect squares come out exact.
  const std::uint64_t q = base_n * base_n / nproc;
  auto n = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(q)));
  while (n > 0 && n > q / n) --n;
  while (n + 1 <= q / (n + 1)) ++n;
  return n == 0 ? 1 : n;
}

std::uint64_t footprint_bytes(std::uint64_t n, std::uint32_t nproc) {
  return 3 * 8 * n * n * nproc;
}

std::string write_plan(const SweepPlan& plan) {
  std::ostringstream out;
  out << "# phitune sweep plan\n";
  out << "base_n=" << plan.base_n << '\n';
  out << "reps=" << plan.reps << '\n';
  out << "seed=" << plan.seed << '\n';
  out << "mode_cluster=" << to_string(plan.mode.cluster) << '\n';
  out << "mode_mcdram=" << to_string(plan.mode.mcdram) << '\n';
  for (const auto& p : plan.points) {
    out << p.nproc << ',' << p.nthread << '\n';
  }
  return out.str();
}

SweepPlan read_plan(std::string_view text) {
  SweepPlan plan;
  bool seen[5] = {};
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto where = "plan line " + std::to_string(lineno);
    if (const auto eq = line.find('='); eq != std::string::npos) {
      const auto key = trim(std::string_view(line).substr(0, eq));
      const auto value = trim(std::string_view(line).substr(eq + 1));
      if (key == "base_n") {
        plan.base_n = parse_unsigned<std::uint64_t>(value, where + " base_n");
        seen[0] = true;
      } else if (key == "reps") {
        plan.reps = parse_unsigned<std::uint32_t>(value, where + " reps");
        seen[1] = true;
      } else if (key == "seed") {
        plan.seed = parse_unsigned<std::uint64_t>(value, where + " seed");
        seen[2] = true;
      } else if (key == "mode_cluster") {
        plan.mode.cluster = MemoryModeLabel::parse_cluster(value);
        seen[3] = true;
      } else if (key == "mode_mcdram") {
        plan.mode.mcdram = MemoryModeLabel::parse_mcdram(value);
        seen[4] = true;
      } else {
        throw Error(Errc::kParse, where + ": unknown key '" + key + "'");
      }
    } else if (const auto comma = line.find(','); comma != std::string::npos) {
      const auto p = parse_unsigned<std::uint32_t>(trim(std::string_view(line).substr(0, comma)),
                                                   where + " nproc");
      const auto t = parse_unsigned<std::uint32_t>(trim(std::string_view(line).substr(comma + 1)),
                                                   where + " nthread");
      plan.points.push_back(SweepPoint{p, t});
    } else {
      throw Error(Errc::kParse, where + ": expected key=value or nproc,nthread");
    }
  }
  static constexpr const char* kKeys[5] = {"base_n", "reps", "seed", "mode_cluster",
                                           "mode_mcdram"};
  for (int i = 0; i < 5; ++i) {
    if (!seen[i]) {
      throw Error(Errc::kParse, std::string("plan is missing key '") + kKeys[i] + "'");
    }
  }
  try {
    plan.validate();
  } catch (const Error& e) {
    throw Error(Errc::kParse, e.detail());
  }
  return plan;
}

void save_plan(const SweepPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << write_plan(plan);
  if (!out) {
    throw Error(Errc::kIo, "cannot write plan file " + path.string());
  }
}

SweepPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kIo, "cannot read plan file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_plan(buf.str());
}

}  // namespace phitune
