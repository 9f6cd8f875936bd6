#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace phitune {

// One benchmark configuration: nproc processes, each running nthread threads.
struct SweepPoint {
  std::uint32_t nproc = 1;
  std::uint32_t nthread = 1;

  friend auto operator<=>(const SweepPoint&, const SweepPoint&) = default;
};

std::string to_string(const SweepPoint& point);  // "4x16"

enum class ClusterMode { kAll2All, kHemisphere, kQuadrant, kSnc2, kSnc4 };
enum class McdramMode { kFlat, kCache, kHybrid };

std::string_view to_string(ClusterMode mode) noexcept;
std::string_view to_string(McdramMode mode) noexcept;

// Boot-time memory configuration recorded alongside results. Purely a label:
// nothing here inspects or changes the hardware.
struct MemoryModeLabel {
  ClusterMode cluster = ClusterMode::kAll2All;
  McdramMode mcdram = McdramMode::kFlat;

  // "<cluster>-<mcdram>", e.g. "snc-2-cache"
  std::string str() const;
  static MemoryModeLabel parse(std::string_view text);
  static ClusterMode parse_cluster(std::string_view text);
  static McdramMode parse_mcdram(std::string_view text);

  // All fifteen combinations, cluster-major.
  static std::array<MemoryModeLabel, 15> all();

  friend auto operator<=>(const MemoryModeLabel&, const MemoryModeLabel&) = default;
};

struct SweepPlan {
  std::vector<SweepPoint> points;
  std::uint64_t base_n = 48000;  // matrix dimension at nproc = 1
  std::uint32_t reps = 1;
  std::uint64_t seed = 1;
  MemoryModeLabel mode;

  void validate() const;

  friend bool operator==(const SweepPlan&, const SweepPlan&) = default;
};

// (p, total_cores / p) for p = 1, 2, 4, ..., total_cores.
std::vector<SweepPoint> standard_grid(std::uint32_t total_cores);

// Cartesian product, procs outer.
std::vector<SweepPoint> full_grid(std::span<const std::uint32_t> procs,
                                  std::span<const std::uint32_t> threads);

// floor(base_n / sqrt(nproc)), at least 1. Keeps nproc * 3 * 8 * n^2 bytes
// roughly constant across the grid.
std::uint64_t matrix_size(std::uint64_t base_n, std::uint32_t nproc);

// Bytes held by A, B and C in every process: 3 * 8 * n^2 * nproc.
std::uint64_t footprint_bytes(std::uint64_t n, std::uint32_t nproc);

// Plan file: key=value header then one "nproc,nthread" line per point.
std::string write_plan(const SweepPlan& plan);
SweepPlan read_plan(std::string_view text);
void save_plan(const SweepPlan& plan, const std::filesystem::path& path);
SweepPlan load_plan(const std::filesystem::path& path);

}  // namespace phitune
