#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phitune/gemm.hpp"
#include "phitune/sweep.hpp"

namespace phitune {

// Compute ceiling of a node: vector units x flops per unit per cycle x clock.
struct PeakModel {
  std::uint32_t vector_units = 0;
  std::uint32_t flops_per_unit_per_cycle = 0;
  double clock_ghz = 0;

  void validate() const;

  friend bool operator==(const PeakModel&, const PeakModel&) = default;
};

// Xeon Phi 7210: 128 AVX-512 units, 16 flops per cycle each, 1.1 GHz.
PeakModel knl7210_peak();

double practical_peak(const PeakModel& model);  // Gflops

// Node-level rate of one sweep point: sum of per-process Gflops.
double aggregate_point(std::span<const BenchResult> results);

double relative_performance(double measured_gflops, double reference_gflops);

struct ModeSeries {
  MemoryModeLabel mode;
  std::map<SweepPoint, double> gflops;  // aggregate per point
};

struct ModeComparison {
  std::vector<ModeSeries> modes;
  MemoryModeLabel baseline;
};

// Groups results by mode and point and aggregates each group. Without an
// explicit baseline, all2all-flat is used when present, otherwise the lowest
// label present.
ModeComparison build_comparison(std::span<const BenchResult> results,
                                std::optional<MemoryModeLabel> baseline = std::nullopt);

struct ComparisonRow {
  SweepPoint point;
  MemoryModeLabel mode;
  double gflops = 0;
  double vs_baseline = 0;
  double vs_peak = 0;
};

struct ModeRank {
  MemoryModeLabel mode;
  double mean_gflops = 0;
};

struct ComparisonTable {
  double peak_gflops = 0;
  MemoryModeLabel baseline;
  std::vector<ModeRank> ranking;    // best first
  std::vector<ComparisonRow> rows;  // point ascending, then ranking order
};

ComparisonTable compare_modes(const ModeComparison& comparison, double peak_gflops);

std::string format_table(const ComparisonTable& table);
std::string comparison_csv(const ComparisonTable& table);

// Tidy plot data, one row per (point, mode); `modes` filters when non-empty.
std::string figure_csv(const ComparisonTable& table, std::span<const MemoryModeLabel> modes = {});

// The two best modes plus the baseline, the bottom-panel selection.
std::vector<MemoryModeLabel> highlighted_modes(const ComparisonTable& table);

// Results CSV. The header is fixed:
// mode,cluster,mcdram,nproc,nthread,proc_index,n,seconds,gflops,checksum,cpulist,pinned,timestamp
inline constexpr std::string_view kResultsHeader =
    "mode,cluster,mcdram,nproc,nthread,proc_index,n,seconds,gflops,checksum,cpulist,pinned,"
    "timestamp";

std::string to_csv_row(const BenchResult& result);
std::string to_csv(std::span<const BenchResult> results);
void emit_csv(std::span<const BenchResult> results, const std::filesystem::path& path);

// Splits one CSV record, honoring double quotes.
std::vector<std::string> split_csv_row(std::string_view line);
BenchResult parse_csv_row(std::string_view line);
std::vector<BenchResult> parse_csv(std::string_view text);
std::vector<BenchResult> read_csv(const std::filesystem::path& path);

std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace phitune
