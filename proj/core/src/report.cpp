#include "phitune/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "phitune/error.hpp"

namespace phitune {

void PeakModel::validate() const {
  if (vector_units == 0 || flops_per_unit_per_cycle == 0 || !(clock_ghz > 0)) {
    throw Error(Errc::kInvalidArgument,
                "peak model needs vector_units, flops_per_unit_per_cycle and clock_ghz > 0");
  }
}

PeakModel knl7210_peak() { return PeakModel{128, 16, 1.1}; }

double practical_peak(const PeakModel& model) {
  model.validate();
  return static_cast<double>(model.vector_units) *
         static_cast<double>(model.flops_per_unit_per_cycle) * model.clock_ghz;
}

double aggregate_point(std::span<const BenchResult> results) {
  if (results.empty()) {
    throw Error(Errc::kInvalidArgument, "cannot aggregate an empty result set");
  }
  const SweepPoint point = results.front().point;
  double total = 0;
  for (const auto& r : results) {
    if (r.point != point) {
      throw Error(Errc::kInvalidArgument, "results mix points " + to_string(point) + " and " +
                                              to_string(r.point));
    }
    total += r.gflops;
  }
  return total;
}

double relative_performance(double measured_gflops, double reference_gflops) {
  if (!(reference_gflops > 0)) {
    throw Error(Errc::kInvalidArgument, "reference performance must be > 0");
  }
  return measured_gflops / reference_gflops;
}

ModeComparison build_comparison(std::span<const BenchResult> results,
                                std::optional<MemoryModeLabel> baseline) {
  std::map<MemoryModeLabel, std::map<SweepPoint, std::vector<BenchResult>>> groups;
  for (const auto& r : results) {
    groups[r.mode][r.point].push_back(r);
  }
  if (groups.empty()) {
    throw Error(Errc::kInvalidArgument, "no results to compare");
  }
  ModeComparison out;
  for (const auto& [mode, points] : groups) {
    ModeSeries series{mode, {}};
    for (const auto& [point, rs] : points) {
      series.gflops[point] = aggregate_point(rs);
    }
    out.modes.push_back(std::move(series));
  }
  const MemoryModeLabel system_default{ClusterMode::kAll2All, McdramMode::kFlat};
  if (baseline) {
    if (!groups.contains(*baseline)) {
      throw Error(Errc::kInvalidArgument, "baseline mode " + baseline->str() + " has no results");
    }
    out.baseline = *baseline;
  } else {
    out.baseline = groups.contains(system_default) ? system_default : groups.begin()->first;
  }
  return out;
}

ComparisonTable compare_modes(const ModeComparison& comparison, double peak_gflops) {
  if (comparison.modes.empty()) {
    throw Error(Errc::kInvalidArgument, "comparison has no modes");
  }
  if (!(peak_gflops > 0)) {
    throw Error(Errc::kInvalidArgument, "peak must be > 0");
  }
  const ModeSeries* base = nullptr;
  std::set<SweepPoint> all_points;
  for (const auto& series : comparison.modes) {
    if (series.mode == comparison.baseline) base = &series;
    for (const auto& [point, g] : series.gflops) all_points.insert(point);
  }
  if (base == nullptr) {
    throw Error(Errc::kInvalidArgument,
                "baseline mode " + comparison.baseline.str() + " is not in the comparison");
  }

  std::string missing;
  for (const auto& series : comparison.modes) {
    std::string points;
    for (const auto& p : all_points) {
      if (!series.gflops.contains(p)) {
        points += (points.empty() ? "" : " ") + to_string(p);
      }
    }
    if (!points.empty()) {
      missing += (missing.empty() ? "" : "; ") + series.mode.str() + " lacks " + points;
    }
  }
  if (!missing.empty()) {
    throw Error(Errc::kInvalidArgument, "modes cover different points: " + missing);
  }

  ComparisonTable table;
  table.peak_gflops = peak_gflops;
  table.baseline = comparison.baseline;
  for (const auto& series : comparison.modes) {
    double sum = 0;
    for (const auto& [point, g] : series.gflops) sum += g;
    table.ranking.push_back(ModeRank{series.mode, sum / static_cast<double>(series.gflops.size())});
  }
  std::stable_sort(table.ranking.begin(), table.ranking.end(),
                   [](const ModeRank& a, const ModeRank& b) {
                     if (a.mean_gflops != b.mean_gflops) return a.mean_gflops > b.mean_gflops;
                     return a.mode < b.mode;
                   });

  for (const auto& point : all_points) {
    const double base_g = base->gflops.at(point);
    for (const auto& rank : table.ranking) {
      const auto& series = *std::find_if(comparison.modes.begin(), comparison.modes.end(),
                                         [&](const ModeSeries& s) { return s.mode == rank.mode; });
      const double g = series.gflops.at(point);
      table.rows.push_back(ComparisonRow{point, rank.mode, g, g / base_g,
                                         relative_performance(g, peak_gflops)});
    }
  }
  return table;
}

std::string format_table(const ComparisonTable& table) {
  std::ostringstream out;
  out << "practical peak " << std::fixed << std::setprecision(1) << table.peak_gflops
      << " Gflops, baseline " << table.baseline.str() << "\n\n";
  out << std::left << std::setw(8) << "point" << std::setw(18) << "mode" << std::right
      << std::setw(12) << "gflops" << std::setw(14) << "vs_baseline" << std::setw(10)
      << "vs_peak" << '\n';
  for (const auto& row : table.rows) {
    out << std::left << std::setw(8) << to_string(row.point) << std::setw(18) << row.mode.str()
        << std::right << std::setw(12) << std::setprecision(2) << row.gflops << std::setw(14)
        << std::setprecision(4) << row.vs_baseline << std::setw(10) << row.vs_peak << '\n';
  }
  out << "\nranking by mean gflops\n";
  int place = 1;
  for (const auto& rank : table.ranking) {
    out << "  " << place++ << ". " << std::left << std::setw(18) << rank.mode.str() << std::right
        << std::setw(12) << std::setprecision(2) << rank.mean_gflops << '\n';
  }
  return out.str();
}

std::string comparison_csv(const ComparisonTable& table) {
  std::string out = "nproc,nthread,mode,gflops,relative_baseline,relative_peak,rank\n";
  for (const auto& row : table.rows) {
    const auto rank = std::find_if(table.ranking.begin(), table.ranking.end(),
                                   [&](const ModeRank& r) { return r.mode == row.mode; }) -
                      table.ranking.begin() + 1;
    out += std::to_string(row.point.nproc) + ',' + std::to_string(row.point.nthread) + ',' +
           row.mode.str() + ',' + format_double(row.gflops) + ',' +
           format_double(row.vs_baseline) + ',' + format_double(row.vs_peak) + ',' +
           std::to_string(rank) + '\n';
  }
  return out;
}

std::string figure_csv(const ComparisonTable& table, std::span<const MemoryModeLabel> modes) {
  std::string out = "point,mode,gflops,relative_peak,relative_baseline\n";
  for (const auto& row : table.rows) {
    if (!modes.empty() && std::find(modes.begin(), modes.end(), row.mode) == modes.end()) {
      continue;
    }
    out += to_string(row.point) + ',' + row.mode.str() + ',' + format_double(row.gflops) + ',' +
           format_double(row.vs_peak) + ',' + format_double(row.vs_baseline) + '\n';
  }
  return out;
}

std::vector<MemoryModeLabel> highlighted_modes(const ComparisonTable& table) {
  std::vector<MemoryModeLabel> out;
  for (const auto& rank : table.ranking) {
    if (out.size() == 2) break;
    out.push_back(rank.mode);
  }
  if (std::find(out.begin(), out.end(), table.baseline) == out.end()) {
    out.push_back(table.baseline);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::kParse, "bad number '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::string quote_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (const char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

template <typename T>
T parse_integer(std::string_view text, std::string_view column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::kParse, "bad " + std::string(column) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string to_csv_row(const BenchResult& r) {
  std::string out;
  out += r.mode.str() + ',';
  out += std::string(to_string(r.mode.cluster)) + ',';
  out += std::string(to_string(r.mode.mcdram)) + ',';
  out += std::to_string(r.point.nproc) + ',';
  out += std::to_string(r.point.nthread) + ',';
  out += std::to_string(r.process_index) + ',';
  out += std::to_string(r.n) + ',';
  out += format_double(r.seconds) + ',';
  out += format_double(r.gflops) + ',';
  out += format_double(r.checksum) + ',';
  out += quote_field(r.cpulist) + ',';
  out += r.pinned ? "true," : "false,";
  out += quote_field(r.timestamp);
  return out;
}

std::string to_csv(std::span<const BenchResult> results) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : results) {
    out += to_csv_row(r);
    out += '\n';
  }
  return out;
}

void emit_csv(std::span<const BenchResult> results, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::kIo, "cannot open " + path.string() + " for writing");
  }
  out << to_csv(results);
  out.flush();
  if (!out) {
    throw Error(Errc::kIo, "failed writing " + path.string());
  }
}

std::vector<std::string> split_csv_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) {
    throw Error(Errc::kParse, "unterminated quote in CSV row");
  }
  fields.push_back(std::move(cur));
  return fields;
}

BenchResult parse_csv_row(std::string_view line) {
  const auto f = split_csv_row(line);
  if (f.size() != 13) {
    throw Error(Errc::kParse,
                "results row has " + std::to_string(f.size()) + " fields, expected 13");
  }
  BenchResult r;
  r.mode = MemoryModeLabel::parse(f[0]);
  if (f[1] != to_string(r.mode.cluster) || f[2] != to_string(r.mode.mcdram)) {
    throw Error(Errc::kParse, "mode '" + f[0] + "' disagrees with cluster/mcdram columns");
  }
  r.point.nproc = parse_integer<std::uint32_t>(f[3], "nproc");
  r.point.nthread = parse_integer<std::uint32_t>(f[4], "nthread");
  r.process_index = parse_integer<std::uint32_t>(f[5], "proc_index");
  r.n = parse_integer<std::uint64_t>(f[6], "n");
  r.seconds = parse_double(f[7]);
  r.gflops = parse_double(f[8]);
  r.checksum = parse_double(f[9]);
  r.cpulist = f[10];
  if (f[11] == "true") {
    r.pinned = true;
  } else if (f[11] == "false") {
    r.pinned = false;
  } else {
    throw Error(Errc::kParse, "bad pinned flag '" + f[11] + "'");
  }
  r.timestamp = f[12];
  return r;
}

std::vector<BenchResult> parse_csv(std::string_view text) {
  std::vector<BenchResult> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kResultsHeader) {
        throw Error(Errc::kParse, "results CSV header mismatch: '" + line + "'");
      }
      header = true;
      continue;
    }
    try {
      out.push_back(parse_csv_row(line));
    } catch (const Error& e) {
      throw Error(Errc::kParse, "line " + std::to_string(lineno) + ": " + e.detail());
    }
  }
  if (!header) {
    throw Error(Errc::kParse, "results CSV is empty");
  }
  return out;
}

std::vector<BenchResult> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kIo, "cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace phitune
