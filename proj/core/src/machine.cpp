#include "phitune/machine.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "phitune/error.hpp"

namespace phitune {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::uint32_t to_count(const std::string& key, const std::string& value) {
  std::uint32_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(Errc::kConfig, key + " must be a non-negative integer, got '" + value + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const Error&) {
    throw Error(Errc::kConfig, key + " must be a number, got '" + value + "'");
  }
}

}  // namespace

MachineDescription parse_machine(std::string_view text) {
  static const std::vector<std::string> kKnown = {
      "num_tiles",    "cores_per_tile",           "hyperthreads_per_core", "vector_units",
      "flops_per_unit_per_cycle", "clock_ghz", "mode_label"};

  std::map<std::string, std::string> values;
  std::vector<std::string> unknown;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::kConfig, "machine file line " + std::to_string(lineno) +
                                     ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
      unknown.push_back(key);
      continue;
    }
    values[key] = value;
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw Error(Errc::kConfig, "unknown machine file keys: " + list);
  }
  for (const char* required : {"num_tiles", "cores_per_tile", "hyperthreads_per_core"}) {
    if (!values.contains(required)) {
      throw Error(Errc::kConfig, std::string("machine file is missing ") + required);
    }
  }

  MachineDescription machine{
      Topology(to_count("num_tiles", values["num_tiles"]),
               to_count("cores_per_tile", values["cores_per_tile"]),
               to_count("hyperthreads_per_core", values["hyperthreads_per_core"])),
      std::nullopt, std::nullopt};

  const int peak_keys = static_cast<int>(values.contains("vector_units")) +
                        static_cast<int>(values.contains("flops_per_unit_per_cycle")) +
                        static_cast<int>(values.contains("clock_ghz"));
  if (peak_keys == 3) {
    PeakModel peak{to_count("vector_units", values["vector_units"]),
                   to_count("flops_per_unit_per_cycle", values["flops_per_unit_per_cycle"]),
                   to_real("clock_ghz", values["clock_ghz"])};
    try {
      peak.validate();
    } catch (const Error& e) {
      throw Error(Errc::kConfig, e.detail());
    }
    machine.peak = peak;
  } else if (peak_keys != 0) {
    throw Error(Errc::kConfig,
                "vector_units, flops_per_unit_per_cycle and clock_ghz must be given together");
  }
  if (values.contains("mode_label")) {
    try {
      machine.mode = MemoryModeLabel::parse(values["mode_label"]);
    } catch (const Error& e) {
      throw Error(Errc::kConfig, "mode_label: " + e.detail());
    }
  }
  return machine;
}

MachineDescription load_machine(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kIo, "cannot read machine file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_machine(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string write_machine(const MachineDescription& machine) {
  std::ostringstream out;
  out << "num_tiles=" << machine.topology.num_tiles() << '\n'
      << "cores_per_tile=" << machine.topology.cores_per_tile() << '\n'
      << "hyperthreads_per_core=" << machine.topology.hyperthreads_per_core() << '\n';
  if (machine.peak) {
    out << "vector_units=" << machine.peak->vector_units << '\n'
        << "flops_per_unit_per_cycle=" << machine.peak->flops_per_unit_per_cycle << '\n'
        << "clock_ghz=" << format_double(machine.peak->clock_ghz) << '\n';
  }
  if (machine.mode) {
    out << "mode_label=" << machine.mode->str() << '\n';
  }
  return out.str();
}

}  // namespace phitune
