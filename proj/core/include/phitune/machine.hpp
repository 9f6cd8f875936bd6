#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "phitune/report.hpp"
#include "phitune/sweep.hpp"
#include "phitune/topology.hpp"

namespace phitune {

// Contents of a machine file:
//
//   # comment
//   num_tiles=32
//   cores_per_tile=2
//   hyperthreads_per_core=4
//   vector_units=128              (optional, all three peak keys or none)
//   flops_per_unit_per_cycle=16
//   clock_ghz=1.1
//   mode_label=all2all-cache      (optional)
struct MachineDescription {
  Topology topology;
  std::optional<PeakModel> peak;
  std::optional<MemoryModeLabel> mode;
};

MachineDescription parse_machine(std::string_view text);
MachineDescription load_machine(const std::filesystem::path& path);
std::string write_machine(const MachineDescription& machine);

}  // namespace phitune
