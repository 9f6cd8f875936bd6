#include "phitune/topology.hpp"

#include <limits>
#include <string>
#include <unistd.h>

#include "phitune/error.hpp"

namespace phitune {

namespace {

void require_positive(std::uint32_t value, const char* field) {
  if (value == 0) {
    throw Error(Errc::kInvalidArgument, std::string(field) + " must be >= 1");
  }
}

}  // namespace

Topology::Topology(std::uint32_t num_tiles, std::uint32_t cores_per_tile,
                   std::uint32_t hyperthreads_per_core)
    : num_tiles_(num_tiles),
      cores_per_tile_(cores_per_tile),
      hyperthreads_per_core_(hyperthreads_per_core) {
  require_positive(num_tiles, "num_tiles");
  require_positive(cores_per_tile, "cores_per_tile");
  require_positive(hyperthreads_per_core, "hyperthreads_per_core");
  const auto cpus = std::uint64_t{num_tiles} * cores_per_tile * hyperthreads_per_core;
  if (cpus > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::kInvalidArgument, "topology has too many cpus: " + std::to_string(cpus));
  }
}

CpuId Topology::logical_cpu_id(std::uint32_t core, std::uint32_t hyperthread) const {
  if (core >= total_cores()) {
    throw Error(Errc::kBounds, "core " + std::to_string(core) + " out of range [0, " +
                                   std::to_string(total_cores()) + ")");
  }
  if (hyperthread >= hyperthreads_per_core_) {
    throw Error(Errc::kBounds, "hyperthread " + std::to_string(hyperthread) +
                                   " out of range [0, " +
                                   std::to_string(hyperthreads_per_core_) + ")");
  }
  return CpuId{core + hyperthread * total_cores()};
}

CoreThread Topology::decompose(CpuId cpu) const {
  if (cpu.value >= total_cpus()) {
    throw Error(Errc::kBounds, "cpu " + std::to_string(cpu.value) + " out of range [0, " +
                                   std::to_string(total_cpus()) + ")");
  }
  return CoreThread{cpu.value % total_cores(), cpu.value / total_cores()};
}

std::uint32_t Topology::tile_of(std::uint32_t core) const {
  if (core >= total_cores()) {
    throw Error(Errc::kBounds, "core " + std::to_string(core) + " out of range [0, " +
                                   std::to_string(total_cores()) + ")");
  }
  return core / cores_per_tile_;
}

std::vector<CpuId> Topology::sibling_cpus(CpuId cpu) const {
  return core_cpus(decompose(cpu).core);
}

std::vector<CpuId> Topology::core_cpus(std::uint32_t core) const {
  std::vector<CpuId> out;
  out.reserve(hyperthreads_per_core_);
  for (std::uint32_t ht = 0; ht < hyperthreads_per_core_; ++ht) {
    out.push_back(logical_cpu_id(core, ht));
  }
  return out;
}

Topology knl7210() { return Topology(32, 2, 4); }

std::optional<Topology> detect_host_topology() {
  const long online = ::sysconf(_SC_NPROCESSORS_ONLN);
  if (online < 1) {
    return std::nullopt;
  }
  return Topology(static_cast<std::uint32_t>(online), 1, 1);
}

}  // namespace phitune
