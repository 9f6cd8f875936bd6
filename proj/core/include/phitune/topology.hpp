#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

namespace phitune {

// A logical cpu as numbered by the operating system.
struct CpuId {
  std::uint32_t value = 0;

  friend auto operator<=>(const CpuId&, const CpuId&) = default;
};

struct CoreThread {
  std::uint32_t core = 0;
  std::uint32_t hyperthread = 0;

  friend bool operator==(const CoreThread&, const CoreThread&) = default;
};

// Tile / core / hyperthread structure of one manycore node.
//
// Logical cpus are numbered core-major, hyperthread-minor:
//
//   cpu = core + hyperthread * total_cores
//
// so on a 64-core part the four hyperthreads of core p are p, p+64, p+128
// and p+192, and cores 2t and 2t+1 sit on tile t when tiles hold two cores.
class Topology {
 public:
  Topology(std::uint32_t num_tiles, std::uint32_t cores_per_tile,
           std::uint32_t hyperthreads_per_core);

  std::uint32_t num_tiles() const noexcept { return num_tiles_; }
  std::uint32_t cores_per_tile() const noexcept { return cores_per_tile_; }
  std::uint32_t hyperthreads_per_core() const noexcept { return hyperthreads_per_core_; }
  std::uint32_t total_cores() const noexcept { return num_tiles_ * cores_per_tile_; }
  std::uint32_t total_cpus() const noexcept { return total_cores() * hyperthreads_per_core_; }

  CpuId logical_cpu_id(std::uint32_t core, std::uint32_t hyperthread) const;
  CoreThread decompose(CpuId cpu) const;
  std::uint32_t tile_of(std::uint32_t core) const;

  // All hyperthreads sharing the physical core of `cpu`, ascending.
  std::vector<CpuId> sibling_cpus(CpuId cpu) const;

  // Ascending cpus of one physical core.
  std::vector<CpuId> core_cpus(std::uint32_t core) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  std::uint32_t num_tiles_;
  std::uint32_t cores_per_tile_;
  std::uint32_t hyperthreads_per_core_;
};

// Xeon Phi 7210: 32 tiles, 2 cores per tile, 4 hyperthreads per core.
Topology knl7210();

// Flat view of the host: one core per online cpu, one hyperthread each.
// Only a convenience default; an explicit machine file always wins.
std::optional<Topology> detect_host_topology();

}  // namespace phitune
