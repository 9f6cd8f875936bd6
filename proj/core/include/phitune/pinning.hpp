#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phitune/topology.hpp"

namespace phitune {

// Sorted, duplicate-free, non-empty set of logical cpus.
class CpuSet {
 public:
  explicit CpuSet(std::vector<CpuId> cpus);

  const std::vector<CpuId>& cpus() const noexcept { return cpus_; }
  std::size_t size() const noexcept { return cpus_.size(); }
  bool contains(CpuId cpu) const noexcept;

  friend bool operator==(const CpuSet&, const CpuSet&) = default;

 private:
  std::vector<CpuId> cpus_;
};

struct PinPlan {
  Topology topology;
  std::vector<CpuSet> assignments;  // one per process
};

// Splits the cores into nproc contiguous blocks starting at core 0. The first
// total_cores % nproc processes get one extra core. Each process receives
// every hyperthread of the cores it owns.
PinPlan assign(const Topology& topo, std::uint32_t nproc);

// `taskset --cpu-list` syntax: ascending, comma separated, runs as a-b.
std::string format_cpulist(const CpuSet& set);
CpuSet parse_cpulist(std::string_view text);

struct Violation {
  enum class Kind {
    kInvalidCpu,
    kOverlap,
    kSiblingSplit,
    kNonContiguous,
    kImbalance,
  };

  Kind kind;
  std::size_t process;
  std::uint32_t where;  // cpu for kInvalidCpu/kOverlap, core otherwise
  std::string message;
};

std::string_view to_string(Violation::Kind kind) noexcept;

// Empty iff the plan is disjoint, closed over hyperthread siblings, gives
// each process a contiguous core range, and balances core counts within 1.
std::vector<Violation> verify(const PinPlan& plan);

}  // namespace phitune
