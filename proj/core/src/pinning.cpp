#include "phitune/pinning.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "phitune/error.hpp"

namespace phitune {

CpuSet::CpuSet(std::vector<CpuId> cpus) : cpus_(std::move(cpus)) {
  std::sort(cpus_.begin(), cpus_.end());
  cpus_.erase(std::unique(cpus_.begin(), cpus_.end()), cpus_.end());
  if (cpus_.empty()) {
    throw Error(Errc::kInvalidArgument, "cpu set must not be empty");
  }
}

bool CpuSet::contains(CpuId cpu) const noexcept {
  return std::binary_search(cpus_.begin(), cpus_.end(), cpu);
}

PinPlan assign(const Topology& topo, std::uint32_t nproc) {
  if (nproc == 0) {
    throw Error(Errc::kInvalidArgument, "nproc must be >= 1");
  }
  const std::uint32_t cores = topo.total_cores();
  if (nproc > cores) {
    throw Error(Errc::kProcExceedsCores,
                std::to_string(nproc) + " processes requested but the topology has only " +
                    std::to_string(cores) + " cores; hyperthread siblings are never split");
  }

  const std::uint32_t base = cores / nproc;
  const std::uint32_t extra = cores % nproc;

  PinPlan plan{topo, {}};
  plan.assignments.reserve(nproc);
  std::uint32_t first_core = 0;
  for (std::uint32_t k = 0; k < nproc; ++k) {
    const std::uint32_t owned = base + (k < extra ? 1 : 0);
    std::vector<CpuId> cpus;
    cpus.reserve(std::size_t{owned} * topo.hyperthreads_per_core());
    for (std::uint32_t core = first_core; core < first_core + owned; ++core) {
      const auto siblings = topo.core_cpus(core);
      cpus.insert(cpus.end(), siblings.begin(), siblings.end());
    }
    plan.assignments.emplace_back(std::move(cpus));
    first_core += owned;
  }
  return plan;
}

std::string format_cpulist(const CpuSet& set) {
  std::string out;
  const auto& cpus = set.cpus();
  std::size_t i = 0;
  while (i < cpus.size()) {
    std::size_t j = i;
    while (j + 1 < cpus.size() && cpus[j + 1].value == cpus[j].value + 1) {
      ++j;
    }
    if (!out.empty()) {
      out += ',';
    }
    out += std::to_string(cpus[i].value);
    if (j > i) {
      out += '-';
      out += std::to_string(cpus[j].value);
    }
    i = j + 1;
  }
  return out;
}

namespace {

std::uint32_t parse_cpu_number(std::string_view token, std::string_view whole) {
  std::uint32_t value = 0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (token.empty() || ec != std::errc{} || ptr != end) {
    throw Error(Errc::kParse, "bad cpu number '" + std::string(token) + "' in cpu list '" +
                                  std::string(whole) + "'");
  }
  return value;
}

}  // namespace

CpuSet parse_cpulist(std::string_view text) {
  std::vector<CpuId> cpus;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, comma - pos);
    const std::size_t dash = item.find('-');
    if (dash == std::string_view::npos) {
      cpus.push_back(CpuId{parse_cpu_number(item, text)});
    } else {
      const auto lo = parse_cpu_number(item.substr(0, dash), text);
      const auto hi = parse_cpu_number(item.substr(dash + 1), text);
      if (hi < lo) {
        throw Error(Errc::kParse, "descending range '" + std::string(item) + "'");
      }
      for (std::uint32_t c = lo; c <= hi; ++c) {
        cpus.push_back(CpuId{c});
        if (c == std::numeric_limits<std::uint32_t>::max()) break;
      }
    }
    pos = comma + 1;
  }
  if (cpus.empty()) {
    throw Error(Errc::kParse, "empty cpu list");
  }
  return CpuSet(std::move(cpus));
}

std::string_view to_string(Violation::Kind kind) noexcept {
  switch (kind) {
    case Violation::Kind::kInvalidCpu: return "invalid-cpu";
    case Violation::Kind::kOverlap: return "disjointness";
    case Violation::Kind::kSiblingSplit: return "sibling-closure";
    case Violation::Kind::kNonContiguous: return "core-contiguity";
    case Violation::Kind::kImbalance: return "core-balance";
  }
  return "unknown";
}

std::vector<Violation> verify(const PinPlan& plan) {
  const Topology& topo = plan.topology;
  std::vector<Violation> out;
  auto report = [&](Violation::Kind kind, std::size_t proc, std::uint32_t where,
                    const std::string& detail) {
    out.push_back(Violation{kind, proc, where,
                            std::string(to_string(kind)) + ": process " + std::to_string(proc) +
                                ", " + detail});
  };

  // owner[cpu] = first process holding it
  std::vector<std::optional<std::size_t>> owner(topo.total_cpus());
  // per process, per core: how many of that core's hyperthreads it holds
  std::vector<std::map<std::uint32_t, std::uint32_t>> held(plan.assignments.size());

  for (std::size_t p = 0; p < plan.assignments.size(); ++p) {
    for (const CpuId cpu : plan.assignments[p].cpus()) {
      if (cpu.value >= topo.total_cpus()) {
        report(Violation::Kind::kInvalidCpu, p, cpu.value,
               "cpu " + std::to_string(cpu.value) + " is outside the topology");
        continue;
      }
      if (owner[cpu.value]) {
        report(Violation::Kind::kOverlap, p, cpu.value,
               "cpu " + std::to_string(cpu.value) + " also assigned to process " +
                   std::to_string(*owner[cpu.value]));
      } else {
        owner[cpu.value] = p;
      }
      ++held[p][topo.decompose(cpu).core];
    }
  }

  // One sibling violation per core that some process only partially holds.
  for (std::uint32_t core = 0; core < topo.total_cores(); ++core) {
    for (std::size_t p = 0; p < held.size(); ++p) {
      const auto it = held[p].find(core);
      if (it != held[p].end() && it->second < topo.hyperthreads_per_core()) {
        report(Violation::Kind::kSiblingSplit, p, core,
               "core " + std::to_string(core) + " has " + std::to_string(it->second) + " of " +
                   std::to_string(topo.hyperthreads_per_core()) +
                   " hyperthreads in this process");
        break;
      }
    }
  }

  std::size_t min_cores = std::numeric_limits<std::size_t>::max();
  std::size_t max_cores = 0;
  for (std::size_t p = 0; p < held.size(); ++p) {
    const auto& cores = held[p];
    if (!cores.empty()) {
      const std::uint32_t lo = cores.begin()->first;
      const std::uint32_t hi = cores.rbegin()->first;
      if (hi - lo + 1 != cores.size()) {
        // first gap in the owned range
        std::uint32_t expect = lo;
        for (const auto& [core, count] : cores) {
          if (core != expect) break;
          ++expect;
        }
        report(Violation::Kind::kNonContiguous, p, expect,
               "owned cores " + std::to_string(lo) + ".." + std::to_string(hi) +
                   " are missing core " + std::to_string(expect));
      }
    }
    min_cores = std::min(min_cores, cores.size());
    max_cores = std::max(max_cores, cores.size());
  }
  if (!held.empty() && max_cores - min_cores > 1) {
    for (std::size_t p = 0; p < held.size(); ++p) {
      if (held[p].size() == max_cores) {
        const std::uint32_t first = held[p].empty() ? 0 : held[p].begin()->first;
        report(Violation::Kind::kImbalance, p, first,
               "owns " + std::to_string(max_cores) + " cores while another process owns " +
                   std::to_string(min_cores));
        break;
      }
    }
  }
  return out;
}

}  // namespace phitune
