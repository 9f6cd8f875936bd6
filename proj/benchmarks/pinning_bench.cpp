#include <benchmark/benchmark.h>

#include "phitune/orchestrator.hpp"
#include "phitune/pinning.hpp"

namespace {

void BM_AssignAndVerify(benchmark::State& state) {
  const auto topo = phitune::knl7210();
  const auto nproc = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    auto plan = phitune::assign(topo, nproc);
    auto violations = phitune::verify(plan);
    benchmark::DoNotOptimize(violations.data());
  }
}
BENCHMARK(BM_AssignAndVerify)->Arg(1)->Arg(4)->Arg(64);

void BM_FormatCpulist(benchmark::State& state) {
  const auto plan = phitune::assign(phitune::knl7210(), 4);
  for (auto _ : state) {
    auto text = phitune::format_cpulist(plan.assignments[0]);
    benchmark::DoNotOptimize(text.data());
  }
}
BENCHMARK(BM_FormatCpulist);

void BM_DryRunStandardGrid(benchmark::State& state) {
  phitune::SweepPlan plan;
  plan.points = phitune::standard_grid(64);
  const phitune::RunSpec spec{plan, phitune::knl7210(), phitune::BuiltinWorker{"phitune"}, {},
                              "out", true, true, {}};
  for (auto _ : state) {
    auto text = phitune::dry_run(spec);
    benchmark::DoNotOptimize(text.data());
  }
}
BENCHMARK(BM_DryRunStandardGrid)->Unit(benchmark::kMicrosecond);

}  // namespace
