#pragma once

// Reference implementations used only by tests. They deliberately take the
// slow, obvious route so they stay independent of the library code paths.

#include <algorithm>
#include <cmath>
#include <span>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "phitune/gemm.hpp"
#include "phitune/report.hpp"

namespace phitune::oracle {

// C[i][j] = sum_k A[i][k] B[k][j], textbook triple loop.
inline std::vector<double> naive_multiply(const std::vector<double>& a,
                                          const std::vector<double>& b, std::size_t n) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) sum += a[i * n + k] * b[k * n + j];
      c[i * n + j] = sum;
    }
  }
  return c;
}

inline std::vector<double> to_vector(const Matrix& m) {
  return {m.data().begin(), m.data().end()};
}

inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

// Brute-force enumeration of a core-major cpu map: cpu -> (core, hyperthread),
// built by walking hyperthreads outer and cores inner.
inline std::map<std::uint32_t, std::pair<std::uint32_t, std::uint32_t>> enumerate_cpu_map(
    std::uint32_t cores, std::uint32_t hts) {
  std::map<std::uint32_t, std::pair<std::uint32_t, std::uint32_t>> out;
  std::uint32_t next = 0;
  for (std::uint32_t ht = 0; ht < hts; ++ht) {
    for (std::uint32_t core = 0; core < cores; ++core) out[next++] = {core, ht};
  }
  return out;
}

// Mode ranking by exhaustive pairwise comparison of means: a mode's place is
// the number of modes with a strictly larger mean (ties broken by label).
inline std::vector<MemoryModeLabel> rank_by_mean(
    const std::vector<std::pair<MemoryModeLabel, std::vector<double>>>& modes) {
  std::vector<std::pair<MemoryModeLabel, double>> means;
  for (const auto& [mode, values] : modes) {
    double s = 0;
    for (double v : values) s += v;
    means.emplace_back(mode, s / static_cast<double>(values.size()));
  }
  std::vector<MemoryModeLabel> out(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    std::size_t place = 0;
    for (std::size_t j = 0; j < means.size(); ++j) {
      if (means[j].second > means[i].second ||
          (means[j].second == means[i].second && means[j].first < means[i].first)) {
        ++place;
      }
    }
    out[place] = means[i].first;
  }
  return out;
}

// A results row with every schema field populated from `rng`.
inline BenchResult random_result(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> small(1, 64);
  std::uniform_real_distribution<double> real(1e-6, 1e4);
  const auto modes = MemoryModeLabel::all();
  BenchResult r;
  r.mode = modes[rng() % modes.size()];
  r.point = SweepPoint{small(rng), small(rng)};
  r.process_index = small(rng) - 1;
  r.n = 1 + rng() % 50000;
  r.seconds = real(rng);
  r.gflops = gflops_of(r.n, r.seconds);
  r.checksum = real(rng) * real(rng);
  r.cpulist = std::to_string(rng() % 64) + "-" + std::to_string(64 + rng() % 64) + ",200";
  r.pinned = (rng() & 1) != 0;
  r.timestamp = "2026-01-0" + std::to_string(1 + rng() % 9) + "T12:00:00Z";
  return r;
}

}  // namespace phitune::oracle
