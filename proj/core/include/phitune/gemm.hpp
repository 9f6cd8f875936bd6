#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phitune/sweep.hpp"

namespace phitune {

// Dense row-major n x n matrix of doubles.
class Matrix {
 public:
  explicit Matrix(std::size_t n);  // zero-filled; throws kResource on allocation failure

  std::size_t n() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

// Entries uniform in [0, 1): the high 53 bits of successive std::mt19937_64
// outputs (seeded with `seed`) scaled by 2^-53, filled in row-major order.
Matrix generate_matrix(std::size_t n, std::uint64_t seed);

// Test hook: counts workers inside the kernel and keeps the high-water mark.
struct WorkerProbe {
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
};

struct KernelConfig {
  std::size_t block_size = 64;
  WorkerProbe* probe = nullptr;
};

// C = A B with a cache-blocked kernel, parallel over row blocks using at
// most nthread workers. Each C[i][j] accumulates over k in ascending order,
// so the result is bitwise identical for every nthread and block size.
Matrix multiply(const Matrix& a, const Matrix& b, unsigned nthread,
                const KernelConfig& config = {});

// Sum of all entries, row-major order.
double checksum(const Matrix& m);

// 2 n^3 / seconds / 1e9
double gflops_of(std::uint64_t n, double seconds);

struct GemmTask {
  std::uint64_t n = 1;
  std::uint32_t nthread = 1;
  std::uint64_t seed = 1;
  std::uint32_t reps = 1;
};

using EnvList = std::vector<std::pair<std::string, std::string>>;

// One measured run of one process.
struct BenchResult {
  SweepPoint point;
  std::uint32_t process_index = 0;
  std::uint64_t n = 0;
  double seconds = 0;  // best of reps
  double gflops = 0;
  double checksum = 0;
  std::string cpulist;
  bool pinned = false;
  MemoryModeLabel mode;
  EnvList env;
  std::string timestamp;  // UTC, ISO 8601
  std::vector<double> rep_seconds;
};

// A from `seed`, B from `seed + 1`; one untimed warm-up when reps > 1; only
// the multiply is timed. The point defaults to 1 x nthread and the context
// fields (cpulist, mode, env) are left for the caller to fill.
BenchResult run(const GemmTask& task, const KernelConfig& config = {});

std::string format_utc(std::chrono::system_clock::time_point when);

}  // namespace phitune
