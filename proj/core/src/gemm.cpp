#include "phitune/gemm.hpp"

#include <algorithm>
#include <ctime>
#include <limits>
#include <new>
#include <random>
#include <system_error>
#include <thread>

#include "phitune/error.hpp"

namespace phitune {

namespace {

std::vector<double> allocate(std::size_t n) {
  if (n != 0 && n > std::numeric_limits<std::size_t>::max() / n / sizeof(double)) {
    throw Error(Errc::kResource, "bytes for a " + std::to_string(n) + "x" + std::to_string(n) +
                                     " matrix overflow size_t");
  }
  try {
    return std::vector<double>(n * n, 0.0);
  } catch (const std::bad_alloc&) {
    throw Error(Errc::kResource, "cannot allocate " + std::to_string(n * n * sizeof(double)) +
                                     " bytes for a " + std::to_string(n) + "x" +
                                     std::to_string(n) + " matrix");
  } catch (const std::length_error&) {
    throw Error(Errc::kResource, "cannot allocate " + std::to_string(n * n * sizeof(double)) +
                                     " bytes for a " + std::to_string(n) + "x" +
                                     std::to_string(n) + " matrix");
  }
}

class ProbeScope {
 public:
  explicit ProbeScope(WorkerProbe* probe) : probe_(probe) {
    if (!probe_) return;
    const int now = probe_->active.fetch_add(1) + 1;
    int seen = probe_->peak.load();
    while (now > seen && !probe_->peak.compare_exchange_weak(seen, now)) {
    }
  }
  ~ProbeScope() {
    if (probe_) probe_->active.fetch_sub(1);
  }
  ProbeScope(const ProbeScope&) = delete;
  ProbeScope& operator=(const ProbeScope&) = delete;

 private:
  WorkerProbe* probe_;
};

void multiply_row_block(const double* a, const double* b, double* c, std::size_t n,
                        std::size_t row_begin, std::size_t row_end, std::size_t block) {
  for (std::size_t kk = 0; kk < n; kk += block) {
    const std::size_t k_end = std::min(kk + block, n);
    for (std::size_t jj = 0; jj < n; jj += block) {
      const std::size_t j_end = std::min(jj + block, n);
      for (std::size_t i = row_begin; i < row_end; ++i) {
        const double* a_row = a + i * n;
        double* c_row = c + i * n;
        for (std::size_t k = kk; k < k_end; ++k) {
          const double aik = a_row[k];
          const double* b_row = b + k * n;
          for (std::size_t j = jj; j < j_end; ++j) {
            c_row[j] += aik * b_row[j];
          }
        }
      }
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t n) : n_(n), data_(allocate(n)) {}

Matrix generate_matrix(std::size_t n, std::uint64_t seed) {
  if (n == 0) {
    throw Error(Errc::kInvalidArgument, "matrix dimension must be >= 1");
  }
  Matrix m(n);
  std::mt19937_64 engine(seed);
  constexpr double kScale = 0x1.0p-53;
  for (double& x : m.data()) {
    x = static_cast<double>(engine() >> 11) * kScale;
  }
  return m;
}

Matrix multiply(const Matrix& a, const Matrix& b, unsigned nthread, const KernelConfig& config) {
  if (a.n() != b.n()) {
    throw Error(Errc::kInvalidArgument, "dimension mismatch: " + std::to_string(a.n()) + " vs " +
                                            std::to_string(b.n()));
  }
  if (nthread == 0) {
    throw Error(Errc::kInvalidArgument, "nthread must be >= 1");
  }
  if (config.block_size == 0) {
    throw Error(Errc::kInvalidArgument, "block size must be >= 1");
  }
  const std::size_t n = a.n();
  const std::size_t block = config.block_size;
  Matrix c(n);

  const std::size_t row_blocks = (n + block - 1) / block;
  const std::size_t workers = std::min<std::size_t>(nthread, row_blocks);
  std::atomic<std::size_t> next{0};
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();

  auto body = [&] {
    ProbeScope scope(config.probe);
    for (std::size_t rb = next.fetch_add(1); rb < row_blocks; rb = next.fetch_add(1)) {
      const std::size_t begin = rb * block;
      multiply_row_block(pa, pb, pc, n, begin, std::min(begin + block, n), block);
    }
  };

  {
    std::vector<std::jthread> pool;
    try {
      pool.reserve(workers > 0 ? workers - 1 : 0);
      for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(body);
      }
    } catch (const std::system_error& e) {
      // drain the queue so already-started workers finish quickly, then fail
      next.store(row_blocks);
      pool.clear();
      throw Error(Errc::kEnvironment, std::string("cannot start worker thread: ") + e.what());
    }
    body();
  }
  return c;
}

double checksum(const Matrix& m) {
  double sum = 0.0;
  for (const double x : m.data()) sum += x;
  return sum;
}

double gflops_of(std::uint64_t n, double seconds) {
  if (!(seconds > 0)) {
    throw Error(Errc::kInvalidArgument, "seconds must be > 0");
  }
  const double nd = static_cast<double>(n);
  return 2.0 * nd * nd * nd / seconds / 1e9;
}

BenchResult run(const GemmTask& task, const KernelConfig& config) {
  if (task.n == 0 || task.nthread == 0 || task.reps == 0) {
    throw Error(Errc::kInvalidArgument, "gemm task needs n, nthread and reps >= 1");
  }
  const auto n = static_cast<std::size_t>(task.n);
  const Matrix a = generate_matrix(n, task.seed);
  const Matrix b = generate_matrix(n, task.seed + 1);

  if (task.reps > 1) {
    (void)multiply(a, b, task.nthread, config);
  }

  BenchResult result;
  result.point = SweepPoint{1, task.nthread};
  result.n = task.n;
  double final_checksum = 0;
  using Clock = std::chrono::steady_clock;
  for (std::uint32_t r = 0; r < task.reps; ++r) {
    const auto start = Clock::now();
    const Matrix c = multiply(a, b, task.nthread, config);
    // one clock tick at minimum so tiny problems still report positive time
    const auto elapsed = std::max(Clock::now() - start, Clock::duration{1});
    result.rep_seconds.push_back(std::chrono::duration<double>(elapsed).count());
    if (r + 1 == task.reps) {
      final_checksum = checksum(c);
    }
  }
  result.seconds = *std::min_element(result.rep_seconds.begin(), result.rep_seconds.end());
  result.gflops = gflops_of(task.n, result.seconds);
  result.checksum = final_checksum;
  result.timestamp = format_utc(std::chrono::system_clock::now());
  return result;
}

std::string format_utc(std::chrono::system_clock::time_point when) {
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace phitune
