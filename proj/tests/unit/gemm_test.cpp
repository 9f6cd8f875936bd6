#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "phitune/error.hpp"
#include "phitune/gemm.hpp"

namespace phitune {
namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (const double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.n() == b.n() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

TEST(GenerateMatrix, SingleValueInRange) {
  for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
    const auto m = generate_matrix(1, seed);
    EXPECT_GE(m(0, 0), 0.0);
    EXPECT_LT(m(0, 0), 1.0);
  }
}

TEST(GenerateMatrix, DeterministicPerSeed) {
  const auto a = generate_matrix(37, 9);
  const auto b = generate_matrix(37, 9);
  const auto c = generate_matrix(37, 10);
  EXPECT_TRUE(bitwise_equal(a, b));
  EXPECT_EQ(checksum(a), checksum(b));
  EXPECT_FALSE(bitwise_equal(a, c));
}

TEST(GenerateMatrix, UniformMean) {
  const auto m = generate_matrix(1000, 2024);
  double sum = 0;
  for (const double x : m.data()) {
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    sum += x;
  }
  EXPECT_NEAR(sum / 1e6, 0.5, 0.01);
}

TEST(GenerateMatrix, DocumentedAlgorithm) {
  // first entry is the top 53 bits of the first mt19937_64 draw times 2^-53
  std::mt19937_64 engine(5);
  const double expected = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  EXPECT_EQ(generate_matrix(2, 5)(0, 0), expected);
}

TEST(GenerateMatrix, HugeRequestIsResourceError) {
  try {
    (void)generate_matrix(std::size_t{1} << 40, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kResource);
    EXPECT_NE(std::string(e.what()).find("bytes"), std::string::npos);
  }
}

TEST(Multiply, HandComputed) {
  const auto c = multiply(from_rows({{1, 2}, {3, 4}}), from_rows({{5, 6}, {7, 8}}), 1);
  EXPECT_EQ(c(0, 0), 19);
  EXPECT_EQ(c(0, 1), 22);
  EXPECT_EQ(c(1, 0), 43);
  EXPECT_EQ(c(1, 1), 50);
}

TEST(Multiply, Identity) {
  const auto a = generate_matrix(8, 3);
  Matrix eye(8);
  for (std::size_t i = 0; i < 8; ++i) eye(i, i) = 1.0;
  EXPECT_TRUE(bitwise_equal(multiply(a, eye, 2), a));
}

TEST(Multiply, DimensionMismatch) {
  try {
    (void)multiply(Matrix(3), Matrix(4), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidArgument);
  }
  EXPECT_THROW((void)multiply(Matrix(3), Matrix(3), 0), Error);
}

TEST(Multiply, MatchesNaiveOracle) {
  std::vector<std::size_t> sizes = {1, 2, 3, 5, 8, 13, 31, 33, 47, 63, 64, 65, 100, 128};
  for (const std::size_t n : sizes) {
    const auto a = generate_matrix(n, 100 + n);
    const auto b = generate_matrix(n, 200 + n);
    const auto expected = oracle::naive_multiply(oracle::to_vector(a), oracle::to_vector(b), n);
    for (const unsigned threads : {1u, 2u, 4u}) {
      for (const std::size_t block : {std::size_t{64}, std::size_t{7}}) {
        const auto c = multiply(a, b, threads, KernelConfig{block, nullptr});
        EXPECT_LE(oracle::max_abs_diff(c.data(), expected), 1e-9 * static_cast<double>(n))
            << "n=" << n << " threads=" << threads << " block=" << block;
      }
    }
  }
}

TEST(Multiply, BitwiseStableAcrossThreadsAndBlocks) {
  const auto a = generate_matrix(150, 1);
  const auto b = generate_matrix(150, 2);
  const auto reference = multiply(a, b, 1);
  for (const unsigned threads : {2u, 3u, 4u, 8u}) {
    EXPECT_TRUE(bitwise_equal(multiply(a, b, threads), reference)) << threads;
  }
  EXPECT_TRUE(bitwise_equal(multiply(a, b, 4, KernelConfig{16, nullptr}), reference));
}

TEST(Multiply, ThreadCeiling) {
  const auto a = generate_matrix(256, 1);
  const auto b = generate_matrix(256, 2);
  for (const unsigned threads : {1u, 2u, 3u, 4u}) {
    WorkerProbe probe;
    (void)multiply(a, b, threads, KernelConfig{16, &probe});
    EXPECT_GE(probe.peak.load(), 1);
    EXPECT_LE(probe.peak.load(), static_cast<int>(threads));
    EXPECT_EQ(probe.active.load(), 0);
  }
  WorkerProbe probe;
  (void)multiply(generate_matrix(10, 1), generate_matrix(10, 2), 8, KernelConfig{64, &probe});
  EXPECT_EQ(probe.peak.load(), 1);  // one row block, one worker
}

TEST(GflopsOf, Examples) {
  EXPECT_DOUBLE_EQ(gflops_of(1000, 2.0), 1.0);
  EXPECT_NEAR(gflops_of(48000, 147.456), 1500.0, 1e-9);
  EXPECT_DOUBLE_EQ(gflops_of(1, 1.0), 2e-9);
  EXPECT_THROW((void)gflops_of(10, 0.0), Error);
  EXPECT_THROW((void)gflops_of(10, -1.0), Error);
}

TEST(Run, MatchesOracleChecksum) {
  const GemmTask task{64, 1, 77, 2};
  const auto result = run(task);
  const auto a = generate_matrix(64, 77);
  const auto b = generate_matrix(64, 78);
  const auto expected = oracle::naive_multiply(oracle::to_vector(a), oracle::to_vector(b), 64);
  double oracle_sum = 0;
  for (const double x : expected) oracle_sum += x;
  EXPECT_GT(result.gflops, 0);
  EXPECT_NEAR(result.checksum, oracle_sum, 1e-9 * 64 * 64 * 64);
  EXPECT_EQ(result.rep_seconds.size(), 2u);
  EXPECT_EQ(result.seconds, std::min(result.rep_seconds[0], result.rep_seconds[1]));
}

TEST(Run, TinyTask) {
  const auto result = run(GemmTask{1, 1, 1, 1});
  EXPECT_GT(result.seconds, 0);
  EXPECT_DOUBLE_EQ(result.gflops, 2e-9 / result.seconds);
  EXPECT_EQ(result.n, 1u);
  EXPECT_EQ(result.timestamp.size(), 20u);
  EXPECT_EQ(result.timestamp.back(), 'Z');
}

TEST(Run, FlopsAccounting) {
  for (const std::uint64_t n : {1ull, 17ull, 96ull}) {
    const auto r = run(GemmTask{n, 2, 5, 1});
    const double flops = 2.0 * static_cast<double>(n * n * n);
    EXPECT_NEAR(r.gflops * r.seconds * 1e9, flops, flops * 1e-12);
  }
}

TEST(Run, ChecksumDeterministic) {
  const GemmTask task{80, 2, 3, 2};
  EXPECT_EQ(run(task).checksum, run(task).checksum);
  EXPECT_EQ(run(task).checksum, run(GemmTask{80, 4, 3, 1}).checksum);
}

TEST(Run, RejectsInvalidTask) {
  EXPECT_THROW((void)run(GemmTask{0, 1, 1, 1}), Error);
  EXPECT_THROW((void)run(GemmTask{4, 0, 1, 1}), Error);
  EXPECT_THROW((void)run(GemmTask{4, 1, 1, 0}), Error);
}

}  // namespace
}  // namespace phitune
