#include <gtest/gtest.h>

#include <atomic>
#include <vector>

#include "rbmlab/parallel.hpp"
#include "rbmlab/rng.hpp"

using namespace rbm;

TEST(KeyedRng, SameKeySameStream) {
  KeyedRng a(7, kStreamNoise, 3), b(7, kStreamNoise, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.gaussian(), b.gaussian());
}

TEST(KeyedRng, KeysSeparateStreams) {
  EXPECT_NE(mix_key(1, kStreamU, 0), mix_key(1, kStreamW, 0));
  EXPECT_NE(mix_key(1, kStreamU, 0), mix_key(2, kStreamU, 0));
  EXPECT_NE(mix_key(1, kStreamU, 0), mix_key(1, kStreamU, 1));
  EXPECT_EQ(splitmix64(12345), splitmix64(12345));
}

TEST(KeyedRng, RademacherBalanced) {
  KeyedRng rng(1, kStreamW, 0);
  double s = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) s += rng.rademacher();
  EXPECT_LT(std::abs(s) / n, 4.0 / std::sqrt(double(n)));
}

TEST(Parallel, ForCoversEachIndexOnce) {
  set_threads(4);
  std::vector<std::atomic<int>> hits(10007);
  parallel_for(Index(hits.size()), [&](Index b, Index e) {
    for (Index i = b; i < e; ++i) hits[std::size_t(i)]++;
  });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  set_threads(1);
}

TEST(Parallel, ReductionIndependentOfThreadCount) {
  const Index n = 50000;
  auto block = [](Index b, Index e) {
    double s = 0;
    for (Index i = b; i < e; ++i) s += 1.0 / double(i + 1) * ((i % 3) ? 1.0 : -0.7);
    return s;
  };
  set_threads(1);
  const double s1 = deterministic_sum(n, block);
  set_threads(3);
  const double s3 = deterministic_sum(n, block);
  set_threads(8);
  const double s8 = deterministic_sum(n, block);
  set_threads(1);
  EXPECT_EQ(s1, s3);
  EXPECT_EQ(s1, s8);
}

TEST(Parallel, MatrixReductionIndependentOfThreadCount) {
  const Index n = 3000;
  auto block = [](Index b, Index e, Mat& acc) {
    for (Index i = b; i < e; ++i) {
      acc(0, 0) += std::sin(double(i));
      acc(1, 1) += std::cos(double(i));
    }
  };
  set_threads(1);
  const Mat a = deterministic_sum(n, 2, 2, block);
  set_threads(5);
  const Mat b = deterministic_sum(n, 2, 2, block);
  set_threads(1);
  EXPECT_TRUE(a == b);
}
