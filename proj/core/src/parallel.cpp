#include "rbmlab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "rbmlab/errors.hpp"

namespace rbm {

namespace {
int g_threads = 1;
}

void set_threads(int n) {
  require(n >= 1, "thread count must be >= 1");
  g_threads = n;
  omp_set_num_threads(n);
}

int threads() { return g_threads; }

void init_threads_from_env() {
  if (const char* v = std::getenv(kThreadsEnv)) {
    try {
      set_threads(std::stoi(v));
    } catch (const std::exception&) {
      throw ValidationError(std::string(kThreadsEnv) + " must be a positive integer");
    }
  }
}

void parallel_for(Index n, const std::function<void(Index, Index)>& body) {
  if (n <= 0) return;
  const Index nblocks = (n + kReduceBlock - 1) / kReduceBlock;
#pragma omp parallel for schedule(static) num_threads(g_threads)
  for (Index b = 0; b < nblocks; ++b) {
    body(b * kReduceBlock, std::min(n, (b + 1) * kReduceBlock));
  }
}

namespace {
template <class T>
T tree_combine(std::vector<T>& parts) {
  std::size_t m = parts.size();
  while (m > 1) {
    const std::size_t half = (m + 1) / 2;
    for (std::size_t i = 0; i + half < m; ++i) parts[i] += parts[i + half];
    m = half;
  }
  return parts[0];
}
}  // namespace

Mat deterministic_sum(Index n, Index rows, Index cols,
                      const std::function<void(Index, Index, Mat&)>& block) {
  if (n <= 0) return Mat::Zero(rows, cols);
  const Index nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<Mat> parts(nblocks, Mat::Zero(rows, cols));
#pragma omp parallel for schedule(static) num_threads(g_threads)
  for (Index b = 0; b < nblocks; ++b) {
    block(b * kReduceBlock, std::min(n, (b + 1) * kReduceBlock), parts[b]);
  }
  return tree_combine(parts);
}

double deterministic_sum(Index n, const std::function<double(Index, Index)>& block) {
  if (n <= 0) return 0.0;
  const Index nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> parts(nblocks, 0.0);
#pragma omp parallel for schedule(static) num_threads(g_threads)
  for (Index b = 0; b < nblocks; ++b) {
    parts[b] = block(b * kReduceBlock, std::min(n, (b + 1) * kReduceBlock));
  }
  return tree_combine(parts);
}

}  // namespace rbm
