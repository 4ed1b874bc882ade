// Thread control and deterministic reductions.
//
// Reductions split the index range into fixed blocks that do not depend on
// the thread count, then combine block partials in a fixed pairwise tree.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rbmlab/types.hpp"

namespace rbm {

// Name of the environment variable read for the default thread count.
inline constexpr const char* kThreadsEnv = "RBMLAB_THREADS";

void set_threads(int n);
int threads();
// Applies RBMLAB_THREADS when set; called by the CLI at start-up.
void init_threads_from_env();

inline constexpr Index kReduceBlock = 256;

// body(begin, end) over [0, n) in static contiguous chunks.
void parallel_for(Index n, const std::function<void(Index, Index)>& body);

// Sum of block partials, where block(begin, end, acc) accumulates into acc
// (which starts as a zero matrix of shape rows x cols).
Mat deterministic_sum(Index n, Index rows, Index cols,
                      const std::function<void(Index, Index, Mat&)>& block);

double deterministic_sum(Index n, const std::function<double(Index, Index)>& block);

}  // namespace rbm
