// Overlap metrics, spectral baseline and contrastive-divergence training.
#pragma once

#include <cstdint>
#include <vector>

#include "rbmlab/spiked_data.hpp"
#include "rbmlab/types.hpp"

namespace rbm {

// zeta_ij = |w_i . w*_j| / (|w_i| |w*_j|); zero columns give 0 and set *zero_column.
Mat overlap_matrix(const Mat& W, const Mat& W_star, bool* zero_column = nullptr);

struct MatchedOverlap {
  double value = 0.0;
  std::vector<int> assignment;  // assignment[i] = matched column of row i, or -1
  bool exhaustive = true;
};

// Mean of matched entries under the best one-to-one assignment of rows to
// columns. Exhaustive for k, r <= 8, greedy beyond.
MatchedOverlap matched_overlap(const Mat& zeta);

// Largest overlap per planted column, max_i zeta_ij.
Vec per_signal_overlap(const Mat& zeta);

// Top-k right singular vectors of X / sqrt(n) by block subspace iteration
// with Rayleigh-Ritz, columns scaled to norm sqrt(d).
Mat svd_baseline(const SpikedDataset& data, int k, std::uint64_t seed = 1);

// Leading singular values of X / sqrt(n) from the same iteration.
Vec top_singular_values(const RowMat& X, int k, std::uint64_t seed = 1);

// max((2 sqrt 2 / pi)(1 - alpha/lambda^4)/(1 + alpha/lambda^2), 0).
double svd_theory_overlap_degenerate_r2(double alpha, double lambda);

// Same uniform-rotation average built on the rectangular spiked-model overlap
// of the top right singular vectors, with d/n = 1/alpha:
// (2 sqrt 2 / pi) sqrt((1 - 1/(alpha lambda^4)) / (1 + 1/(alpha lambda^2))).
double svd_uniform_subspace_overlap(double alpha, double lambda);

struct CdConfig {
  double kappa = -1.0;  // negative selects 0.1 sqrt(d)
  int epochs = 30;
  int batch = 50;
  double init_scale = 0.1;
  std::uint64_t seed = 1;
};

struct CdResult {
  Mat W;
  std::vector<double> loss;   // mean squared one-step reconstruction error per epoch
  std::vector<Mat> overlaps;  // k x r per epoch
  Mat W_init;
};

// Initial weights shared by CD and the GD comparison: init_scale * G.
Mat cd_initial_weights(Index d, int k, double init_scale, std::uint64_t seed);

// CD-1 for a +-1 RBM on sign-binarized data. p(h=1|x) = sigmoid(2 x.w/sqrt d)
// and symmetric for visible units; w += (kappa/sqrt d)(<x h>_data - <x h>_model).
CdResult cd_train(const SpikedDataset& data, int k, const CdConfig& config);

}  // namespace rbm
