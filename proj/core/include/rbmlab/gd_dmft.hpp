// Gradient ascent on the effective objective and its dynamical mean-field
// description by population dynamics.
//
// GD:    W <- W + kappa (X^T grad eta1(X W / sqrt n) / sqrt n - alpha W <hh^T>)
// DMFT:  rows     U_t = grad eta1(Y_t + sum_{s<t} B_ts U_s),   Y_t ~ Mr_t U* + GP(Sigma / alpha)
//        columns  W_{t+1} = W_t + kappa (Z_t + sum_{s<=t} C_ts W_s - alpha Qhat_t W_t),
//                 Z_t ~ Nc_t W* + GP(Omega)
// with Sigma_ts = E W_t W_s^T, Omega_ts = E U_t U_s^T over the populations,
// C_ts = E dU_t/dY_s and B_ts = E dW_t/dZ_s / alpha.
#pragma once

#include <cstdint>
#include <vector>

#include "rbmlab/effective_model.hpp"
#include "rbmlab/spiked_data.hpp"
#include "rbmlab/types.hpp"

namespace rbm {

struct GdConfig {
  double kappa = 0.1;
  int T = 30;
  // W_0 = W* M0^T + init_scale G with M0 = m0 on the diagonal.
  double m0 = 0.3;
  double init_scale = 1.0;
  std::uint64_t seed = 1;
  bool record_objective = false;

  void validate() const;
};

struct GdTrace {
  std::vector<Mat> overlaps;  // t = 0..T
  std::vector<double> objective;
  Mat W_final;
};

Mat gd_initial_weights(const SpikedDataset& data, int k, const GdConfig& config);
GdTrace gd_run(const SpikedDataset& data, const EffectiveModel& model, const GdConfig& config);
GdTrace gd_run_from(const SpikedDataset& data, const EffectiveModel& model, const GdConfig& config,
                    const Mat& W0);

struct DmftConfig {
  GdConfig gd;
  Index N = 100000;
  SpikePrior prior_u = SpikePrior::rademacher(1);
  SpikePrior prior_w = SpikePrior::rademacher(1);
  int probes = 4;  // samples whose full paths are kept for inspection
  std::size_t memory_budget = std::size_t(2) << 30;

  void validate() const;
};

struct DmftKernels {
  std::vector<Mat> M_row;  // k x r mean of Y_t
  std::vector<Mat> N_col;  // k x r mean of Z_t
  Mat Sigma;               // k(T+1) square, E W_t W_s^T / alpha
  Mat Omega;               // kT square, E U_t U_s^T
  Mat B;                   // kT square, block (t, s) = B_ts, zero for s >= t
  Mat C;                   // kT square, block (t, s) = C_ts, zero for s > t
  std::vector<Mat> Q_hat;  // <hh^T> at E W_t W_t^T
  int degenerate_directions = 0;
};

struct DmftProbe {
  std::vector<Vec> Y;  // realized Y_t for t < T
  std::vector<Vec> U;
  std::vector<std::vector<Mat>> D;  // D[t][s] = dU_t/dY_s
};

struct DmftResult {
  DmftKernels kernels;
  std::vector<Mat> overlaps;  // t = 0..T
  std::vector<DmftProbe> probes;
  int T = 0;
  int k = 0;
};

DmftResult dmft_predict(const EffectiveModel& model, const Vec& Gamma, const DmftConfig& config);

// Replays one row-sample path through the memory kernels: U_t for t < T.
std::vector<Vec> dmft_row_response(const DmftKernels& kernels, const std::vector<Vec>& Y,
                                   const EffectiveModel& model);

// Last overlap; *converged is false if it still moved more than tol over the
// last five steps.
Mat dmft_fixed_point_overlap(const DmftResult& result, double tol, bool* converged);

}  // namespace rbm
