// State evolution for AMP on the effective RBM objective.
//
// One step maps (M, Sigma, Q_hat, C) through the linear f-side in closed
// form and the proximal g-side by Gaussian expectation:
//   A = 2 Q_hat + C,        E[f W^T] = -A^{-1} M rho,   E[f f^T] = A^{-1}(M rho M^T + Sigma)A^{-T}
//   M_bar = E[f W^T] Gamma / alpha,  Sigma_bar = E[f f^T] / alpha,  B_bar = -A^{-1} / alpha
//   y = M_bar U + Sigma_bar^{1/2} G,  M' = E[g U^T] Gamma,  Sigma' = E[g g^T],  C' = E[dg/dy]
//   Q_hat' = zeta Q_hat + (1 - zeta) grad eta2(E[f f^T])
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rbmlab/effective_model.hpp"
#include "rbmlab/spiked_data.hpp"
#include "rbmlab/types.hpp"

namespace rbm {

struct SeState {
  Mat M;          // k x r
  Mat Sigma;      // k x k
  Mat M_bar;      // k x r
  Mat Sigma_bar;  // k x k
  Mat B_bar;      // k x k
  Mat C_bar;      // k x k, Onsager term entering the next f-side
  Mat Q_bar;      // k x k
  Mat Q_hat;      // k x k
  Vec Gamma;      // r, effective SNR
  int t = 0;
  int psd_repairs = 0;
};

enum class SeMode { MonteCarlo, GaussHermite, Dense };
enum class OnsagerMode { Analytic, Stein };

struct SeEngine {
  SeMode mode = SeMode::Dense;
  long samples = 1000000;  // MonteCarlo
  std::uint64_t seed = 1;  // MonteCarlo, common random numbers across steps
  int nodes = 100;         // GaussHermite
  int panels = 800;        // Dense, 10 nodes per panel
  double half_width = 12.0;
  // GaussHermite over the full k-dimensional grid instead of per unit.
  bool tensor = false;
  SpikePrior prior_u = SpikePrior::rademacher(1);
  SpikePrior prior_w = SpikePrior::rademacher(1);
  OnsagerMode onsager = OnsagerMode::Analytic;

  void validate() const;
};

// Informed start matching an AMP run with initial overlap m0.
SeState se_initial_state(int k, const Vec& Gamma, const SpikePrior& prior_w, double m0);
// Start with M = m_small on the diagonal and Sigma = I (weak-signal start).
SeState se_weak_state(int k, const Vec& Gamma, const SpikePrior& prior_w, double m_small);

// Fills M_bar, Sigma_bar, B_bar, Q_bar from (M, Sigma, Q_hat, C_bar).
void se_f_side(SeState& s, const EffectiveModel& model, const SeEngine& engine);

SeState se_step(const SeState& state, const EffectiveModel& model, const SeEngine& engine,
                double damping);

// zeta_ij = |E f_i W_j| / sqrt(E f_i^2 E W_j^2) for the f-side at the state.
Mat se_overlap(const SeState& state, const EffectiveModel& model, const SeEngine& engine,
               bool* zero_variance = nullptr);

struct SeTrace {
  std::vector<SeState> states;  // states[t] before step t+1
  std::vector<Mat> overlaps;    // overlap of states[t]
  bool converged = false;
  bool cycle = false;  // period-2 oscillation detected
  SeState fixed_point;
};

SeTrace se_run(const SeState& init, const EffectiveModel& model, const SeEngine& engine, int T,
               double tol = 1e-8, double damping = 0.0);

struct SeFixedPoint {
  SeState state;
  Mat overlap;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Newton on the diagonal fixed-point system in (M_aa, Sigma_aa, C_aa, Qhat_aa).
// Requires a diagonal state and a separable prior.
SeFixedPoint se_fixed_point(const SeState& init, const EffectiveModel& model, const SeEngine& engine,
                            double tol = 1e-11, int max_iters = 100);

// Weak-recovery threshold of the linearized recursion, alpha^{-1/4}.
double bbp_threshold(double alpha);
// alpha * max lambda^4 > 1.
bool weak_recovery(double alpha, const Vec& Lambda);
// Spectral radius of S -> Gamma^2 S Gamma^2 / alpha, i.e. max alpha lambda^4 theta1^4.
double linearized_se_gain(double alpha, const Vec& Lambda, double theta1 = 1.0);

struct OverlapCurvePoint {
  double lambda;
  double overlap;
  bool converged;
  double B;
};

// Fixed-point overlap for k = r = 1 along a decreasing lambda grid by Newton
// continuation, starting from an informed state at the first grid value.
std::vector<OverlapCurvePoint> se_overlap_curve(const std::vector<double>& lambdas,
                                                const EffectiveModel& model, const SeEngine& engine,
                                                double m0 = 0.8);

struct ThresholdBracket {
  double lower = 0.0;  // largest grid lambda with overlap below the cut
  double upper = 0.0;  // smallest grid lambda with overlap at or above the cut
  bool found = false;
};

ThresholdBracket bracket_onset(const std::vector<OverlapCurvePoint>& curve, double cut = 1e-3);

}  // namespace rbm
