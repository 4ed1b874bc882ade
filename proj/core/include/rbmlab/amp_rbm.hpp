// AMP for the effective RBM objective with linear f-denoiser and a
// proximal g-denoiser built from eta1.
#pragma once

#include <cstdint>
#include <vector>

#include "rbmlab/effective_model.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/spiked_data.hpp"
#include "rbmlab/types.hpp"

namespace rbm {

struct SafeInverse {
  Mat inv;
  bool regularized = false;
};
// Inverse with condition monitoring; adds a 1e-10 ridge above cond 1e12.
SafeInverse safe_inverse(const Mat& A);

// f(z) = -(2 Qhat + C_prev)^{-1} z.
Vec denoiser_f(const Vec& z, const Mat& Q_hat, const Mat& C_prev);

struct GOutput {
  Vec u;        // B^{-1}(h - y) = -grad eta1(h) / alpha
  Vec h;        // proximal point
  Mat jac;      // du/dy
  bool nonconvex = false;  // the scalar objective had several stationary points
};

struct ScalarG {
  double h, u, du;
  bool nonconvex;
};
// Scalar g for one hidden unit: h minimizes (h - y)^2/2 + (B/alpha) e(sqrt(alpha) h)
// with e the unit log-partition; u = -e'(.)/sqrt(alpha), du = du/dy.
ScalarG scalar_denoiser_g(double y, double B, double alpha, const UnitSupport& unit);

// h = argmin over h of (h - y)^2 / 2 + (B / alpha) eta1(h) per unit when B is
// diagonal and the prior separable, otherwise the root of
// h - y + B grad eta1(h) / alpha by damped Newton. B may have either sign.
GOutput denoiser_g(const Vec& y, const Mat& B, const EffectiveModel& model);

enum class AmpInit { Random, Informed, Spectral };

struct AmpConfig {
  double damping = 0.7;
  int max_iters = 200;
  double tol = 1e-10;
  AmpInit init = AmpInit::Informed;
  double init_scale = 1.0;  // Random
  double m0 = 0.7;          // Informed
  std::uint64_t seed = 1;
  bool record_residual = true;
  bool record_objective = true;

  void validate() const;
};

struct AmpState {
  Mat W, U, Y, Z, B, C, Q_hat;
  int t = 0;
};

struct AmpTrace {
  std::vector<Mat> overlaps;  // k x r per iteration
  std::vector<double> delta;  // (1/d) ||W^t - W^{t-1}||^2
  std::vector<double> residual;
  std::vector<double> objective;  // effective log-likelihood / d
  Mat W_final;
  AmpState state;
  bool converged = false;
  int iterations = 0;
  int regularized_inverses = 0;
  long nonconvex_prox = 0;
};

class AmpDivergence : public NumericalError {
 public:
  AmpDivergence(const std::string& what, AmpState last) : NumericalError(what), last_state(std::move(last)) {}
  AmpState last_state;
};

// Initial Z for the chosen mode (d x k).
Mat amp_initial_z(const SpikedDataset& data, int k, const AmpConfig& config);

AmpTrace amp_run(const SpikedDataset& data, const EffectiveModel& model, const AmpConfig& config);

// ||effective_grad(W)||_F / sqrt(d k).
double stationarity_residual(const Mat& W, const RowMat& X, const EffectiveModel& model);

}  // namespace rbm
