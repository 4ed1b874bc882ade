// Spiked covariance data: X = U* diag(Lambda) W*^T / sqrt(d) + Z, and the
// nonlinear variant X = F(signal + Z) - E F(Z).
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rbmlab/rng.hpp"
#include "rbmlab/types.hpp"

namespace rbm {

struct SpikePrior {
  enum class Kind { Rademacher, Gaussian, Discrete };
  Kind kind = Kind::Rademacher;
  int r = 1;
  double variance = 1.0;        // Gaussian only
  std::vector<double> points;   // Discrete only
  std::vector<double> weights;  // Discrete only

  static SpikePrior rademacher(int r);
  static SpikePrior gaussian(int r, double variance = 1.0);
  static SpikePrior discrete(int r, std::vector<double> points, std::vector<double> weights);

  void validate() const;
  double sample(KeyedRng& rng) const;
  double second_moment() const;
  // Finite support as (points, weights); Gaussian priors have none.
  bool finite_support() const { return kind != Kind::Gaussian; }
  std::vector<double> support() const;
  std::vector<double> support_weights() const;
};

struct SpikedDataset {
  RowMat X;        // n x d
  Mat U_star;      // n x r
  Mat W_star;      // d x r
  Vec Lambda;      // r
  Vec Gamma;       // r, effective SNR sqrt(alpha) * Lambda * theta1
  double alpha = 0.0;
  std::uint64_t seed = 0;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
  Index r() const { return Lambda.size(); }
};

// Elementwise map for the nonlinear model. Custom maps import any callable.
struct Nonlinearity {
  enum class Kind { Identity, Tanh, Custom };
  Kind kind = Kind::Identity;
  std::function<double(double)> custom;
  // F(x) = scale * (raw(x) - shift) after normalize().
  double shift = 0.0;
  double scale = 1.0;
  bool normalized = false;
  // Cached information coefficients of the normalized map.
  double theta0 = 0.0;
  double theta1 = 1.0;

  static Nonlinearity identity();
  static Nonlinearity tanh();
  static Nonlinearity from_function(std::function<double(double)> f);

  double raw(double x) const;
  double raw_derivative(double x) const;
  double operator()(double x) const { return scale * (raw(x) - shift); }
  double derivative(double x) const { return scale * raw_derivative(x); }

  // Affine rescaling F <- (F - E F(G)) / std F(G), then caches theta0/theta1.
  Nonlinearity normalize(int nodes = 200) const;
};

// theta_k(F) = E F^{(k)}(G) for k in {0, 1} by Gauss-Hermite quadrature.
double information_coefficient(const Nonlinearity& F, int order, int nodes = 200);

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t(3) << 30;

SpikedDataset sample_spiked(Index n, Index d, const SpikePrior& prior_u, const SpikePrior& prior_w,
                            const Vec& Lambda, std::uint64_t seed,
                            std::size_t memory_budget = kDefaultMemoryBudget);

enum class NoiseKind { Gaussian, Rademacher };

SpikedDataset sample_nonlinear(Index n, Index d, const SpikePrior& prior_u,
                               const SpikePrior& prior_w, const Vec& Lambda,
                               const Nonlinearity& F, NoiseKind noise, std::uint64_t seed,
                               std::size_t memory_budget = kDefaultMemoryBudget);

// Binary container: "SPKD1", n, d, r, seed, Lambda, then X, U*, W* row-major.
void save_dataset(const SpikedDataset& data, const std::string& path);
SpikedDataset load_dataset(const std::string& path);

}  // namespace rbm
