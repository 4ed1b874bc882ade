#include "rbmlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rbmlab/effective_model.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/parallel.hpp"
#include "rbmlab/rng.hpp"

namespace rbm {

Mat overlap_matrix(const Mat& W, const Mat& W_star, bool* zero_column) {
  require(W.rows() == W_star.rows(), "overlap_matrix: row mismatch");
  Mat Z = (W.transpose() * W_star).cwiseAbs();
  const Vec nw = W.colwise().norm(), ns = W_star.colwise().norm();
  bool zero = false;
  for (Index i = 0; i < Z.rows(); ++i) {
    for (Index j = 0; j < Z.cols(); ++j) {
      if (nw(i) == 0 || ns(j) == 0) {
        Z(i, j) = 0;
        zero = true;
      } else {
        Z(i, j) = std::min(1.0, Z(i, j) / (nw(i) * ns(j)));
      }
    }
  }
  if (zero_column) *zero_column = zero;
  return Z;
}

MatchedOverlap matched_overlap(const Mat& zeta) {
  const int k = static_cast<int>(zeta.rows()), r = static_cast<int>(zeta.cols());
  MatchedOverlap best;
  const int m = std::min(k, r);
  if (m == 0) return best;
  best.value = -1;
  if (k <= 8 && r <= 8) {
    // Enumerate injections from the smaller side into the larger one.
    const bool rows_small = k <= r;
    const int big = rows_small ? r : k;
    std::vector<int> perm(big);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double s = 0;
      for (int i = 0; i < m; ++i) s += rows_small ? zeta(i, perm[i]) : zeta(perm[i], i);
      if (s / m > best.value + 1e-15) {
        best.value = s / m;
        best.assignment.assign(k, -1);
        for (int i = 0; i < m; ++i) {
          if (rows_small) best.assignment[i] = perm[i];
          else best.assignment[perm[i]] = i;
        }
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  best.exhaustive = false;
  best.assignment.assign(k, -1);
  std::vector<char> row_used(k, 0), col_used(r, 0);
  double s = 0;
  for (int step = 0; step < m; ++step) {
    int bi = -1, bj = -1;
    double bv = -1;
    for (int i = 0; i < k; ++i) {
      if (row_used[i]) continue;
      for (int j = 0; j < r; ++j) {
        if (!col_used[j] && zeta(i, j) > bv) {
          bv = zeta(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    row_used[bi] = col_used[bj] = 1;
    best.assignment[bi] = bj;
    s += bv;
  }
  best.value = s / m;
  return best;
}

Vec per_signal_overlap(const Mat& zeta) { return zeta.colwise().maxCoeff().transpose(); }

namespace {

struct Subspace {
  Mat V;
  Vec sigma;
};

Subspace subspace_iteration(const RowMat& X, int k, std::uint64_t seed) {
  const Index n = X.rows(), d = X.cols();
  require(k >= 1 && k <= std::min(n, d), "svd: k must lie in [1, min(n, d)]");
  const int p = static_cast<int>(std::min<Index>(d, k + 8));
  Mat V(d, p);
  for (Index j = 0; j < d; ++j) {
    KeyedRng rng(seed, kStreamSvd, j);
    for (int a = 0; a < p; ++a) V(j, a) = rng.gaussian();
  }
  Eigen::HouseholderQR<Mat> qr(V);
  V = qr.householderQ() * Mat::Identity(d, p);
  Vec prev = Vec::Zero(k);
  Vec sigma;
  for (int it = 0; it < 2000; ++it) {
    // V <- orth(X^T X V / n)
    const Mat XV = project(X, V);
    const Mat AV = back_project(X, XV);
    // Rayleigh-Ritz on the current block.
    const Mat T = V.transpose() * AV;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (T + T.transpose()));
    const Mat R = es.eigenvectors().rowwise().reverse();
    sigma = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
    Eigen::HouseholderQR<Mat> q2(AV * R);
    V = q2.householderQ() * Mat::Identity(d, p);
    // Keep column signs aligned with the Ritz vectors.
    const Mat VR = AV * R;
    for (int a = 0; a < p; ++a)
      if (V.col(a).dot(VR.col(a)) < 0) V.col(a) *= -1;
    const Vec top = sigma.head(k);
    if (it > 5 && (top - prev).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, top(0))) break;
    prev = top;
  }
  return {V.leftCols(k), sigma.head(k)};
}

}  // namespace

Mat svd_baseline(const SpikedDataset& data, int k, std::uint64_t seed) {
  const Subspace s = subspace_iteration(data.X, k, seed);
  return s.V * std::sqrt(static_cast<double>(data.d()));
}

Vec top_singular_values(const RowMat& X, int k, std::uint64_t seed) {
  return subspace_iteration(X, k, seed).sigma;
}

double svd_theory_overlap_degenerate_r2(double alpha, double lambda) {
  require(alpha > 0 && lambda > 0, "svd theory: alpha and lambda must be > 0");
  const double l2 = lambda * lambda;
  const double v = (2 * std::sqrt(2.0) / M_PI) * (1 - alpha / (l2 * l2)) / (1 + alpha / l2);
  return std::max(v, 0.0);
}

double svd_uniform_subspace_overlap(double alpha, double lambda) {
  require(alpha > 0 && lambda > 0, "svd theory: alpha and lambda must be > 0");
  const double l2 = lambda * lambda;
  const double z2 = (1 - 1 / (alpha * l2 * l2)) / (1 + 1 / (alpha * l2));
  return (2 * std::sqrt(2.0) / M_PI) * std::sqrt(std::max(z2, 0.0));
}

Mat cd_initial_weights(Index d, int k, double init_scale, std::uint64_t seed) {
  Mat W(d, k);
  for (Index j = 0; j < d; ++j) {
    KeyedRng rng(seed, kStreamInit, j);
    for (int a = 0; a < k; ++a) W(j, a) = init_scale * rng.gaussian();
  }
  return W;
}

CdResult cd_train(const SpikedDataset& data, int k, const CdConfig& config) {
  require(k >= 1, "cd_train: k must be >= 1");
  require(config.epochs >= 0 && config.batch >= 1, "cd_train: bad epochs or batch");
  const Index n = data.n(), d = data.d();
  const double sd = std::sqrt(static_cast<double>(d));
  const double kappa = config.kappa >= 0 ? config.kappa : 0.1 * sd;
  const RowMat Xb = data.X.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });

  CdResult res;
  res.W = cd_initial_weights(d, k, config.init_scale, config.seed);
  res.W_init = res.W;
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t batch_id = 0;
  auto sigmoid = [](double a) { return 1.0 / (1.0 + std::exp(-a)); };
  for (int ep = 0; ep < config.epochs; ++ep) {
    std::mt19937_64 shuf(mix_key(config.seed, kStreamCd, 0xFFFFFFFFull + ep));
    std::shuffle(order.begin(), order.end(), shuf);
    double loss = 0;
    for (Index b0 = 0; b0 < n; b0 += config.batch) {
      const Index m = std::min<Index>(config.batch, n - b0);
      KeyedRng rng(config.seed, kStreamCd, batch_id++);
      RowMat x(m, d);
      for (Index i = 0; i < m; ++i) x.row(i) = Xb.row(order[b0 + i]);
      const Mat a = x * res.W / sd;  // m x k, a_ih = x . w / sqrt d
      Mat h(m, k);
      for (Index i = 0; i < m; ++i)
        for (int c = 0; c < k; ++c) h(i, c) = rng.uniform() < sigmoid(2 * a(i, c)) ? 1.0 : -1.0;
      const Mat av = h * res.W.transpose() / sd;  // m x d
      RowMat xn(m, d);
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < d; ++j) xn(i, j) = rng.uniform() < sigmoid(2 * av(i, j)) ? 1.0 : -1.0;
      const Mat an = xn * res.W / sd;
      const Mat pos = x.transpose() * a.array().tanh().matrix() / static_cast<double>(m);
      const Mat neg = xn.transpose() * an.array().tanh().matrix() / static_cast<double>(m);
      res.W += (kappa / sd) * (pos - neg);
      loss += (x - xn).squaredNorm() / static_cast<double>(d);
    }
    if (!res.W.allFinite()) throw NumericalError("cd_train: weights diverged");
    res.loss.push_back(loss / static_cast<double>(n));
    res.overlaps.push_back(overlap_matrix(res.W, data.W_star));
  }
  return res;
}

}  // namespace rbm
