#include "rbmlab/gd_dmft.hpp"

#include <cmath>

#include "rbmlab/baselines.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/parallel.hpp"
#include "rbmlab/rng.hpp"

namespace rbm {

void GdConfig::validate() const {
  require(kappa >= 0, "gd kappa must be >= 0");
  require(T >= 0, "gd T must be >= 0");
  require(init_scale >= 0, "gd init_scale must be >= 0");
}

void DmftConfig::validate() const {
  gd.validate();
  prior_u.validate();
  prior_w.validate();
  require(prior_u.r == prior_w.r, "dmft priors must share r");
  require(N >= 10000, "dmft needs N >= 1e4");
  if (N > 1000000) throw CapacityError("dmft N is capped at 1e6");
  if (gd.T > 64) throw CapacityError("dmft T is capped at 64");
  require(gd.T >= 1, "dmft T must be >= 1");
}

Mat gd_initial_weights(const SpikedDataset& data, int k, const GdConfig& config) {
  const Index d = data.d(), r = data.r();
  Mat W(d, k);
  parallel_for(d, [&](Index b, Index e) {
    for (Index j = b; j < e; ++j) {
      KeyedRng rng(config.seed, kStreamInit, j);
      for (int a = 0; a < k; ++a) W(j, a) = config.init_scale * rng.gaussian();
    }
  });
  if (config.m0 != 0.0) {
    // Informed start: noise orthogonal to the signal span with exact squared
    // norm init_scale^2 d, so unit a sees signal b != a only through W*^T W* / d.
    const Eigen::HouseholderQR<Mat> qr(data.W_star);
    const Mat Q = qr.householderQ() * Mat::Identity(d, r);
    W -= Q * (Q.transpose() * W);
    for (int a = 0; a < k; ++a) {
      const double nrm = W.col(a).norm();
      if (nrm > 0) W.col(a) *= config.init_scale * std::sqrt(static_cast<double>(d)) / nrm;
    }
  }
  for (Index a = 0; a < std::min<Index>(k, r); ++a) W.col(a) += config.m0 * data.W_star.col(a);
  return W;
}

namespace {
Mat gd_direction(const Mat& W, const RowMat& X, const EffectiveModel& model) {
  return effective_grad(W, X, model);
}
}  // namespace

GdTrace gd_run_from(const SpikedDataset& data, const EffectiveModel& model, const GdConfig& config,
                    const Mat& W0) {
  config.validate();
  require(W0.rows() == data.d() && W0.cols() == model.k(), "gd_run: W0 must be d x k");
  GdTrace tr;
  Mat W = W0;
  const double d = static_cast<double>(data.d());
  tr.overlaps.push_back(overlap_matrix(W, data.W_star));
  if (config.record_objective) tr.objective.push_back(effective_loglik(W, data.X, model) / d);
  for (int t = 0; t < config.T; ++t) {
    if (config.kappa != 0) W += config.kappa * gd_direction(W, data.X, model);
    if (!W.allFinite()) throw NumericalError("gd_run: non-finite update at step " + std::to_string(t));
    tr.overlaps.push_back(overlap_matrix(W, data.W_star));
    if (config.record_objective) tr.objective.push_back(effective_loglik(W, data.X, model) / d);
  }
  tr.W_final = W;
  return tr;
}

GdTrace gd_run(const SpikedDataset& data, const EffectiveModel& model, const GdConfig& config) {
  return gd_run_from(data, model, config, gd_initial_weights(data, model.k(), config));
}

namespace {

// Incremental Gram-Schmidt over population vectors with inner product x.y/N.
// Each added vector v gets coefficients c with v = sum_j c_j q_j, so that
// Gaussians sum_j c_j xi_j have the empirical covariance of the vectors.
class GramSchmidt {
 public:
  GramSchmidt(Index N, int capacity) : N_(N) { basis_.reserve(capacity); }

  // Returns coefficients over the current basis (size may grow by one).
  Vec add(const Vec& v, int* degenerate) {
    const double invN = 1.0 / static_cast<double>(N_);
    Vec r = v;
    Vec c = Vec::Zero(static_cast<Index>(basis_.size()) + 1);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < basis_.size(); ++j) {
        const double p = basis_[j].dot(r) * invN;
        c(j) += p;
        r -= p * basis_[j];
      }
    }
    const double nr = std::sqrt(r.squaredNorm() * invN);
    const double nv = std::sqrt(v.squaredNorm() * invN);
    if (nr > 1e-10 * std::max(1.0, nv)) {
      basis_.push_back(r / nr);
      c(c.size() - 1) = nr;
    } else {
      c.conservativeResize(c.size() - 1);
      if (degenerate) ++*degenerate;
    }
    return c;
  }

  int size() const { return static_cast<int>(basis_.size()); }

 private:
  Index N_;
  std::vector<Vec> basis_;
};

}  // namespace

DmftResult dmft_predict(const EffectiveModel& model, const Vec& Gamma, const DmftConfig& config) {
  config.validate();
  const int k = model.k(), T = config.gd.T;
  const Index N = config.N, r = config.prior_u.r;
  require(Gamma.size() == r, "dmft_predict: Gamma must have r entries");
  const double alpha = model.alpha, kappa = config.gd.kappa;
  const long double mem = 4.0L * N * (static_cast<long double>(T) * (T + 1) / 2) * k * k +
                          8.0L * N * (4.0L * k * (T + 2) + 2.0L * r);
  if (mem > static_cast<long double>(config.memory_budget)) {
    throw CapacityError("dmft population of N=" + std::to_string(N) + ", T=" + std::to_string(T) +
                        " exceeds the memory budget");
  }
  const std::uint64_t seed = config.gd.seed;
  const Mat I = Mat::Identity(k, k);

  // Populations: rows carry U*, columns carry W*.
  Mat Ustar(N, r), Wstar(N, r);
  Mat xi(N, k * (T + 1)), zeta(N, k * (T + 1));
  parallel_for(N, [&](Index b, Index e) {
    for (Index i = b; i < e; ++i) {
      KeyedRng ru(seed, kStreamDmft, 4 * i), rw(seed, kStreamDmft, 4 * i + 1);
      KeyedRng rx(seed, kStreamDmft, 4 * i + 2), rz(seed, kStreamDmft, 4 * i + 3);
      for (Index a = 0; a < r; ++a) {
        Ustar(i, a) = config.prior_u.sample(ru);
        Wstar(i, a) = config.prior_w.sample(rw);
      }
      for (Index j = 0; j < xi.cols(); ++j) {
        xi(i, j) = rx.gaussian();
        zeta(i, j) = rz.gaussian();
      }
    }
  });
  const Vec rho = Vec::Constant(r, config.prior_w.second_moment());

  auto mean_outer = [&](const Mat& A, const Mat& Bm) {
    return Mat(deterministic_sum(N, A.cols(), Bm.cols(), [&](Index b, Index e, Mat& acc) {
                 acc.noalias() += A.middleRows(b, e - b).transpose() * Bm.middleRows(b, e - b);
               }) /
               static_cast<double>(N));
  };

  std::vector<Mat> Wp(T + 1, Mat(N, k)), Up(T, Mat(N, k)), Yp(T, Mat(N, k));
  // W_0 = m0 W* + init_scale G, using the last Gaussian column block.
  Wp[0] = config.gd.init_scale * zeta.rightCols(k);
  for (Index a = 0; a < std::min<Index>(k, r); ++a) Wp[0].col(a) += config.gd.m0 * Wstar.col(a);

  DmftResult res;
  res.T = T;
  res.k = k;
  DmftKernels& K = res.kernels;
  K.Sigma = Mat::Zero(k * (T + 1), k * (T + 1));
  K.Omega = Mat::Zero(k * T, k * T);
  K.B = Mat::Zero(k * T, k * T);
  K.C = Mat::Zero(k * T, k * T);
  // E[t][s] = dW_t/dZ_s (deterministic), t > s.
  std::vector<std::vector<Mat>> E(T + 1, std::vector<Mat>(T, Mat::Zero(k, k)));

  // D tensors in float: index ((t(t+1)/2 + s) * N + i) * k*k.
  const std::size_t kk = static_cast<std::size_t>(k) * k;
  std::vector<float> D(static_cast<std::size_t>(T) * (T + 1) / 2 * N * kk);
  auto Didx = [&](int t, int s, Index i) {
    return ((static_cast<std::size_t>(t) * (t + 1) / 2 + s) * N + i) * kk;
  };

  GramSchmidt gsW(N, k * (T + 1)), gsU(N, k * T);
  std::vector<Vec> cW, cU;  // coefficient rows per (t, a)

  auto overlap_of = [&](const Mat& W) {
    const Mat EW = mean_outer(W, Wstar);
    const Vec m2 = W.colwise().squaredNorm().transpose() / static_cast<double>(N);
    Mat z(k, r);
    for (int a = 0; a < k; ++a)
      for (Index j = 0; j < r; ++j)
        z(a, j) = m2(a) > 0 ? std::min(1.0, std::abs(EW(a, j)) / std::sqrt(m2(a) * rho(j))) : 0.0;
    return z;
  };
  res.overlaps.push_back(overlap_of(Wp[0]));

  const int P = std::min<Index>(config.probes, N);
  res.probes.resize(P);

  for (int t = 0; t < T; ++t) {
    // Row side at time t.
    K.M_row.push_back(mean_outer(Wp[t], Wstar) * Gamma.asDiagonal() / alpha);
    for (int a = 0; a < k; ++a) cW.push_back(gsW.add(Wp[t].col(a), &K.degenerate_directions));
    for (int s = 0; s <= t; ++s) {
      const Mat blk = mean_outer(Wp[t], Wp[s]) / alpha;
      K.Sigma.block(k * t, k * s, k, k) = blk;
      K.Sigma.block(k * s, k * t, k, k) = blk.transpose();
    }
    for (int s = 0; s < t; ++s) K.B.block(k * t, k * s, k, k) = E[t][s] / alpha;

    const Mat& Mr = K.M_row.back();
    Mat Csum = deterministic_sum(N, k, k * (t + 1), [&](Index b, Index e, Mat& acc) {
      Vec y(k), field(k);
      for (Index i = b; i < e; ++i) {
        for (int a = 0; a < k; ++a) {
          const Vec& c = cW[k * t + a];
          double v = 0;
          for (Index j = 0; j < c.size(); ++j) v += c(j) * xi(i, j);
          y(a) = v / std::sqrt(alpha);
        }
        y += Mr * Ustar.row(i).transpose();
        Yp[t].row(i) = y.transpose();
        field = y;
        for (int s = 0; s < t; ++s) field += K.B.block(k * t, k * s, k, k) * Up[s].row(i).transpose();
        const Eta1Grad g = grad_eta1(field, 0.0, Vec(), model);
        const Mat H = hess_eta1(field, Vec(), model);
        Up[t].row(i) = g.dx.transpose();
        // D_ts = H_t (delta_ts I + sum_{a=s}^{t-1} B_ta D_as).
        for (int s = 0; s <= t; ++s) {
          Mat inner = (s == t) ? I : Mat::Zero(k, k);
          for (int a2 = s; a2 < t; ++a2) {
            const float* dp = &D[Didx(a2, s, i)];
            Mat Das(k, k);
            for (std::size_t q = 0; q < kk; ++q) Das.data()[q] = dp[q];
            inner += K.B.block(k * t, k * a2, k, k) * Das;
          }
          const Mat Dts = H * inner;
          float* out = &D[Didx(t, s, i)];
          for (std::size_t q = 0; q < kk; ++q) out[q] = static_cast<float>(Dts.data()[q]);
          acc.middleCols(k * s, k) += Dts;
        }
      }
    });
    Csum /= static_cast<double>(N);
    for (int s = 0; s <= t; ++s) K.C.block(k * t, k * s, k, k) = Csum.middleCols(k * s, k);

    for (int p = 0; p < P; ++p) {
      res.probes[p].Y.push_back(Yp[t].row(p).transpose());
      res.probes[p].U.push_back(Up[t].row(p).transpose());
      std::vector<Mat> row;
      for (int s = 0; s <= t; ++s) {
        Mat m(k, k);
        for (std::size_t q = 0; q < kk; ++q) m.data()[q] = D[Didx(t, s, p) + q];
        row.push_back(m);
      }
      res.probes[p].D.push_back(row);
    }

    // Column side.
    K.N_col.push_back(mean_outer(Up[t], Ustar) * Gamma.asDiagonal());
    for (int a = 0; a < k; ++a) cU.push_back(gsU.add(Up[t].col(a), &K.degenerate_directions));
    for (int s = 0; s <= t; ++s) {
      const Mat blk = mean_outer(Up[t], Up[s]);
      K.Omega.block(k * t, k * s, k, k) = blk;
      K.Omega.block(k * s, k * t, k, k) = blk.transpose();
    }
    const Mat Qt = mean_outer(Wp[t], Wp[t]);
    const Mat Qhat = 2.0 * grad_eta2(0.5 * (Qt + Qt.transpose()), model);
    K.Q_hat.push_back(Qhat);
    const Mat& Nc = K.N_col.back();
    parallel_for(N, [&](Index b, Index e) {
      Vec z(k), w(k);
      for (Index i = b; i < e; ++i) {
        for (int a = 0; a < k; ++a) {
          const Vec& c = cU[k * t + a];
          double v = 0;
          for (Index j = 0; j < c.size(); ++j) v += c(j) * zeta(i, j);
          z(a) = v;
        }
        z += Nc * Wstar.row(i).transpose();
        for (int s = 0; s <= t; ++s) z += K.C.block(k * t, k * s, k, k) * Wp[s].row(i).transpose();
        w = Wp[t].row(i).transpose();
        Wp[t + 1].row(i) = (w + kappa * (z - alpha * Qhat * w)).transpose();
      }
    });
    if (!Wp[t + 1].allFinite()) throw NumericalError("dmft_predict: non-finite population");
    // E_{t+1,s} = (I - kappa alpha Qhat_t) E_ts + kappa (delta_ts I + sum_{a=s+1}^{t} C_ta E_as).
    for (int s = 0; s <= t; ++s) {
      Mat nxt = (I - kappa * alpha * Qhat) * E[t][s];
      Mat mem_term = (s == t) ? I : Mat::Zero(k, k);
      for (int a2 = s + 1; a2 <= t; ++a2) mem_term += K.C.block(k * t, k * a2, k, k) * E[a2][s];
      E[t + 1][s] = nxt + kappa * mem_term;
    }
    res.overlaps.push_back(overlap_of(Wp[t + 1]));
  }
  return res;
}

std::vector<Vec> dmft_row_response(const DmftKernels& K, const std::vector<Vec>& Y,
                                   const EffectiveModel& model) {
  const int k = model.k();
  std::vector<Vec> U;
  for (std::size_t t = 0; t < Y.size(); ++t) {
    Vec field = Y[t];
    for (std::size_t s = 0; s < t; ++s) field += K.B.block(k * t, k * s, k, k) * U[s];
    U.push_back(grad_eta1(field, 0.0, Vec(), model).dx);
  }
  return U;
}

Mat dmft_fixed_point_overlap(const DmftResult& result, double tol, bool* converged) {
  require(!result.overlaps.empty(), "dmft_fixed_point_overlap: empty trajectory");
  const std::size_t n = result.overlaps.size();
  double moved = 0;
  for (std::size_t t = (n > 6 ? n - 6 : 0); t + 1 < n; ++t) {
    moved = std::max(moved, (result.overlaps[t + 1] - result.overlaps[t]).cwiseAbs().maxCoeff());
  }
  if (converged) *converged = n >= 6 && moved < tol;
  return result.overlaps.back();
}

}  // namespace rbm
