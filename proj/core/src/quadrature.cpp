#include "rbmlab/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "rbmlab/errors.hpp"

namespace rbm {

GaussRule gauss_hermite(int nodes) {
  require(nodes >= 1, "gauss_hermite: nodes must be >= 1");
  // Jacobi matrix of the monic probabilists' Hermite recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int i = 1; i < nodes; ++i) {
    J(i, i - 1) = J(i - 1, i) = std::sqrt(static_cast<double>(i));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussRule r;
  r.x.resize(nodes);
  r.w.resize(nodes);
  double total = 0.0;
  for (int i = 0; i < nodes; ++i) {
    r.x[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    r.w[i] = v * v;
    total += r.w[i];
  }
  for (double& w : r.w) w /= total;
  return r;
}

GaussRule dense_gaussian(int panels, double half_width) {
  require(panels >= 1 && half_width > 0, "dense_gaussian: bad arguments");
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const auto& ab = Rule::abscissa();
  const auto& wt = Rule::weights();
  GaussRule r;
  const double h = 2.0 * half_width / panels;
  const double norm = 1.0 / std::sqrt(2.0 * M_PI);
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = -half_width + (p + 0.5) * h;
    for (std::size_t j = 0; j < ab.size(); ++j) {
      // Boost stores the non-negative half of a symmetric rule.
      for (int s : {1, -1}) {
        if (s == -1 && ab[j] == 0.0) continue;
        const double x = mid + s * ab[j] * h / 2;
        const double w = wt[j] * h / 2 * norm * std::exp(-0.5 * x * x);
        r.x.push_back(x);
        r.w.push_back(w);
        total += w;
      }
    }
  }
  for (double& w : r.w) w /= total;
  return r;
}

GaussRule gaussian_on_interval(double a, double b, int panels) {
  require(panels >= 1 && b >= a, "gaussian_on_interval: bad arguments");
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const auto& ab = Rule::abscissa();
  const auto& wt = Rule::weights();
  GaussRule r;
  if (b == a) return r;
  const double h = (b - a) / panels;
  const double norm = 1.0 / std::sqrt(2.0 * M_PI);
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t j = 0; j < ab.size(); ++j) {
      for (int s : {1, -1}) {
        if (s == -1 && ab[j] == 0.0) continue;
        const double x = mid + s * ab[j] * h / 2;
        r.x.push_back(x);
        r.w.push_back(wt[j] * h / 2 * norm * std::exp(-0.5 * x * x));
      }
    }
  }
  return r;
}

}  // namespace rbm
