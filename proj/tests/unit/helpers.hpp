// Small fixtures shared by the unit tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>

#include "rbmlab/spiked_data.hpp"
#include "rbmlab/types.hpp"

namespace rbm::test {

inline Vec vec(std::initializer_list<double> l) {
  Vec v(static_cast<Index>(l.size()));
  Index i = 0;
  for (double x : l) v(i++) = x;
  return v;
}

inline SpikedDataset rademacher_data(Index d, double alpha, const Vec& Lambda, std::uint64_t seed) {
  const auto P = SpikePrior::rademacher(static_cast<int>(Lambda.size()));
  return sample_spiked(static_cast<Index>(std::lround(alpha * d)), d, P, P, Lambda, seed);
}

inline Mat gaussian_mat(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  KeyedRng rng(seed, 99, 0);
  Mat M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = scale * rng.gaussian();
  return M;
}

// Central difference of f at x along coordinate i.
inline double central_diff(const std::function<double(const Vec&)>& f, Vec x, Index i, double h = 1e-5) {
  const double x0 = x(i);
  x(i) = x0 + h;
  const double fp = f(x);
  x(i) = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2 * h);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace rbm::test
