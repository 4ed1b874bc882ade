// Expectation rules for a standard Gaussian: E f(G) ~ sum_i w_i f(x_i).
#pragma once

#include <vector>

namespace rbm {

struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
};

// Probabilists' Gauss-Hermite via Golub-Welsch; weights sum to 1.
GaussRule gauss_hermite(int nodes);

// Composite Gauss-Legendre on [-half_width, half_width] with the Gaussian
// density folded into the weights, renormalized to sum to 1. Resolves
// integrands with sharp features, which plain Gauss-Hermite does not.
GaussRule dense_gaussian(int panels = 400, double half_width = 12.0);

}  // namespace rbm

namespace rbm {

// Weights of phi(x) dx on [a, b] by composite Gauss-Legendre, not renormalized.
GaussRule gaussian_on_interval(double a, double b, int panels);

}  // namespace rbm
