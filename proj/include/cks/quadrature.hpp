#pragma once

// Gauss-Hermite rules for the variance-1/2 Gaussian e^{-x^2}/sqrt(pi), and
// tensor products of them.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cks/errors.hpp"

namespace cks {

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
  int order() const { return static_cast<int>(nodes.size()); }
  /// Largest polynomial degree integrated exactly.
  int exact_degree() const { return 2 * order() - 1; }
};

/// n-point rule; nodes from the Jacobi matrix, polished by Newton steps on
/// the orthonormal Hermite recurrence.
inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw InputError("gauss_hermite: order must be >= 1");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) jac(i, i - 1) = jac(i - 1, i) = std::sqrt(i / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  GaussHermiteRule rule;
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  for (int k = 0; k < n; ++k) {
    double x = es.eigenvalues()(k);
    double pp = 0.0;
    for (int it = 0; it < 8; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = x * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    rule.nodes.push_back(x);
    rule.weights.push_back(2.0 / (pp * pp) / std::sqrt(std::numbers::pi));
  }
  return rule;
}

/// Calls f(point, weight) over the dim-fold tensor product of `rule`.
template <class F>
void for_each_tensor_node(const GaussHermiteRule& rule, int dim, F&& f) {
  std::vector<int> idx(dim, 0);
  std::vector<double> point(dim);
  const int n = rule.order();
  for (;;) {
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      point[i] = rule.nodes[idx[i]];
      w *= rule.weights[idx[i]];
    }
    f(point, w);
    int i = 0;
    while (i < dim && ++idx[i] == n) idx[i++] = 0;
    if (i == dim) return;
  }
}

}  // namespace cks
