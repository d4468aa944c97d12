#ifndef CHECKERFIELD_GAUSS_HPP
#define CHECKERFIELD_GAUSS_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "checkerfield/error.hpp"

namespace checkerfield {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Nodes and weights mapped to [a, b].
  GaussRule mapped(double a, double b) const {
    GaussRule r;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    r.nodes.reserve(nodes.size());
    r.weights.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      r.nodes.push_back(mid + half * nodes[i]);
      r.weights.push_back(half * weights[i]);
    }
    return r;
  }
};

/// Newton iteration on P_n from the Chebyshev-like initial guesses.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "Gauss rule needs at least one node");
  GaussRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_GAUSS_HPP
