#ifndef CHECKERFIELD_FORWARD_HPP
#define CHECKERFIELD_FORWARD_HPP

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "checkerfield/checkered.hpp"
#include "checkerfield/gauss.hpp"
#include "checkerfield/trace.hpp"

namespace checkerfield {

// Free-space kernel G(x) = ln|x| / (2 pi), so that Laplacian u = f for
// u = G * f. Box integrals use the antiderivative
//   L(X, Y) = X Y ln(X^2 + Y^2) - 3 X Y + X^2 atan(Y/X) + Y^2 atan(X/Y)
// of ln(X^2 + Y^2), whose X^2 atan(Y/X) terms extend continuously by 0.

namespace detail {

inline double x2_atan(double x, double y) { return x == 0.0 ? 0.0 : x * x * std::atan(y / x); }
inline double x_atan(double x, double y) { return x == 0.0 ? 0.0 : x * std::atan(y / x); }
inline double xy_log(double x, double y) {
  const double r2 = x * x + y * y;
  return r2 == 0.0 ? 0.0 : x * y * std::log(r2);
}
inline double y_log(double x, double y) {
  const double r2 = x * x + y * y;
  return r2 == 0.0 ? 0.0 : y * std::log(r2);
}

inline double log_box_antiderivative(double x, double y) {
  return xy_log(x, y) - 3.0 * x * y + x2_atan(x, y) + x2_atan(y, x);
}

/// d/dX of the antiderivative: integral over Y of ln(X^2 + Y^2).
inline double log_box_dx(double x, double y) { return y_log(x, y) - 2.0 * y + 2.0 * x_atan(x, y); }

inline void require_2d(const CheckeredField& field) {
  if (field.dim() != 2) throw Error(ErrorCode::InvalidArgument, "the forward solver is two-dimensional");
}

}  // namespace detail

/// Newtonian potential of a 2D checkered charge at y.
inline double potential(const CheckeredField& field, std::span<const double> y) {
  detail::require_2d(field);
  double u = 0.0;
  for (const auto& t : field.terms()) {
    double s = 0.0;
    for (unsigned mask = 0; mask < 4; ++mask) {
      const double x = ((mask & 1U) ? t.box.hi(0) : t.box.lo(0)) - y[0];
      const double z = ((mask & 2U) ? t.box.hi(1) : t.box.lo(1)) - y[1];
      const double sign = (std::popcount(mask) % 2 == 0) ? 1.0 : -1.0;
      s += sign * detail::log_box_antiderivative(x, z);
    }
    u += t.value * s;
  }
  return u / (4.0 * std::numbers::pi);
}

/// Analytic gradient of the potential. Undefined on term-box edges, where the
/// closed form switches branches.
inline std::array<double, 2> potential_gradient(const CheckeredField& field, std::span<const double> y) {
  detail::require_2d(field);
  constexpr double kEdgeTol = 1e-12;
  std::array<double, 2> g{0.0, 0.0};
  for (const auto& t : field.terms()) {
    const Box& b = t.box;
    for (int axis = 0; axis < 2; ++axis) {
      const int other = 1 - axis;
      const bool on_line = std::abs(y[axis] - b.lo(axis)) <= kEdgeTol || std::abs(y[axis] - b.hi(axis)) <= kEdgeTol;
      if (on_line && y[other] >= b.lo(other) - kEdgeTol && y[other] <= b.hi(other) + kEdgeTol)
        throw Error(ErrorCode::OnSingularEdge, "gradient requested on a term-box edge");
    }
    double gx = 0.0, gy = 0.0;
    for (unsigned mask = 0; mask < 4; ++mask) {
      const double x = ((mask & 1U) ? b.hi(0) : b.lo(0)) - y[0];
      const double z = ((mask & 2U) ? b.hi(1) : b.lo(1)) - y[1];
      const double sign = (std::popcount(mask) % 2 == 0) ? 1.0 : -1.0;
      gx += sign * detail::log_box_dx(x, z);
      gy += sign * detail::log_box_dx(z, x);
    }
    // d/dy = -d/dX of the corner offsets.
    g[0] -= t.value * gx;
    g[1] -= t.value * gy;
  }
  g[0] /= 4.0 * std::numbers::pi;
  g[1] /= 4.0 * std::numbers::pi;
  return g;
}

/// Cauchy data of the free-space potential sampled on the boundary of gamma
/// by composite Gauss rules (points_per_edge split evenly over the panels).
inline BoundaryTrace boundary_trace(const CheckeredField& field, const Box& gamma, int points_per_edge,
                                    int panels_per_edge) {
  detail::require_2d(field);
  if (gamma.dim() != 2) throw Error(ErrorCode::InvalidArgument, "gamma must be a rectangle");
  if (panels_per_edge < 1 || points_per_edge < panels_per_edge || points_per_edge % panels_per_edge != 0)
    throw Error(ErrorCode::InvalidArgument, "points_per_edge must be a positive multiple of panels_per_edge");
  constexpr double kClearance = 1e-6;
  for (const auto& t : field.terms())
    for (int i = 0; i < 2; ++i)
      if (t.box.lo(i) < gamma.lo(i) + kClearance || t.box.hi(i) > gamma.hi(i) - kClearance)
        throw Error(ErrorCode::BoxTouchesBoundary, "charged box is too close to the boundary");

  const GaussRule rule = gauss_legendre(points_per_edge / panels_per_edge);
  const double x0 = gamma.lo(0), x1 = gamma.hi(0), y0 = gamma.lo(1), y1 = gamma.hi(1);
  struct Edge {
    Point start, dir, normal;
    double length;
  };
  const std::array<Edge, 4> edges{{
      {{x0, y0}, {1, 0}, {0, -1}, x1 - x0},
      {{x1, y0}, {0, 1}, {1, 0}, y1 - y0},
      {{x1, y1}, {-1, 0}, {0, 1}, x1 - x0},
      {{x0, y1}, {0, -1}, {-1, 0}, y1 - y0},
  }};

  BoundaryTrace trace{gamma, {}};
  trace.samples.reserve(4 * points_per_edge);
  for (int e = 0; e < 4; ++e) {
    const Edge& edge = edges[e];
    const double h = edge.length / panels_per_edge;
    for (int k = 0; k < panels_per_edge; ++k) {
      const GaussRule r = rule.mapped(k * h, (k + 1) * h);
      for (std::size_t q = 0; q < r.nodes.size(); ++q) {
        TraceSample s;
        s.edge_id = e;
        s.s = r.nodes[q];
        s.point = edge.start + s.s * edge.dir;
        s.normal = edge.normal;
        s.weight = r.weights[q];
        s.phi1 = potential(field, s.point);
        const auto g = potential_gradient(field, s.point);
        s.phi2 = g[0] * s.normal[0] + g[1] * s.normal[1];
        trace.samples.push_back(std::move(s));
      }
    }
  }
  return trace;
}

/// Multiplies each phi by (1 + rel_level * xi), xi standard normal from a
/// generator seeded with `seed`.
inline BoundaryTrace add_noise(const BoundaryTrace& trace, double rel_level, std::uint64_t seed) {
  if (!(rel_level >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise level must be nonnegative");
  BoundaryTrace out = trace;
  if (rel_level == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> xi;
  for (auto& s : out.samples) {
    s.phi1 *= 1.0 + rel_level * xi(rng);
    s.phi2 *= 1.0 + rel_level * xi(rng);
  }
  return out;
}

/// Sum of w * phi2, which equals the total charge by the divergence theorem.
inline double trace_flux(const BoundaryTrace& trace) {
  double s = 0.0;
  for (const auto& x : trace.samples) s += x.weight * x.phi2;
  return s;
}

inline double trace_perimeter(const BoundaryTrace& trace) {
  double s = 0.0;
  for (const auto& x : trace.samples) s += x.weight;
  return s;
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_FORWARD_HPP
