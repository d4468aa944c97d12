#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "checkerfield/forward.hpp"
#include "checkerfield/gauss.hpp"
#include "checkerfield/presets.hpp"
#include "checkerfield/probes.hpp"

using namespace checkerfield;

namespace {

// Brute-force oracle: tensor Gauss of (1/2pi) ln|x - y| over each term box,
// valid for y away from the boxes.
double potential_oracle(const CheckeredField& f, const Point& y) {
  const GaussRule g = gauss_legendre(24);
  double u = 0.0;
  for (const auto& t : f.terms()) {
    const int panels = 8;
    for (int px = 0; px < panels; ++px)
      for (int py = 0; py < panels; ++py) {
        const double hx = t.box.width(0) / panels, hy = t.box.width(1) / panels;
        const GaussRule rx = g.mapped(t.box.lo(0) + px * hx, t.box.lo(0) + (px + 1) * hx);
        const GaussRule ry = g.mapped(t.box.lo(1) + py * hy, t.box.lo(1) + (py + 1) * hy);
        for (std::size_t i = 0; i < rx.nodes.size(); ++i)
          for (std::size_t j = 0; j < ry.nodes.size(); ++j)
            u += t.value * rx.weights[i] * ry.weights[j] *
                 std::log(std::hypot(rx.nodes[i] - y[0], ry.nodes[j] - y[1]));
      }
  }
  return u / (2.0 * std::numbers::pi);
}

double stencil_laplacian(const CheckeredField& f, const Point& y, double h) {
  double s = -4.0 * potential(f, y);
  for (int l = 0; l < 2; ++l) {
    Point a = y, b = y;
    a[l] += h;
    b[l] -= h;
    s += potential(f, a) + potential(f, b);
  }
  return s / (h * h);
}

CheckeredField two_box_field() {
  CheckeredField f(Box({0, 0}, {2, 2}));
  f.add(Box({0.3, 0.4}, {0.9, 1.1}), 1.5).add(Box({0.7, 0.2}, {1.6, 0.8}), -0.75);
  return f;
}

}  // namespace

TEST(Potential, ZeroField) {
  CheckeredField f(Box({0, 0}, {1, 1}));
  EXPECT_EQ(potential(f, Point{0.3, 0.2}), 0.0);
  const auto g = potential_gradient(f, Point{0.3, 0.2});
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
}

TEST(Potential, MonopoleAsymptotics) {
  const double eps = 1e-2;
  CheckeredField f(Box({-1, -1}, {1, 1}));
  f.add(Box({-eps, -eps}, {eps, eps}), 1.0);
  const double area = 4.0 * eps * eps;
  const double r = 1e3 * eps;
  const double expected = area / (2.0 * std::numbers::pi) * std::log(r);
  const double u = potential(f, Point{r * 0.6, r * 0.8});
  EXPECT_LT(std::abs(u - expected) / std::abs(expected), 1e-4);
}

TEST(Potential, MatchesQuadratureOracleOutside) {
  const CheckeredField f = two_box_field();
  for (const Point& y : {Point{1.9, 1.9}, Point{0.1, 1.8}, Point{1.5, 1.5}, Point{0.05, 0.05}})
    EXPECT_NEAR(potential(f, y), potential_oracle(f, y), 1e-10);
}

TEST(Potential, StencilLaplacianIsCharge) {
  const CheckeredField f = two_box_field();
  // Inside only the first box, inside the overlap, inside only the second.
  EXPECT_NEAR(stencil_laplacian(f, Point{0.5, 1.0}, 1e-4), 1.5, 1e-4);
  EXPECT_NEAR(stencil_laplacian(f, Point{0.8, 0.6}, 1e-4), 0.75, 1e-4);
  EXPECT_NEAR(stencil_laplacian(f, Point{1.3, 0.5}, 1e-4), -0.75, 1e-4);
}

TEST(Potential, HarmonicOutsideCharges) {
  const CheckeredField f = two_box_field();
  for (const Point& y : {Point{1.9, 1.9}, Point{0.1, 1.8}, Point{1.5, 1.5}})
    EXPECT_LE(std::abs(stencil_laplacian(f, y, 1e-3)), 1e-6);
}

TEST(PotentialGradient, MatchesCentralDifferences) {
  const CheckeredField f = two_box_field();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  int checked = 0;
  while (checked < 30) {
    const Point y{u(rng), u(rng)};
    if (f.value_or_zero(y) != 0.0) continue;
    bool near_edge = false;
    for (const auto& t : f.terms())
      for (int l = 0; l < 2; ++l)
        near_edge = near_edge || std::abs(y[l] - t.box.lo(l)) < 1e-2 || std::abs(y[l] - t.box.hi(l)) < 1e-2;
    if (near_edge) continue;
    const auto g = potential_gradient(f, y);
    const double h = 1e-5;
    for (int l = 0; l < 2; ++l) {
      Point a = y, b = y;
      a[l] += h;
      b[l] -= h;
      EXPECT_NEAR(g[l], (potential(f, a) - potential(f, b)) / (2.0 * h), 1e-6);
    }
    ++checked;
  }
}

TEST(PotentialGradient, SymmetryOnAxis) {
  CheckeredField f(Box({-2, -2}, {2, 2}));
  f.add(Box({-0.5, -0.5}, {0.5, 0.5}), 1.0);
  const auto g = potential_gradient(f, Point{1.3, 0.0});
  EXPECT_LT(std::abs(g[1]), 1e-10 * std::abs(g[0]));
  EXPECT_GT(g[0], 0.0);
}

TEST(PotentialGradient, OnSingularEdge) {
  const CheckeredField f = two_box_field();
  try {
    potential_gradient(f, Point{0.3, 0.6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OnSingularEdge);
  }
}

TEST(BoundaryTrace, WeightsNormalsAndFlux) {
  const CheckeredField f = fig1_field();
  const BoundaryTrace t = boundary_trace(f, f.domain(), 64, 8);
  ASSERT_EQ(t.samples.size(), 256u);
  EXPECT_NEAR(trace_perimeter(t), 14.0, 14.0 * 1e-10);
  for (const auto& s : t.samples) {
    EXPECT_NEAR(norm(s.normal), 1.0, 1e-15);
    EXPECT_TRUE(s.normal[0] == 0.0 || s.normal[1] == 0.0);
  }
  EXPECT_LT(std::abs(trace_flux(t) - f.integral()) / f.integral(), 1e-6);
}

TEST(BoundaryTrace, ZeroFieldIsZeroTrace) {
  CheckeredField f(Box({0, 0}, {1, 1}));
  const BoundaryTrace t = boundary_trace(f, f.domain(), 16, 2);
  for (const auto& s : t.samples) {
    EXPECT_EQ(s.phi1, 0.0);
    EXPECT_EQ(s.phi2, 0.0);
  }
}

TEST(BoundaryTrace, ClearanceEnforced) {
  CheckeredField f(Box({0, 0}, {1, 1}));
  f.add(Box({0.0, 0.2}, {0.5, 0.5}), 1.0);
  try {
    boundary_trace(f, f.domain(), 16, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BoxTouchesBoundary);
  }
}

TEST(BoundaryTrace, LinearInField) {
  const CheckeredField f = fig1_field();
  const BoundaryTrace a = boundary_trace(f, f.domain(), 32, 4);
  const BoundaryTrace b = boundary_trace(f.scaled(-2.5), f.domain(), 32, 4);
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    EXPECT_NEAR(b.samples[k].phi1, -2.5 * a.samples[k].phi1, 1e-12);
    EXPECT_NEAR(b.samples[k].phi2, -2.5 * a.samples[k].phi2, 1e-12);
  }
}

TEST(BoundaryTrace, GreenIdentityAtSmallAlpha) {
  const CheckeredField f = fig1_field();
  const BoundaryTrace t = boundary_trace(f, f.domain(), 64, 8);
  for (double alpha : {0.25, 0.5, 1.0, 2.0}) {
    for (const Point& theta : {Point{1.0, 0.0}, normalized(Point{1.0, 2.0}), normalized(Point{-3.0, 1.0})}) {
      const ProbeParams p(alpha, theta, make_admissible_pair(theta));
      const Complex b = moment_boundary(t, p).value(), v = moment_quadrature(f, p).value();
      EXPECT_LT(std::abs(b - v) / std::abs(v), 1e-4) << "alpha=" << alpha;
    }
  }
}

TEST(BoundaryTrace, RefinementConvergence) {
  const CheckeredField f = fig1_field();
  const BoundaryTrace coarse = boundary_trace(f, f.domain(), 64, 8);
  const BoundaryTrace fine = boundary_trace(f, f.domain(), 128, 16);
  for (double alpha : {0.5, 1.0}) {
    const Point theta = normalized(Point{2.0, 1.0});
    const ProbeParams p(alpha, theta, make_admissible_pair(theta));
    const Complex a = moment_boundary(coarse, p).value(), b = moment_boundary(fine, p).value();
    EXPECT_LT(std::abs(a - b) / std::abs(b), 1e-6);
  }
}

TEST(AddNoise, ZeroLevelAndDeterminism) {
  const CheckeredField f = fig1_field();
  const BoundaryTrace t = boundary_trace(f, f.domain(), 16, 2);
  const BoundaryTrace same = add_noise(t, 0.0, 3);
  for (std::size_t k = 0; k < t.samples.size(); ++k) EXPECT_EQ(same.samples[k].phi1, t.samples[k].phi1);
  const BoundaryTrace a = add_noise(t, 1e-3, 42), b = add_noise(t, 1e-3, 42), c = add_noise(t, 1e-3, 43);
  bool differs = false;
  for (std::size_t k = 0; k < t.samples.size(); ++k) {
    EXPECT_EQ(a.samples[k].phi1, b.samples[k].phi1);
    EXPECT_EQ(a.samples[k].phi2, b.samples[k].phi2);
    EXPECT_NEAR(a.samples[k].phi1, t.samples[k].phi1, 1e-2 * std::abs(t.samples[k].phi1));
    differs = differs || a.samples[k].phi1 != c.samples[k].phi1;
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(add_noise(t, -1.0, 1), Error);
}
