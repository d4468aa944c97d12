#include <gtest/gtest.h>

#include <random>

#include "checkerfield/checkered.hpp"
#include "checkerfield/presets.hpp"

using namespace checkerfield;

namespace {

Box unit_square() { return Box({0.0, 0.0}, {1.0, 1.0}); }

// Independent Upsilon oracle: sign of corner `mask` is (-1)^(number of lo coordinates).
std::vector<std::pair<Point, double>> corner_masses(const Box& b, double c) {
  std::vector<std::pair<Point, double>> out;
  const int n = b.dim();
  for (int mask = 0; mask < (1 << n); ++mask) {
    Point p(n);
    int lows = 0;
    for (int i = 0; i < n; ++i) {
      const bool hi = (mask >> i) & 1;
      p[i] = hi ? b.hi(i) : b.lo(i);
      lows += hi ? 0 : 1;
    }
    out.push_back({p, (lows % 2 == 0 ? 1.0 : -1.0) * c});
  }
  return out;
}

std::vector<Point> sample_points(const Box& domain, int count, std::mt19937_64& rng) {
  std::vector<Point> pts;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Point p(domain.dim());
    for (int i = 0; i < domain.dim(); ++i) p[i] = domain.lo(i) + u(rng) * domain.width(i);
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST(Box, HalfOpenMembership) {
  const Box b = unit_square();
  EXPECT_TRUE(b.contains(Point{0.0, 0.0}));
  EXPECT_TRUE(b.contains(Point{0.999, 0.5}));
  EXPECT_FALSE(b.contains(Point{1.0, 0.5}));
  EXPECT_FALSE(b.contains(Point{0.5, -1e-15}));
}

TEST(Box, RejectsEmptyAxis) {
  EXPECT_THROW(Box({0.0, 0.0}, {1.0, 0.0}), Error);
  EXPECT_THROW(Box({0.0}, {1.0, 1.0}), Error);
}

TEST(EvalField, SingleCoveringBox) {
  CheckeredField f(unit_square());
  f.add(unit_square(), 1.0);
  EXPECT_DOUBLE_EQ(eval_field(f, Point{0.5, 0.5}), 1.0);
}

TEST(EvalField, OverlapsAdd) {
  CheckeredField f(unit_square());
  f.add(unit_square(), 1.0).add(Box({0.0, 0.0}, {0.5, 0.5}), 2.0);
  EXPECT_DOUBLE_EQ(eval_field(f, Point{0.25, 0.25}), 3.0);
  EXPECT_DOUBLE_EQ(eval_field(f, Point{0.75, 0.25}), 1.0);
}

TEST(EvalField, HiEdgeIsOutsideDomain) {
  CheckeredField f(unit_square());
  f.add(unit_square(), 1.0);
  try {
    eval_field(f, Point{1.0, 0.5});
    FAIL() << "expected PointOutsideDomain";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointOutsideDomain);
  }
  CheckeredField g(Box({0.0, 0.0}, {2.0, 1.0}));
  g.add(unit_square(), 1.0);
  EXPECT_DOUBLE_EQ(eval_field(g, Point{1.0, 0.5}), 0.0);
}

TEST(EvalField, TermOutsideDomainRejected) {
  CheckeredField f(unit_square());
  EXPECT_THROW(f.add(Box({0.5, 0.5}, {1.5, 1.0}), 1.0), Error);
}

TEST(Discretize, UnitSquareSignPattern) {
  CheckeredField f(unit_square());
  f.add(unit_square(), 1.0);
  const PointMassField pm = discretize(f);
  ASSERT_EQ(pm.size(), 4u);
  EXPECT_DOUBLE_EQ(pm.scalar_at({0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(pm.scalar_at({1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(pm.scalar_at({1.0, 0.0}), -1.0);
  EXPECT_DOUBLE_EQ(pm.scalar_at({0.0, 1.0}), -1.0);
}

TEST(Discretize, TwoAdjacentBoxes) {
  CheckeredField f(Box({0.0, 0.0}, {2.0, 1.0}));
  f.add(Box({0.0, 0.0}, {1.0, 1.0}), 2.0).add(Box({1.0, 0.0}, {2.0, 1.0}), 3.0);
  const PointMassField pm = discretize(f);
  ASSERT_EQ(pm.size(), 6u);
  EXPECT_DOUBLE_EQ(pm.scalar_at({0, 0}), 2.0);
  EXPECT_DOUBLE_EQ(pm.scalar_at({0, 1}), -2.0);
  EXPECT_DOUBLE_EQ(pm.scalar_at({1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(pm.scalar_at({1, 1}), -1.0);
  EXPECT_DOUBLE_EQ(pm.scalar_at({2, 0}), -3.0);
  EXPECT_DOUBLE_EQ(pm.scalar_at({2, 1}), 3.0);
}

TEST(Discretize, ZeroRepresentationIsEmpty) {
  CheckeredField f(Box({0.0, 0.0}, {2.0, 1.0}));
  f.add(Box({0, 0}, {2, 1}), 1.0).add(Box({0, 0}, {1, 1}), -1.0).add(Box({1, 0}, {2, 1}), -1.0);
  EXPECT_TRUE(discretize(f).empty());
}

TEST(Discretize, MatchesCornerOracleOnRandomFields) {
  std::mt19937_64 rng(7);
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 20; ++trial) {
      const CheckeredField f = random_field({dim, 5, 5.0, 8, 2}, rng);
      PointMassField oracle(dim, 1, 1e-12);
      for (const auto& t : f.terms())
        for (const auto& [p, m] : corner_masses(t.box, t.value)) oracle.add(p, m);
      EXPECT_TRUE(approx_equal(discretize(f), oracle, 1e-12, 1e-12));
    }
  }
}

TEST(Discretize, Linearity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CheckeredField f = random_field({2, 4, 5.0, 8, 2}, rng);
    CheckeredField g(f.domain(), random_field({2, 4, 5.0, 8, 2}, rng).terms());
    const double a = 1.5, b = -0.25;
    const PointMassField lhs = discretize(f.combined(a, g, b));
    const PointMassField rhs = discretize(f).scaled(a).plus(discretize(g), b);
    EXPECT_TRUE(approx_equal(lhs, rhs, 1e-12, 1e-9));
  }
}

TEST(ClassifyNodes, UnitSquare) {
  CheckeredField f(unit_square());
  f.add(unit_square(), 1.0);
  const NodeReport r = classify_nodes(f);
  EXPECT_EQ(r.interesting.size(), 4u);
  EXPECT_EQ(r.marked.size(), 4u);
  EXPECT_EQ(r.all_nodes.size(), 4u);
}

TEST(ClassifyNodes, OctantFieldHasNonArtificialZeroNode) {
  // 1 on the positive and negative octants of [-1,1)^3.
  CheckeredField f(Box({-1, -1, -1}, {1, 1, 1}));
  f.add(Box({0, 0, 0}, {1, 1, 1}), 1.0).add(Box({-1, -1, -1}, {0, 0, 0}), 1.0);
  const PointMassField pm = discretize(f);
  const Point origin{0.0, 0.0, 0.0};
  EXPECT_FALSE(pm.contains(origin));
  // The value changes across x1 = 0 through the origin: (0.5,0.5,0.5) vs (-0.5,0.5,0.5).
  EXPECT_NE(f(Point{0.5, 0.5, 0.5}), f(Point{-0.5, 0.5, 0.5}));
  const NodeReport r = classify_nodes(f);
  bool listed = false;
  for (const auto& p : r.all_nodes) listed = listed || nearly_equal(p, origin, 1e-12);
  EXPECT_TRUE(listed);
}

TEST(ClassifyNodes, ArtificialLineIsNotInteresting) {
  CheckeredField f(Box({0, 0}, {2, 2}));
  f.add(Box({0, 0}, {2, 1}), 1.0).add(Box({0, 1}, {2, 2}), 1.0);
  const NodeReport r = classify_nodes(f);
  for (const auto& p : r.interesting) EXPECT_NE(p[1], 1.0);
  EXPECT_EQ(r.interesting.size(), 4u);
  EXPECT_EQ(r.all_nodes.size(), 6u);
}

TEST(ClassifyNodes, InterestingSubsetOfMarked) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const CheckeredField f = random_field({2, 5, 5.0, 8, 2}, rng);
    const NodeReport r = classify_nodes(f);
    for (const auto& p : r.interesting) {
      bool found = false;
      for (const auto& q : r.marked) found = found || nearly_equal(p, q, 1e-12);
      EXPECT_TRUE(found);
    }
  }
}

// Marked-node lemma by sampling: if the field changes across a coordinate
// hyperplane through a node, the node is marked.
TEST(ClassifyNodes, NonArtificialNodesAreMarked) {
  std::mt19937_64 rng(5);
  const double h = 1.0 / 64.0;
  for (int trial = 0; trial < 30; ++trial) {
    const CheckeredField f = random_field({2, 4, 5.0, 8, 2}, rng);
    const NodeReport r = classify_nodes(f);
    for (const auto& v : r.all_nodes) {
      bool changes = false;
      for (int axis = 0; axis < 2 && !changes; ++axis)
        for (int sx : {-1, 1})
          for (int sy : {-1, 1}) {
            Point a = v, b = v;
            a[0] += sx * h, a[1] += sy * h;
            b[0] += sx * h, b[1] += sy * h;
            b[axis] = v[axis] - (a[axis] - v[axis]);
            if (std::abs(f.value_or_zero(a) - f.value_or_zero(b)) > 1e-12) changes = true;
          }
      if (!changes) continue;
      bool marked = false;
      for (const auto& q : r.marked) marked = marked || nearly_equal(v, q, 1e-12);
      EXPECT_TRUE(marked) << "node (" << v[0] << ", " << v[1] << ")";
    }
  }
}

TEST(ReconstructField, UnitSquareRoundTrip) {
  CheckeredField f(unit_square());
  f.add(unit_square(), 1.0);
  const CheckeredField g = reconstruct_field(discretize(f), f.domain());
  EXPECT_DOUBLE_EQ(g(Point{0.5, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(g(Point{0.0, 0.0}), 1.0);
}

TEST(ReconstructField, SixPointMassMap) {
  PointMassField pm(2);
  pm.add({0, 0}, 2.0);
  pm.add({0, 1}, -2.0);
  pm.add({1, 0}, 1.0);
  pm.add({1, 1}, -1.0);
  pm.add({2, 0}, -3.0);
  pm.add({2, 1}, 3.0);
  const CheckeredField g = reconstruct_field(pm, Box({0, 0}, {2, 1}));
  EXPECT_NEAR(g(Point{0.5, 0.5}), 2.0, 1e-12);
  EXPECT_NEAR(g(Point{1.5, 0.5}), 3.0, 1e-12);
}

TEST(ReconstructField, SingleCornerIsNotInImage) {
  PointMassField pm(2);
  pm.add({0, 0}, 1.0);
  try {
    reconstruct_field(pm, unit_square());
    FAIL() << "expected NotInImage";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInImage);
  }
}

TEST(ReconstructField, EmptyGivesZeroField) {
  const CheckeredField g = reconstruct_field(PointMassField(2), unit_square());
  EXPECT_TRUE(g.terms().empty());
}

TEST(ReconstructField, RandomRoundTrip) {
  std::mt19937_64 rng(2024);
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 50; ++trial) {
      const CheckeredField f = random_field({dim, 5, 5.0, 8, 2}, rng);
      const CheckeredField g = reconstruct_field(discretize(f), f.domain());
      for (const auto& x : sample_points(f.domain(), 200, rng)) EXPECT_NEAR(g(x), f(x), 1e-9);
    }
  }
}

TEST(ReconstructField, VectorRoundTrip) {
  VectorCheckeredField f(Box({0, 0, 0}, {1, 1, 1}), 3);
  f.add(Box({0.25, 0.25, 0.25}, {0.75, 0.5, 0.625}), {1.0, 2.0, 3.0});
  f.add(Box({0.5, 0.125, 0.25}, {0.875, 0.75, 0.75}), {0.0, -1.5, 0.5});
  const VectorCheckeredField g = reconstruct_vector_field(discretize(f), f.domain());
  std::mt19937_64 rng(9);
  for (const auto& x : sample_points(f.domain(), 200, rng)) {
    const auto a = f(x), b = g(x);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
  }
}

TEST(PointMassField, MergesAndDrops) {
  PointMassField pm(2, 1, 1e-9);
  pm.add({0.5, 0.5}, 1.0);
  pm.add({0.5 + 1e-12, 0.5}, 2.0);
  EXPECT_EQ(pm.size(), 1u);
  EXPECT_DOUBLE_EQ(pm.scalar_at({0.5, 0.5}), 3.0);
  pm.add({0.5, 0.5}, -3.0);
  EXPECT_TRUE(pm.empty());
  pm.add({0.1, 0.1}, 1e-12);
  EXPECT_TRUE(pm.empty());
}
