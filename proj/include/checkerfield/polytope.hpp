#ifndef CHECKERFIELD_POLYTOPE_HPP
#define CHECKERFIELD_POLYTOPE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "checkerfield/error.hpp"
#include "checkerfield/geometry.hpp"

namespace checkerfield {

/// {x : (x, normal) <= offset}, normal a unit vector.
struct Halfspace {
  Point normal;
  double offset = 0.0;
};

/// Convex polytope K = intersection of half-spaces, with its vertex list.
/// In 2D the vertices are in counter-clockwise order.
struct Polytope {
  int dim = 0;
  std::vector<Point> vertices;
  std::vector<Halfspace> halfspaces;

  Point centroid() const {
    Point c(dim, 0.0);
    for (const auto& v : vertices) c = c + v;
    return (1.0 / static_cast<double>(std::max<std::size_t>(1, vertices.size()))) * c;
  }
};

/// Area of a 2D polytope (shoelace over the ordered vertices).
inline double polygon_area(const Polytope& k) {
  if (k.dim != 2 || k.vertices.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < k.vertices.size(); ++i) {
    const auto& p = k.vertices[i];
    const auto& q = k.vertices[(i + 1) % k.vertices.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(a);
}

namespace detail {

/// Sutherland-Hodgman step for a convex polygon (any dimension, planar loop).
inline std::vector<Point> clip_loop(const std::vector<Point>& loop, const Halfspace& h, double eps,
                                    std::vector<Point>* on_plane) {
  std::vector<Point> out;
  const std::size_t m = loop.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Point& a = loop[i];
    const Point& b = loop[(i + 1) % m];
    const double da = dot(h.normal, a) - h.offset;
    const double db = dot(h.normal, b) - h.offset;
    if (da <= eps) {
      out.push_back(a);
      if (on_plane && std::abs(da) <= eps) on_plane->push_back(a);
    }
    if ((da < -eps && db > eps) || (da > eps && db < -eps)) {
      const double t = da / (da - db);
      Point x = a + t * (b - a);
      if (on_plane) on_plane->push_back(x);
      out.push_back(std::move(x));
    }
  }
  return out;
}

inline std::vector<Point> dedupe(const std::vector<Point>& pts, double tol) {
  std::vector<Point> out;
  for (const auto& p : pts) {
    bool seen = false;
    for (const auto& q : out)
      if (distance(p, q) <= tol) {
        seen = true;
        break;
      }
    if (!seen) out.push_back(p);
  }
  return out;
}

/// Orders coplanar points around their centroid (plane normal n).
inline std::vector<Point> order_in_plane(std::vector<Point> pts, const Point& n) {
  if (pts.size() < 3) return pts;
  Point c(3, 0.0);
  for (const auto& p : pts) c = c + p;
  c = (1.0 / pts.size()) * c;
  Point seed = std::abs(n[0]) < 0.9 ? Point{1, 0, 0} : Point{0, 1, 0};
  Point u = normalized(seed - dot(seed, n) * n);
  Point v = cross(n, u);
  std::sort(pts.begin(), pts.end(), [&](const Point& a, const Point& b) {
    const Point da = a - c, db = b - c;
    return std::atan2(dot(da, v), dot(da, u)) < std::atan2(dot(db, v), dot(db, u));
  });
  return pts;
}

struct Face {
  std::vector<Point> loop;
  int tag = -1;
};

inline std::vector<Face> box_faces(const Box& b) {
  auto v = [&](unsigned m) { return b.vertex(m); };
  // Bit i of the mask selects hi on axis i.
  return {
      {{v(0), v(2), v(6), v(4)}, -1}, {{v(1), v(5), v(7), v(3)}, -1},
      {{v(0), v(4), v(5), v(1)}, -1}, {{v(2), v(3), v(7), v(6)}, -1},
      {{v(0), v(1), v(3), v(2)}, -1}, {{v(4), v(6), v(7), v(5)}, -1},
  };
}

}  // namespace detail

/// Intersection of the half-spaces with a bounding box, by successive
/// clipping. Vertices closer than merge_tol are merged. Offsets are relaxed
/// by 1e-3 * merge_tol so that a point- or edge-like intersection still
/// yields vertices instead of an empty face list.
inline Polytope intersect_halfspaces(std::vector<Halfspace> halfspaces, const Box& bounds, double merge_tol) {
  const int n = bounds.dim();
  const double eps = 1e-12 * std::max(1.0, bounds.diameter());
  for (auto& h : halfspaces) h.offset += 1e-3 * merge_tol;
  Polytope k;
  k.dim = n;
  if (n == 2) {
    std::vector<Point> poly{bounds.vertex(0), bounds.vertex(1), bounds.vertex(3), bounds.vertex(2)};
    for (const auto& h : halfspaces) {
      poly = detail::clip_loop(poly, h, eps, nullptr);
      if (poly.empty()) throw Error(ErrorCode::DegenerateHull, "half-space intersection is empty");
    }
    // Merge consecutive near-duplicates, keeping the cyclic order.
    std::vector<Point> merged;
    for (const auto& p : poly) {
      bool dup = false;
      for (const auto& q : merged)
        if (distance(p, q) <= merge_tol) dup = true;
      if (!dup) merged.push_back(p);
    }
    k.vertices = std::move(merged);
  } else if (n == 3) {
    std::vector<detail::Face> faces = detail::box_faces(bounds);
    for (std::size_t hi = 0; hi < halfspaces.size(); ++hi) {
      const auto& h = halfspaces[hi];
      std::vector<detail::Face> next;
      std::vector<Point> cap;
      for (const auto& f : faces) {
        auto loop = detail::clip_loop(f.loop, h, eps, &cap);
        loop = detail::dedupe(loop, eps);
        if (loop.size() >= 3) next.push_back({std::move(loop), f.tag});
      }
      cap = detail::dedupe(cap, eps);
      if (cap.size() >= 3) next.push_back({detail::order_in_plane(std::move(cap), h.normal), static_cast<int>(hi)});
      if (next.empty()) throw Error(ErrorCode::DegenerateHull, "half-space intersection is empty");
      faces = std::move(next);
    }
    std::vector<Point> all;
    for (const auto& f : faces) all.insert(all.end(), f.loop.begin(), f.loop.end());
    k.vertices = detail::dedupe(all, merge_tol);
  } else {
    throw Error(ErrorCode::InvalidArgument, "half-space intersection is implemented for n = 2, 3");
  }
  if (k.vertices.empty()) throw Error(ErrorCode::DegenerateHull, "half-space intersection has no vertices");
  k.halfspaces = halfspaces;
  return k;
}

/// (theta, w_j) - max_{k != j} (theta, w_k); +inf for a single vertex.
inline double separation_margin(const Polytope& k, std::size_t j, const Point& theta) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k.vertices.size(); ++i)
    if (i != j) best = std::max(best, dot(theta, k.vertices[i]));
  return dot(theta, k.vertices[j]) - best;
}

/// Direction theta(j) exposing vertex j: (theta, w_j) beats every other
/// vertex by more than tau_sep. Candidates are the centroid direction and the
/// mean normal of the half-spaces active at w_j (the better one wins), then
/// random perturbations of the latter.
inline Point separating_direction(const Polytope& k, std::size_t j, double tau_sep = 1e-6, double active_tol = 1e-9) {
  if (k.vertices.empty() || j >= k.vertices.size()) throw Error(ErrorCode::InvalidArgument, "vertex index out of range");
  const int n = k.dim;
  if (k.vertices.size() == 1) {
    Point e(n, 0.0);
    e[0] = 1.0;
    return e;
  }
  const Point& w = k.vertices[j];
  std::vector<Point> candidates;
  const Point c = w - k.centroid();
  if (norm(c) > 0.0) candidates.push_back(normalized(c));
  Point mean(n, 0.0);
  int active = 0;
  for (const auto& h : k.halfspaces)
    if (std::abs(dot(h.normal, w) - h.offset) <= active_tol) {
      mean = mean + h.normal;
      ++active;
    }
  if (active > 0 && norm(mean) > 0.0) candidates.push_back(normalized(mean));

  std::optional<Point> best;
  double best_margin = -std::numeric_limits<double>::infinity();
  for (const auto& t : candidates) {
    const double m = separation_margin(k, j, t);
    if (m > best_margin) {
      best_margin = m;
      best = t;
    }
  }
  if (best && best_margin > tau_sep) return *best;

  std::mt19937_64 rng(0xc0ffeeULL + j);
  std::normal_distribution<double> g;
  const Point base = best ? *best : (1.0 / std::sqrt(double(n))) * Point(n, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Point t = base;
    for (double& v : t) v += 0.5 * g(rng);
    if (norm(t) == 0.0) continue;
    t = normalized(t);
    if (separation_margin(k, j, t) > tau_sep) return t;
  }
  throw Error(ErrorCode::NoSeparation, "no direction separates the vertex from the rest of the polytope");
}

/// Fibonacci lattice on the unit sphere.
inline std::vector<Point> fibonacci_sphere(int count) {
  std::vector<Point> out;
  out.reserve(count);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    out.push_back({r * std::cos(phi), r * std::sin(phi), z});
  }
  return out;
}

/// Uniform angles on the unit circle.
inline std::vector<Point> circle_directions(int count) {
  std::vector<Point> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * std::numbers::pi * i / count;
    out.push_back({std::cos(t), std::sin(t)});
  }
  return out;
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_POLYTOPE_HPP
