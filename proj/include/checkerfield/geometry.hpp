#ifndef CHECKERFIELD_GEOMETRY_HPP
#define CHECKERFIELD_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "checkerfield/error.hpp"

namespace checkerfield {

/// Points and directions are runtime-dimensional; the library is exercised
/// for n = 2 and n = 3 but nothing below assumes either.
using Point = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Point operator+(const Point& a, const Point& b) {
  Point r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline Point operator-(const Point& a, const Point& b) {
  Point r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline Point operator*(double s, const Point& a) {
  Point r(a);
  for (double& v : r) v *= s;
  return r;
}

inline Point normalized(const Point& a) {
  const double n = norm(a);
  if (n == 0.0) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero vector");
  return (1.0 / n) * a;
}

inline double distance(const Point& a, const Point& b) { return norm(a - b); }

inline Point cross(const Point& a, const Point& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Lexicographic comparison with an absolute tolerance per coordinate.
inline bool lex_less(const Point& a, const Point& b, double tol = 0.0) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i] - tol) return true;
    if (a[i] > b[i] + tol) return false;
  }
  return false;
}

inline bool nearly_equal(const Point& a, const Point& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

/// Half-open axis-aligned box [lo_1, hi_1) x ... x [lo_n, hi_n).
class Box {
 public:
  Box() = default;
  Box(Point lo, Point hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.empty())
      throw Error(ErrorCode::InvalidArgument, "box corners must have equal, nonzero length");
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      if (!(lo_[i] < hi_[i]))
        throw Error(ErrorCode::InvalidArgument,
                    "box must satisfy lo < hi on axis " + std::to_string(i));
    }
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }
  double lo(int i) const { return lo_[i]; }
  double hi(int i) const { return hi_[i]; }
  double width(int i) const { return hi_[i] - lo_[i]; }

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lo_.size(); ++i)
      if (!(lo_[i] <= x[i] && x[i] < hi_[i])) return false;
    return true;
  }

  /// Closed containment, used for node sets which live on the closure.
  bool contains_closed(std::span<const double> x, double tol = 0.0) const {
    for (std::size_t i = 0; i < lo_.size(); ++i)
      if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol) return false;
    return true;
  }

  bool contains_box(const Box& other, double tol = 0.0) const {
    for (std::size_t i = 0; i < lo_.size(); ++i)
      if (other.lo_[i] < lo_[i] - tol || other.hi_[i] > hi_[i] + tol) return false;
    return true;
  }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= width(i);
    return v;
  }

  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += width(i) * width(i);
    return std::sqrt(s);
  }

  Point center() const {
    Point c(lo_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
    return c;
  }

  /// Vertex selected by the bit mask: bit i set picks hi on axis i.
  Point vertex(unsigned mask) const {
    Point v(lo_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (mask >> i) & 1U ? hi_[i] : lo_[i];
    return v;
  }

  /// max over the closed box of (x, theta).
  double support(std::span<const double> theta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < lo_.size(); ++i) s += theta[i] * (theta[i] > 0 ? hi_[i] : lo_[i]);
    return s;
  }

  /// min over the closed box of (x, theta).
  double min_projection(std::span<const double> theta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < lo_.size(); ++i) s += theta[i] * (theta[i] > 0 ? lo_[i] : hi_[i]);
    return s;
  }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  Point lo_;
  Point hi_;
};

}  // namespace checkerfield

#endif  // CHECKERFIELD_GEOMETRY_HPP
