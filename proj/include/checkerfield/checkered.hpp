#ifndef CHECKERFIELD_CHECKERED_HPP
#define CHECKERFIELD_CHECKERED_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "checkerfield/error.hpp"
#include "checkerfield/geometry.hpp"

namespace checkerfield {

/// Relative vertex-merge tolerance (scaled by the domain diameter).
inline constexpr double kPointMergeTol = 1e-12;
/// Masses with magnitude at or below this are dropped.
inline constexpr double kMassDropTol = 1e-10;

// ---------------------------------------------------------------------------
// Checkered fields
// ---------------------------------------------------------------------------

struct Term {
  Box box;
  double value = 0.0;
};

/// Finite signed sum of characteristic functions of half-open boxes living in
/// a fixed domain box. Overlapping terms are allowed; their values add.
class CheckeredField {
 public:
  CheckeredField() = default;
  explicit CheckeredField(Box domain) : domain_(std::move(domain)) {}
  CheckeredField(Box domain, std::vector<Term> terms) : domain_(std::move(domain)) {
    for (auto& t : terms) add(std::move(t.box), t.value);
  }

  int dim() const { return domain_.dim(); }
  const Box& domain() const { return domain_; }
  const std::vector<Term>& terms() const { return terms_; }

  CheckeredField& add(Box box, double value) {
    if (box.dim() != dim()) throw Error(ErrorCode::InvalidArgument, "term dimension mismatch");
    if (!domain_.contains_box(box, 1e-12 * domain_.diameter()))
      throw Error(ErrorCode::InvalidArgument, "term box is not contained in the domain");
    terms_.push_back({std::move(box), value});
    return *this;
  }

  /// Value at x, which must lie in the half-open domain.
  double operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim() || !domain_.contains(x))
      throw Error(ErrorCode::PointOutsideDomain, "evaluation point is outside the domain");
    return value_or_zero(x);
  }

  /// Value at x with the field extended by zero outside its domain.
  double value_or_zero(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : terms_)
      if (t.box.contains(x)) s += t.value;
    return s;
  }

  CheckeredField scaled(double a) const {
    CheckeredField r(domain_);
    for (const auto& t : terms_) r.terms_.push_back({t.box, a * t.value});
    return r;
  }

  /// Linear combination a*this + b*other on the same domain.
  CheckeredField combined(double a, const CheckeredField& other, double b) const {
    CheckeredField r = scaled(a);
    for (const auto& t : other.terms_) r.add(t.box, b * t.value);
    return r;
  }

  /// Integral of the field over its domain.
  double integral() const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.value * t.box.volume();
    return s;
  }

 private:
  Box domain_;
  std::vector<Term> terms_;
};

inline double eval_field(const CheckeredField& field, std::span<const double> x) { return field(x); }

struct VectorTerm {
  Box box;
  std::vector<double> value;
};

/// Vector-valued checkered field; every component is a checkered function.
class VectorCheckeredField {
 public:
  VectorCheckeredField() = default;
  VectorCheckeredField(Box domain, int components) : domain_(std::move(domain)), components_(components) {}

  int dim() const { return domain_.dim(); }
  int components() const { return components_; }
  const Box& domain() const { return domain_; }
  const std::vector<VectorTerm>& terms() const { return terms_; }

  VectorCheckeredField& add(Box box, std::vector<double> value) {
    if (static_cast<int>(value.size()) != components_)
      throw Error(ErrorCode::InvalidArgument, "vector term has the wrong number of components");
    if (!domain_.contains_box(box, 1e-12 * domain_.diameter()))
      throw Error(ErrorCode::InvalidArgument, "term box is not contained in the domain");
    terms_.push_back({std::move(box), std::move(value)});
    return *this;
  }

  CheckeredField component(int k) const {
    CheckeredField f(domain_);
    for (const auto& t : terms_)
      if (t.value[k] != 0.0) f.add(t.box, t.value[k]);
    return f;
  }

  std::vector<double> operator()(std::span<const double> x) const {
    if (!domain_.contains(x)) throw Error(ErrorCode::PointOutsideDomain, "evaluation point is outside the domain");
    std::vector<double> v(components_, 0.0);
    for (const auto& t : terms_)
      if (t.box.contains(x))
        for (int k = 0; k < components_; ++k) v[k] += t.value[k];
    return v;
  }

 private:
  Box domain_;
  int components_ = 0;
  std::vector<VectorTerm> terms_;
};

// ---------------------------------------------------------------------------
// Point masses
// ---------------------------------------------------------------------------

struct MassNode {
  Point point;
  std::vector<double> mass;  // one entry for scalar fields
};

/// Finitely supported signed point masses, kept in lexicographic order.
/// Coinciding points (within merge_tol) are merged; masses whose largest
/// component falls to drop_tol or below are removed.
class PointMassField {
 public:
  PointMassField() = default;
  explicit PointMassField(int dim, int components = 1, double merge_tol = kPointMergeTol,
                          double drop_tol = kMassDropTol)
      : dim_(dim), components_(components), merge_tol_(merge_tol), drop_tol_(drop_tol) {}

  int dim() const { return dim_; }
  int components() const { return components_; }
  double merge_tol() const { return merge_tol_; }
  double drop_tol() const { return drop_tol_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<MassNode>& nodes() const { return nodes_; }
  auto begin() const { return nodes_.begin(); }
  auto end() const { return nodes_.end(); }

  void add(const Point& p, double mass) { add(p, std::span<const double>(&mass, 1)); }

  void add(const Point& p, std::span<const double> mass) {
    if (static_cast<int>(p.size()) != dim_ || static_cast<int>(mass.size()) != components_)
      throw Error(ErrorCode::InvalidArgument, "point mass shape mismatch");
    auto it = find_iter(p);
    if (it == nodes_.end()) {
      MassNode n{p, std::vector<double>(mass.begin(), mass.end())};
      if (magnitude(n.mass) <= drop_tol_) return;
      auto pos = std::lower_bound(nodes_.begin(), nodes_.end(), p,
                                  [](const MassNode& a, const Point& b) { return lex_less(a.point, b); });
      nodes_.insert(pos, std::move(n));
      return;
    }
    for (int k = 0; k < components_; ++k) it->mass[k] += mass[k];
    if (magnitude(it->mass) <= drop_tol_) nodes_.erase(it);
  }

  /// Mass at p (zero vector when absent).
  std::vector<double> at(const Point& p) const {
    auto it = const_cast<PointMassField*>(this)->find_iter(p);
    if (it == nodes_.end()) return std::vector<double>(components_, 0.0);
    return it->mass;
  }

  double scalar_at(const Point& p) const { return at(p)[0]; }

  bool contains(const Point& p) const {
    return const_cast<PointMassField*>(this)->find_iter(p) != nodes_.end();
  }

  std::vector<Point> support() const {
    std::vector<Point> s;
    s.reserve(nodes_.size());
    for (const auto& n : nodes_) s.push_back(n.point);
    return s;
  }

  PointMassField scaled(double a) const {
    PointMassField r(dim_, components_, merge_tol_, drop_tol_);
    for (const auto& n : nodes_) {
      std::vector<double> m = n.mass;
      for (double& v : m) v *= a;
      r.add(n.point, m);
    }
    return r;
  }

  /// this + a * other.
  PointMassField plus(const PointMassField& other, double a = 1.0) const {
    PointMassField r = *this;
    for (const auto& n : other.nodes_) {
      std::vector<double> m = n.mass;
      for (double& v : m) v *= a;
      r.add(n.point, m);
    }
    return r;
  }

  /// Scalar field holding component k.
  PointMassField component(int k) const {
    PointMassField r(dim_, 1, merge_tol_, drop_tol_);
    for (const auto& n : nodes_) r.add(n.point, n.mass[k]);
    return r;
  }

  static double magnitude(std::span<const double> m) {
    double s = 0.0;
    for (double v : m) s = std::max(s, std::abs(v));
    return s;
  }

  double max_magnitude() const {
    double s = 0.0;
    for (const auto& n : nodes_) s = std::max(s, magnitude(n.mass));
    return s;
  }

 private:
  std::vector<MassNode>::iterator find_iter(const Point& p) {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), p[0] - merge_tol_,
                               [](const MassNode& a, double x0) { return a.point[0] < x0; });
    for (; it != nodes_.end() && it->point[0] <= p[0] + merge_tol_; ++it)
      if (nearly_equal(it->point, p, merge_tol_)) return it;
    return nodes_.end();
  }

  int dim_ = 0;
  int components_ = 1;
  double merge_tol_ = kPointMergeTol;
  double drop_tol_ = kMassDropTol;
  std::vector<MassNode> nodes_;
};

/// True when both maps have the same support (within point_tol) and masses
/// agreeing within mass_tol.
inline bool approx_equal(const PointMassField& a, const PointMassField& b, double point_tol, double mass_tol) {
  auto covered = [&](const PointMassField& x, const PointMassField& y) {
    for (const auto& n : x) {
      bool found = false;
      for (const auto& m : y) {
        if (!nearly_equal(n.point, m.point, point_tol)) continue;
        found = true;
        for (std::size_t k = 0; k < n.mass.size(); ++k)
          if (std::abs(n.mass[k] - m.mass[k]) > mass_tol) return false;
      }
      if (!found && PointMassField::magnitude(n.mass) > mass_tol) return false;
    }
    return true;
  };
  return covered(a, b) && covered(b, a);
}

// ---------------------------------------------------------------------------
// Discretization and its inverse
// ---------------------------------------------------------------------------

namespace detail {

inline void add_box_corners(PointMassField& out, const Box& box, std::span<const double> value) {
  const int n = box.dim();
  std::vector<double> m(value.size());
  for (unsigned mask = 0; mask < (1U << n); ++mask) {
    const int lows = n - std::popcount(mask);
    const double sign = (lows % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t k = 0; k < value.size(); ++k) m[k] = sign * value[k];
    out.add(box.vertex(mask), m);
  }
}

/// Sorted distinct values with tolerance merging.
inline std::vector<double> distinct_sorted(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x > out.back() + tol) out.push_back(x);
  return out;
}

/// Calls fn(index) for every multi-index in [0, extent_0) x ... x [0, extent_{n-1})
/// in lexicographic order (last axis fastest).
inline void for_each_index(const std::vector<int>& extent, const std::function<void(const std::vector<int>&)>& fn) {
  for (int e : extent)
    if (e <= 0) return;
  std::vector<int> idx(extent.size(), 0);
  while (true) {
    fn(idx);
    int axis = static_cast<int>(extent.size()) - 1;
    while (axis >= 0 && ++idx[axis] == extent[axis]) idx[axis--] = 0;
    if (axis < 0) return;
  }
}

inline std::vector<Point> grid_product(const std::vector<std::vector<double>>& coords) {
  std::vector<int> extent;
  for (const auto& c : coords) extent.push_back(static_cast<int>(c.size()));
  std::vector<Point> out;
  for_each_index(extent, [&](const std::vector<int>& idx) {
    Point p(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) p[i] = coords[i][idx[i]];
    out.push_back(std::move(p));
  });
  return out;
}

}  // namespace detail

/// The discretization map: each term contributes value * sign to each of the
/// 2^n vertices of its box, sign = product over axes of (+1 at hi, -1 at lo).
inline PointMassField discretize(const CheckeredField& field) {
  PointMassField out(field.dim(), 1, kPointMergeTol * field.domain().diameter());
  for (const auto& t : field.terms()) detail::add_box_corners(out, t.box, std::span<const double>(&t.value, 1));
  return out;
}

inline PointMassField discretize(const VectorCheckeredField& field) {
  PointMassField out(field.dim(), field.components(), kPointMergeTol * field.domain().diameter());
  for (const auto& t : field.terms()) detail::add_box_corners(out, t.box, t.value);
  return out;
}

struct NodeReport {
  std::vector<Point> all_nodes;
  std::vector<Point> interesting;
  std::vector<Point> marked;
};

inline NodeReport classify_nodes(const CheckeredField& field) {
  const int n = field.dim();
  const double tol = kPointMergeTol * field.domain().diameter();
  NodeReport report;

  std::vector<std::vector<double>> coords(n);
  for (const auto& t : field.terms())
    for (int i = 0; i < n; ++i) {
      coords[i].push_back(t.box.lo(i));
      coords[i].push_back(t.box.hi(i));
    }
  for (auto& c : coords) c = detail::distinct_sorted(std::move(c), tol);
  report.all_nodes = detail::grid_product(coords);

  report.interesting = discretize(field).support();

  std::vector<std::vector<double>> marked(n);
  for (const auto& p : report.interesting)
    for (int i = 0; i < n; ++i) marked[i].push_back(p[i]);
  for (auto& c : marked) c = detail::distinct_sorted(std::move(c), tol);
  report.marked = detail::grid_product(marked);
  return report;
}

/// Inverse of discretize by corner peeling on the marked grid.
///
/// Cells of the marked grid are visited in lexicographic order; when cell i is
/// reached, its lower corner is touched by no other remaining cell, so the
/// residual mass there equals (-1)^n times the cell value. The cell's
/// contribution is then removed from its 2^n corners. Any residual left once
/// all cells are consumed means the input is not the image of a checkered field.
///
/// tol is relative to the largest input mass.
inline CheckeredField reconstruct_field(const PointMassField& pm, const Box& domain, double tol = kMassDropTol) {
  if (pm.components() != 1) throw Error(ErrorCode::InvalidArgument, "reconstruct_field expects scalar masses");
  const int n = domain.dim();
  if (pm.dim() != n) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  const double ptol = kPointMergeTol * domain.diameter();
  CheckeredField out(domain);
  if (pm.empty()) return out;

  for (const auto& node : pm)
    if (!domain.contains_closed(node.point, ptol))
      throw Error(ErrorCode::NotInImage, "point mass lies outside the domain closure");

  std::vector<std::vector<double>> coords(n);
  for (const auto& node : pm)
    for (int i = 0; i < n; ++i) coords[i].push_back(node.point[i]);
  for (auto& c : coords) c = detail::distinct_sorted(std::move(c), ptol);

  std::vector<int> node_extent(n), cell_extent(n), stride(n);
  std::size_t total = 1;
  for (int i = n - 1; i >= 0; --i) {
    node_extent[i] = static_cast<int>(coords[i].size());
    cell_extent[i] = node_extent[i] - 1;
    stride[i] = static_cast<int>(total);
    total *= node_extent[i];
  }
  auto locate = [&](double x, int axis) {
    const auto& c = coords[axis];
    auto it = std::lower_bound(c.begin(), c.end(), x - ptol);
    return static_cast<int>(it - c.begin());
  };

  std::vector<double> residual(total, 0.0);
  for (const auto& node : pm) {
    std::size_t flat = 0;
    for (int i = 0; i < n; ++i) flat += static_cast<std::size_t>(locate(node.point[i], i)) * stride[i];
    residual[flat] += node.mass[0];
  }

  const double sign_n = (n % 2 == 0) ? 1.0 : -1.0;
  detail::for_each_index(cell_extent, [&](const std::vector<int>& cell) {
    std::size_t base = 0;
    for (int i = 0; i < n; ++i) base += static_cast<std::size_t>(cell[i]) * stride[i];
    const double value = sign_n * residual[base];
    if (value == 0.0) return;
    for (unsigned mask = 0; mask < (1U << n); ++mask) {
      std::size_t flat = base;
      for (int i = 0; i < n; ++i)
        if ((mask >> i) & 1U) flat += stride[i];
      const int lows = n - std::popcount(mask);
      residual[flat] -= ((lows % 2 == 0) ? 1.0 : -1.0) * value;
    }
    if (std::abs(value) <= tol * std::max(1.0, pm.max_magnitude())) return;
    Point lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo[i] = coords[i][cell[i]];
      hi[i] = coords[i][cell[i] + 1];
    }
    out.add(Box(std::move(lo), std::move(hi)), value);
  });

  const double limit = tol * std::max(1.0, pm.max_magnitude());
  for (double r : residual)
    if (std::abs(r) > limit)
      throw Error(ErrorCode::NotInImage, "corner peeling left a nonzero residual mass");
  return out;
}

/// Component-wise inverse for vector masses.
inline VectorCheckeredField reconstruct_vector_field(const PointMassField& pm, const Box& domain,
                                                     double tol = kMassDropTol) {
  VectorCheckeredField out(domain, pm.components());
  for (int k = 0; k < pm.components(); ++k) {
    const CheckeredField ck = reconstruct_field(pm.component(k), domain, tol);
    for (const auto& t : ck.terms()) {
      std::vector<double> v(pm.components(), 0.0);
      v[k] = t.value;
      out.add(t.box, std::move(v));
    }
  }
  return out;
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_CHECKERED_HPP
