#ifndef CHECKERFIELD_NULL_SPACE_HPP
#define CHECKERFIELD_NULL_SPACE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "checkerfield/error.hpp"
#include "checkerfield/gauss.hpp"
#include "checkerfield/geometry.hpp"
#include "checkerfield/parallel.hpp"

namespace checkerfield {

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

inline double ball_volume(int n, double r) { return unit_ball_volume(n) * std::pow(r, n); }

/// Piecewise-constant radial field: values[i] on the layer
/// radii[i] <= |x| < radii[i+1]. A vector field repeats the value in each of
/// its n components.
struct RadialLayerField {
  int dim = 2;
  std::vector<double> radii;
  std::vector<double> values;
  bool vector = false;

  void validate() const {
    if (dim < 2) throw Error(ErrorCode::InvalidArgument, "radial fields need n >= 2");
    if (radii.size() < 2 || values.size() + 1 != radii.size())
      throw Error(ErrorCode::BadRadii, "need k + 1 radii for k layer values");
    if (radii[0] < 0.0) throw Error(ErrorCode::BadRadii, "radii must be nonnegative");
    for (std::size_t i = 1; i < radii.size(); ++i)
      if (!(radii[i] > radii[i - 1])) throw Error(ErrorCode::BadRadii, "radii must be strictly increasing");
  }

  int components() const { return vector ? dim : 1; }
  std::size_t layers() const { return values.size(); }
  double outer_radius() const { return radii.back(); }

  double value_at_radius(double r) const {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (r >= radii[i] && r < radii[i + 1]) return values[i];
    return 0.0;
  }
};

/// u = Vol(B) chi_A - Vol(A) chi_B with A = {|x| < rA}, B = {rA <= |x| < rB}:
/// orthogonal to every harmonic function on the ball of radius rB.
inline RadialLayerField scalar_null_field(double rA, double rB, int n) {
  if (!(rA > 0.0) || !(rB > rA)) throw Error(ErrorCode::BadRadii, "need 0 < rA < rB");
  const double vol_a = ball_volume(n, rA);
  const double vol_b = ball_volume(n, rB) - vol_a;
  RadialLayerField f{n, {0.0, rA, rB}, {vol_b, -vol_a}, false};
  f.validate();
  return f;
}

struct VectorNullField {
  double a = 0.0;
  double b = 0.0;
  RadialLayerField field;
};

/// F = 1 on |x| < r1, b on r1 <= |x| < r2, a on r2 <= |x| < r3, with (a, b)
/// killing both the r^n and r^(n+2) moments:
///   a (r3^m - r2^m) + b (r2^m - r1^m) + r1^m = 0   for m = n, n + 2.
inline VectorNullField vector_null_field(double r1, double r2, double r3, int n) {
  if (!(r1 > 0.0) || !(r2 > r1) || !(r3 > r2)) throw Error(ErrorCode::BadRadii, "need 0 < r1 < r2 < r3");
  auto row = [&](int m) {
    const double p1 = std::pow(r1, m), p2 = std::pow(r2, m), p3 = std::pow(r3, m);
    return std::array<double, 3>{p3 - p2, p2 - p1, -p1};
  };
  const auto e = row(n), g = row(n + 2);
  const double det = e[0] * g[1] - e[1] * g[0];
  if (std::abs(det) < 1e-12) throw Error(ErrorCode::SingularSystem, "moment system is singular");
  VectorNullField out;
  out.a = (e[2] * g[1] - e[1] * g[2]) / det;
  out.b = (e[0] * g[2] - e[2] * g[0]) / det;
  out.field = RadialLayerField{n, {0.0, r1, r2, r3}, {1.0, out.b, out.a}, true};
  out.field.validate();
  return out;
}

/// Residuals of the two moment equations satisfied by (a, b).
inline std::array<double, 2> vector_null_residuals(const VectorNullField& v, int n) {
  const double r1 = v.field.radii[1], r2 = v.field.radii[2], r3 = v.field.radii[3];
  std::array<double, 2> out{};
  for (int k = 0; k < 2; ++k) {
    const int m = n + 2 * k;
    out[k] = v.a * (std::pow(r3, m) - std::pow(r2, m)) + v.b * (std::pow(r2, m) - std::pow(r1, m)) + std::pow(r1, m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

/// A (possibly vector-valued) test function on R^n.
struct TestFunction {
  std::string name;
  int components = 1;
  std::function<void(std::span<const double>, std::span<double>)> eval;

  std::vector<double> operator()(std::span<const double> x) const {
    std::vector<double> out(components, 0.0);
    eval(x, out);
    return out;
  }
};

/// Scalar function with its Laplacian, for the biharmonic mean-value identity.
struct BiharmonicTest {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<double(std::span<const double>)> laplacian;
};

// ---------------------------------------------------------------------------
// Polar / spherical quadrature
// ---------------------------------------------------------------------------

/// Radial Gauss points per layer (or per ball) and angular resolution:
/// `angular` trapezoid points on the circle in 2D; `polar` Gauss points in
/// cos(theta) times `angular` azimuthal points in 3D.
struct QuadratureResolution {
  int radial = 64;
  int angular = 128;
  int polar = 32;

  static QuadratureResolution defaults(int n) {
    return n == 2 ? QuadratureResolution{64, 128, 0} : QuadratureResolution{32, 64, 32};
  }
  QuadratureResolution refined() const { return {2 * radial, 2 * angular, 2 * polar}; }
};

namespace detail {

/// Unit directions and weights for integration over the unit sphere S^{n-1}.
inline void sphere_rule(int n, const QuadratureResolution& q, std::vector<Point>& dirs, std::vector<double>& weights) {
  dirs.clear();
  weights.clear();
  if (n == 2) {
    const double w = 2.0 * std::numbers::pi / q.angular;
    for (int k = 0; k < q.angular; ++k) {
      const double t = w * k;
      dirs.push_back({std::cos(t), std::sin(t)});
      weights.push_back(w);
    }
  } else if (n == 3) {
    const GaussRule g = gauss_legendre(q.polar);
    const double w = 2.0 * std::numbers::pi / q.angular;
    for (int i = 0; i < q.polar; ++i) {
      const double c = g.nodes[i];
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int k = 0; k < q.angular; ++k) {
        const double t = w * k;
        dirs.push_back({s * std::cos(t), s * std::sin(t), c});
        weights.push_back(g.weights[i] * w);
      }
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "radial quadrature supports n = 2, 3");
  }
}

/// Integrand g(x) over the shell r0 <= |x - center| < r1.
template <typename G>
void shell_integrate(int n, const Point& center, double r0, double r1, const QuadratureResolution& q, G&& g) {
  std::vector<Point> dirs;
  std::vector<double> sw;
  sphere_rule(n, q, dirs, sw);
  const GaussRule radial = gauss_legendre(q.radial).mapped(r0, r1);
  Point x(n);
  for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
    const double r = radial.nodes[i];
    const double wr = radial.weights[i] * std::pow(r, n - 1);
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      for (int l = 0; l < n; ++l) x[l] = center[l] + r * dirs[k][l];
      g(x, wr * sw[k]);
    }
  }
}

}  // namespace detail

/// |int_{B(x,r)} f - w_n r^n f(x) - w_n r^(n+2) / (2 (n+2)) Laplacian f(x)|.
/// Vanishes for biharmonic f.
inline double mean_value_residual(const BiharmonicTest& f, const Point& x, double r, int n,
                                  QuadratureResolution q = QuadratureResolution::defaults(2)) {
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  if (n == 3 && q.polar == 0) q = QuadratureResolution::defaults(3);
  double integral = 0.0;
  detail::shell_integrate(n, x, 0.0, r, q, [&](const Point& y, double w) { integral += w * f.value(y); });
  const double wn = unit_ball_volume(n);
  return std::abs(integral - wn * std::pow(r, n) * f.value(x) -
                  wn * std::pow(r, n + 2) / (2.0 * (n + 2)) * f.laplacian(x));
}

/// Biharmonic test cases: harmonic polynomials and exponentials, |y|^2,
/// |y|^2 times harmonic functions and linear combinations of them.
inline std::vector<BiharmonicTest> biharmonic_samples(int n) {
  using S = std::span<const double>;
  std::vector<BiharmonicTest> out;
  auto r2 = [](S x) { return dot(x, x); };
  out.push_back({"x1^2 - x2^2", [](S x) { return x[0] * x[0] - x[1] * x[1]; }, [](S) { return 0.0; }});
  out.push_back({"Re exp(x1 + i x2)", [](S x) { return std::exp(x[0]) * std::cos(x[1]); }, [](S) { return 0.0; }});
  out.push_back({"|y|^2", r2, [n](S) { return 2.0 * n; }});
  // Delta(|y|^2 h) = 2 n h + 4 (y . grad h) + |y|^2 Delta h = (2n + 4d) h for h harmonic of degree d.
  out.push_back({"|y|^2 x1", [r2](S x) { return r2(x) * x[0]; }, [n](S x) { return (2.0 * n + 4.0) * x[0]; }});
  out.push_back({"|y|^2 x1 x2", [r2](S x) { return r2(x) * x[0] * x[1]; },
                 [n](S x) { return (2.0 * n + 8.0) * x[0] * x[1]; }});
  out.push_back({"|y|^2 (x1^2 - x2^2)", [r2](S x) { return r2(x) * (x[0] * x[0] - x[1] * x[1]); },
                 [n](S x) { return (2.0 * n + 8.0) * (x[0] * x[0] - x[1] * x[1]); }});
  out.push_back({"x1^4 - 3 x1^2 x2^2 (biharmonic)",
                 [](S x) { return std::pow(x[0], 4) - 3.0 * x[0] * x[0] * x[1] * x[1]; },
                 [](S x) { return 12.0 * x[0] * x[0] - 6.0 * x[1] * x[1] - 6.0 * x[0] * x[0]; }});
  out.push_back({"x1 Re exp(x1 + i x2)", [](S x) { return x[0] * std::exp(x[0]) * std::cos(x[1]); },
                 [](S x) { return 2.0 * std::exp(x[0]) * std::cos(x[1]); }});
  out.push_back({"2 + 3 x2 - |y|^2", [r2](S x) { return 2.0 + 3.0 * x[1] - r2(x); }, [n](S) { return -2.0 * n; }});
  out.push_back({"x1^2 x2 + 0.5 |y|^2 x2", [r2](S x) { return x[0] * x[0] * x[1] + 0.5 * r2(x) * x[1]; },
                 [n](S x) { return 2.0 * x[1] + 0.5 * (2.0 * n + 4.0) * x[1]; }});
  return out;
}

namespace detail {

/// A complex null vector z = theta + i psi (theta, psi orthonormal), so that
/// (z . x)^d and exp(z . x) are harmonic.
inline std::vector<std::vector<std::complex<double>>> null_vectors(int n, int count) {
  std::vector<std::vector<std::complex<double>>> out;
  for (int k = 0; k < count; ++k) {
    const double t = 0.37 + 1.1 * k;
    if (n == 2) {
      out.push_back({{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}});
    } else {
      const double p = 0.61 + 0.83 * k;
      const Point theta{std::sin(p) * std::cos(t), std::sin(p) * std::sin(t), std::cos(p)};
      Point seed = std::abs(theta[2]) < 0.9 ? Point{0, 0, 1} : Point{1, 0, 0};
      const Point psi = normalized(seed - dot(seed, theta) * theta);
      std::vector<std::complex<double>> z(3);
      for (int l = 0; l < 3; ++l) z[l] = {theta[l], psi[l]};
      out.push_back(z);
    }
  }
  return out;
}

inline std::complex<double> zdot(const std::vector<std::complex<double>>& z, std::span<const double> x) {
  std::complex<double> s;
  for (std::size_t l = 0; l < z.size(); ++l) s += z[l] * x[l];
  return s;
}

}  // namespace detail

enum class KernelKind { harmonic, navier };

/// Test functions from the kernel of the Laplacian (scalar) or of the Navier
/// operator Delta + alpha_lame grad div (vector). Harmonic: polynomials
/// Re/Im (z . x)^d up to degree 6, then exponentials Re/Im exp(0.7 z . x).
/// Navier: constants, rotations, alpha_lame-dependent quadratics
/// (x1^2 - (1 + alpha_lame) x2^2) e1, gradients of harmonic polynomials and
/// curl-type fields. The first `budget` samples are returned.
inline std::vector<TestFunction> kernel_samples(KernelKind kind, int n, int budget, double alpha_lame = 1.0) {
  if (budget < 1) throw Error(ErrorCode::InvalidArgument, "budget must be >= 1");
  if (n != 2 && n != 3) throw Error(ErrorCode::InvalidArgument, "kernel samples support n = 2, 3");
  using S = std::span<const double>;
  using D = std::span<double>;
  std::vector<TestFunction> out;
  const int families = n == 2 ? 1 : 3;
  const auto zs = detail::null_vectors(n, std::max(families, 5));

  if (kind == KernelKind::harmonic) {
    out.push_back({"1", 1, [](S, D o) { o[0] = 1.0; }});
    for (int d = 1; d <= 6; ++d)
      for (int f = 0; f < families; ++f) {
        const auto z = zs[f];
        const std::string tag = "(z" + std::to_string(f) + ".x)^" + std::to_string(d);
        out.push_back({"Re " + tag, 1, [z, d](S x, D o) { o[0] = std::pow(detail::zdot(z, x), d).real(); }});
        out.push_back({"Im " + tag, 1, [z, d](S x, D o) { o[0] = std::pow(detail::zdot(z, x), d).imag(); }});
      }
    for (std::size_t f = 0; f < zs.size(); ++f) {
      const auto z = zs[f];
      const std::string tag = "exp(0.7 z" + std::to_string(f) + ".x)";
      out.push_back({"Re " + tag, 1, [z](S x, D o) { o[0] = std::exp(0.7 * detail::zdot(z, x)).real(); }});
      out.push_back({"Im " + tag, 1, [z](S x, D o) { o[0] = std::exp(0.7 * detail::zdot(z, x)).imag(); }});
    }
  } else {
    const double a = alpha_lame;
    out.push_back({"e1", n, [](S, D o) { o[0] = 1.0; }});
    out.push_back({"(x1^2 - (1+a) x2^2) e1", n, [a](S x, D o) { o[0] = x[0] * x[0] - (1.0 + a) * x[1] * x[1]; }});
    out.push_back({"(x2^2 - (1+a) x1^2) e2", n, [a](S x, D o) { o[1] = x[1] * x[1] - (1.0 + a) * x[0] * x[0]; }});
    out.push_back({"rotation (-x2, x1)", n, [](S x, D o) {
                     o[0] = -x[1];
                     o[1] = x[0];
                   }});
    out.push_back({"e2", n, [](S, D o) { o[1] = 1.0; }});
    for (int d = 2; d <= 4; ++d) {
      const auto z = zs[d % zs.size()];
      // grad Re (z.x)^d = Re(d (z.x)^(d-1) z)
      out.push_back({"grad Re (z.x)^" + std::to_string(d), n, [z, d, n](S x, D o) {
                       const auto c = static_cast<double>(d) * std::pow(detail::zdot(z, x), d - 1);
                       for (int l = 0; l < n; ++l) o[l] = (c * z[l]).real();
                     }});
      if (n == 2) {
        out.push_back({"rot grad Im (z.x)^" + std::to_string(d), n, [z, d](S x, D o) {
                         const auto c = static_cast<double>(d) * std::pow(detail::zdot(z, x), d - 1);
                         o[0] = -(c * z[1]).imag();
                         o[1] = (c * z[0]).imag();
                       }});
      } else {
        // curl(h e3) = (d2 h, -d1 h, 0) for h = Im (z.x)^d.
        out.push_back({"curl(Im (z.x)^" + std::to_string(d) + " e3)", n, [z, d](S x, D o) {
                         const auto c = static_cast<double>(d) * std::pow(detail::zdot(z, x), d - 1);
                         o[0] = (c * z[1]).imag();
                         o[1] = -(c * z[0]).imag();
                         o[2] = 0.0;
                       }});
      }
    }
    out.push_back({"(x1, -x2) = grad (x1^2 - x2^2)/2", n, [](S x, D o) {
                     o[0] = x[0];
                     o[1] = -x[1];
                   }});
    if (n == 3) {
      out.push_back({"e3", n, [](S, D o) { o[2] = 1.0; }});
      out.push_back({"(x1^2 - (1+a) x3^2) e1", n, [a](S x, D o) { o[0] = x[0] * x[0] - (1.0 + a) * x[2] * x[2]; }});
    }
    for (std::size_t f = 0; f < zs.size(); ++f) {
      const auto z = zs[f];
      out.push_back({"grad Re exp(0.7 z" + std::to_string(f) + ".x)", n, [z, n](S x, D o) {
                       const auto e = 0.7 * std::exp(0.7 * detail::zdot(z, x));
                       for (int l = 0; l < n; ++l) o[l] = (e * z[l]).real();
                     }});
    }
  }
  if (static_cast<int>(out.size()) > budget) out.resize(budget);
  return out;
}

// ---------------------------------------------------------------------------
// Finite-difference oracles
// ---------------------------------------------------------------------------

/// Component-wise 5-point (7-point in 3D) Laplacian.
inline std::vector<double> stencil_laplacian(const TestFunction& f, const Point& x, double h) {
  const int n = static_cast<int>(x.size());
  std::vector<double> lap(f.components, 0.0);
  const auto c = f(x);
  for (int l = 0; l < n; ++l) {
    Point p = x, m = x;
    p[l] += h;
    m[l] -= h;
    const auto fp = f(p), fm = f(m);
    for (int k = 0; k < f.components; ++k) lap[k] += (fp[k] - 2.0 * c[k] + fm[k]) / (h * h);
  }
  return lap;
}

/// Delta U + alpha grad div U by central differences.
inline std::vector<double> stencil_navier(const TestFunction& u, const Point& x, double h, double alpha) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out = stencil_laplacian(u, x, h);
  for (int i = 0; i < n; ++i) {
    double gd = 0.0;  // d_i (div U) = sum_j d_i d_j U_j
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        Point p = x, m = x;
        p[i] += h;
        m[i] -= h;
        gd += (u(p)[j] - 2.0 * u(x)[j] + u(m)[j]) / (h * h);
      } else {
        Point pp = x, pm = x, mp = x, mm = x;
        pp[i] += h, pp[j] += h;
        pm[i] += h, pm[j] -= h;
        mp[i] -= h, mp[j] += h;
        mm[i] -= h, mm[j] -= h;
        gd += (u(pp)[j] - u(pm)[j] - u(mp)[j] + u(mm)[j]) / (4.0 * h * h);
      }
    }
    out[i] += alpha * gd;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pairings
// ---------------------------------------------------------------------------

/// int over layer i of (sum of components of) the test function, for every
/// layer: the pairing of the unit layer indicator with the test.
inline std::vector<double> layer_integrals(const RadialLayerField& field, const TestFunction& t,
                                           const QuadratureResolution& q) {
  field.validate();
  const int n = field.dim;
  if (t.components != field.components())
    throw Error(ErrorCode::InvalidArgument, "test function and field have different component counts");
  std::vector<double> out(field.layers(), 0.0);
  std::vector<double> v(t.components);
  const Point origin(n, 0.0);
  for (std::size_t i = 0; i < field.layers(); ++i) {
    double s = 0.0;
    detail::shell_integrate(n, origin, field.radii[i], field.radii[i + 1], q, [&](const Point& x, double w) {
      t.eval(x, v);
      double sum = 0.0;
      for (double c : v) sum += c;
      s += w * sum;
    });
    out[i] = s;
  }
  return out;
}

/// L2 norm of the test function over the ball |x| < outer radius of field.
inline double test_norm(const RadialLayerField& field, const TestFunction& t, const QuadratureResolution& q) {
  double s = 0.0;
  std::vector<double> v(t.components);
  detail::shell_integrate(field.dim, Point(field.dim, 0.0), 0.0, field.outer_radius(), q,
                          [&](const Point& x, double w) {
                            t.eval(x, v);
                            s += w * dot(v, v);
                          });
  return std::sqrt(s);
}

inline double field_norm(const RadialLayerField& field) {
  double s = 0.0;
  for (std::size_t i = 0; i < field.layers(); ++i)
    s += field.values[i] * field.values[i] *
         (ball_volume(field.dim, field.radii[i + 1]) - ball_volume(field.dim, field.radii[i]));
  return std::sqrt(s * field.components());
}

struct PairingEntry {
  std::string test;
  double pairing = 0.0;     // <field, h>
  double normalized = 0.0;  // |<field, h>| / (|field| |h|)
};

struct OrthogonalityReport {
  std::vector<PairingEntry> entries;
  double max_normalized = 0.0;
  QuadratureResolution resolution;
  double threshold = 1e-6;
  bool pass = false;
};

/// max over tests of |<field, h>| / (|field| |h|) by polar/spherical quadrature.
inline OrthogonalityReport orthogonality_report(const RadialLayerField& field, const std::vector<TestFunction>& tests,
                                                std::optional<QuadratureResolution> resolution = std::nullopt,
                                                double threshold = 1e-6) {
  field.validate();
  const QuadratureResolution q = resolution.value_or(QuadratureResolution::defaults(field.dim));
  OrthogonalityReport rep;
  rep.resolution = q;
  rep.threshold = threshold;
  rep.entries.resize(tests.size());
  const double fn = field_norm(field);
  parallel_for(tests.size(), [&](std::size_t k) {
    const auto li = layer_integrals(field, tests[k], q);
    double p = 0.0;
    for (std::size_t i = 0; i < li.size(); ++i) p += field.values[i] * li[i];
    const double hn = test_norm(field, tests[k], q);
    rep.entries[k] = {tests[k].name, p, (fn > 0.0 && hn > 0.0) ? std::abs(p) / (fn * hn) : 0.0};
  });
  for (const auto& e : rep.entries) rep.max_normalized = std::max(rep.max_normalized, e.normalized);
  rep.pass = rep.max_normalized < threshold;
  return rep;
}

/// Rows: tests; columns: layers; entry = integral of the test over the layer.
/// Null vectors of this matrix are layer values orthogonal to every test.
inline Eigen::MatrixXd layer_pairing_matrix(const std::vector<double>& radii, int n, bool vector,
                                            const std::vector<TestFunction>& tests,
                                            std::optional<QuadratureResolution> resolution = std::nullopt) {
  RadialLayerField shape{n, radii, std::vector<double>(radii.size() - 1, 1.0), vector};
  shape.validate();
  const QuadratureResolution q = resolution.value_or(QuadratureResolution::defaults(n));
  Eigen::MatrixXd m(tests.size(), shape.layers());
  std::vector<std::vector<double>> rows(tests.size());
  parallel_for(tests.size(), [&](std::size_t k) {
    auto li = layer_integrals(shape, tests[k], q);
    const double hn = test_norm(shape, tests[k], q);
    for (double& v : li) v /= (hn > 0.0 ? hn : 1.0);
    rows[k] = std::move(li);
  });
  for (std::size_t k = 0; k < tests.size(); ++k)
    for (std::size_t i = 0; i < shape.layers(); ++i) m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = rows[k][i];
  return m;
}

struct NullSpaceDimension {
  int layers = 0;
  int rank = 0;
  int dimension = 0;  // layers - rank
  std::vector<double> singular_values;
};

/// Numerical rank with a relative singular-value cut.
inline NullSpaceDimension null_space_dimension(const Eigen::MatrixXd& m, double rel_tol = 1e-8) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  NullSpaceDimension out;
  out.layers = static_cast<int>(m.cols());
  const auto& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i) out.singular_values.push_back(sv(i));
  const double top = sv.size() ? sv(0) : 0.0;
  for (double s : out.singular_values)
    if (s > rel_tol * top) ++out.rank;
  out.dimension = out.layers - out.rank;
  return out;
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_NULL_SPACE_HPP
