#ifndef CHECKERFIELD_PROBES_HPP
#define CHECKERFIELD_PROBES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "checkerfield/checkered.hpp"
#include "checkerfield/error.hpp"
#include "checkerfield/gauss.hpp"
#include "checkerfield/geometry.hpp"
#include "checkerfield/trace.hpp"

namespace checkerfield {

using Complex = std::complex<double>;

/// Admissibility margin: every |theta_l + i psi_l| must exceed this.
inline constexpr double kAdmissibleTol = 1e-6;
/// Largest exponent representable without overflow.
inline const double kMaxExponent = std::log(std::numeric_limits<double>::max());

// ---------------------------------------------------------------------------
// Scaled complex numbers
// ---------------------------------------------------------------------------

/// mantissa * exp(log_scale). Moments grow like exp(alpha * support), which
/// leaves the double range long before the reconstruction is done with them.
struct ScaledComplex {
  Complex mantissa{0.0, 0.0};
  double log_scale = 0.0;

  bool is_zero() const { return mantissa == Complex(0.0, 0.0); }

  double log_abs() const {
    return is_zero() ? -std::numeric_limits<double>::infinity() : std::log(std::abs(mantissa)) + log_scale;
  }

  /// Plain value; overflows to infinity when the scale is too large.
  Complex value() const {
    if (is_zero()) return {};
    return mantissa * std::exp(log_scale);
  }

  static ScaledComplex from(Complex v) { return {v, 0.0}; }

  ScaledComplex normalized() const {
    if (is_zero()) return {};
    const double m = std::abs(mantissa);
    const double e = std::log(m);
    return {mantissa / m, log_scale + e};
  }

  friend ScaledComplex operator*(const ScaledComplex& a, Complex b) { return {a.mantissa * b, a.log_scale}; }
  friend ScaledComplex operator*(Complex b, const ScaledComplex& a) { return a * b; }

  friend ScaledComplex operator+(const ScaledComplex& a, const ScaledComplex& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.log_scale >= b.log_scale) return {a.mantissa + b.mantissa * std::exp(b.log_scale - a.log_scale), a.log_scale};
    return {b.mantissa + a.mantissa * std::exp(a.log_scale - b.log_scale), b.log_scale};
  }

  friend ScaledComplex operator-(const ScaledComplex& a, const ScaledComplex& b) { return a + b * Complex(-1.0, 0.0); }
};

// ---------------------------------------------------------------------------
// Probe parameters
// ---------------------------------------------------------------------------

/// Parameters (alpha, theta, psi) of the harmonic exponential
/// e(x) = exp(alpha (theta, x) + i alpha (psi, x)), with theta, psi orthonormal.
class ProbeParams {
 public:
  ProbeParams(double alpha, Point theta, Point psi) : alpha_(alpha), theta_(std::move(theta)), psi_(std::move(psi)) {
    if (alpha_ == 0.0 || !std::isfinite(alpha_)) throw Error(ErrorCode::InvalidArgument, "alpha must be nonzero and finite");
    if (theta_.size() != psi_.size() || theta_.size() < 2)
      throw Error(ErrorCode::InvalidArgument, "theta and psi must share a dimension >= 2");
    if (std::abs(norm(theta_) - 1.0) > 1e-12 || std::abs(norm(psi_) - 1.0) > 1e-12)
      throw Error(ErrorCode::InvalidArgument, "theta and psi must be unit vectors");
    if (std::abs(dot(theta_, psi_)) > 1e-12) throw Error(ErrorCode::InvalidArgument, "theta and psi must be orthogonal");
  }

  double alpha() const { return alpha_; }
  const Point& theta() const { return theta_; }
  const Point& psi() const { return psi_; }
  int dim() const { return static_cast<int>(theta_.size()); }

  /// theta_l + i psi_l.
  Complex z(int l) const { return {theta_[l], psi_[l]}; }

  /// Exponent alpha (theta + i psi, x).
  Complex exponent(std::span<const double> x) const { return {alpha_ * dot(theta_, x), alpha_ * dot(psi_, x)}; }

  ProbeParams with_alpha(double alpha) const { return ProbeParams(alpha, theta_, psi_); }
  ProbeParams conjugated() const { return ProbeParams(alpha_, theta_, (-1.0) * psi_); }

 private:
  double alpha_;
  Point theta_;
  Point psi_;
};

inline Complex probe_eval(const ProbeParams& p, std::span<const double> x) {
  const Complex e = p.exponent(x);
  if (e.real() > kMaxExponent) throw Error(ErrorCode::Overflow, "probe exponent exceeds the floating-point range");
  return std::exp(e.real()) * Complex(std::cos(e.imag()), std::sin(e.imag()));
}

/// exp(exponent) for a probe value relative to exp(shift).
inline Complex scaled_exp(Complex exponent, double shift) {
  const double r = std::exp(exponent.real() - shift);
  return {r * std::cos(exponent.imag()), r * std::sin(exponent.imag())};
}

// ---------------------------------------------------------------------------
// Admissible pairs
// ---------------------------------------------------------------------------

inline double admissibility_margin(std::span<const double> theta, std::span<const double> psi) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < theta.size(); ++l) m = std::min(m, std::hypot(theta[l], psi[l]));
  return m;
}

/// True when the plane spanned by theta and psi is orthogonal to no coordinate axis.
inline bool is_admissible(std::span<const double> theta, std::span<const double> psi) {
  return admissibility_margin(theta, psi) > kAdmissibleTol;
}

/// Extra side condition imposed on psi by the curl probes.
enum class PairConstraint {
  none,
  elasticity23,  // theta_3 psi_2 - theta_2 psi_3 != 0 (curl of (e, 0, 0))
  elasticity13,  // theta_3 psi_1 - theta_1 psi_3 != 0 (curl of (0, e, 0))
};

inline double constraint_value(std::span<const double> theta, std::span<const double> psi, PairConstraint c) {
  switch (c) {
    case PairConstraint::none: return std::numeric_limits<double>::infinity();
    case PairConstraint::elasticity23: return theta[2] * psi[1] - theta[1] * psi[2];
    case PairConstraint::elasticity13: return theta[2] * psi[0] - theta[0] * psi[2];
  }
  return 0.0;
}

inline double pair_score(std::span<const double> theta, std::span<const double> psi, PairConstraint c) {
  return std::min(admissibility_margin(theta, psi), std::abs(constraint_value(theta, psi, c)));
}

namespace detail {

/// Fixed candidate list: all nonzero vectors with entries in {-1, 0, 1},
/// diagonal directions first.
inline std::vector<Point> psi_candidates(int n) {
  std::vector<Point> out;
  std::vector<int> extent(n, 3);
  for_each_index(extent, [&](const std::vector<int>& idx) {
    Point c(n);
    bool nonzero = false;
    for (int i = 0; i < n; ++i) {
      c[i] = static_cast<double>(idx[i]) - 1.0;
      nonzero = nonzero || c[i] != 0.0;
    }
    if (nonzero) out.push_back(std::move(c));
  });
  std::stable_sort(out.begin(), out.end(), [](const Point& a, const Point& b) {
    auto zeros = [](const Point& p) { return std::count(p.begin(), p.end(), 0.0); };
    return zeros(a) < zeros(b);
  });
  return out;
}

inline std::optional<Point> orthonormalize(const Point& c, const Point& theta) {
  Point v = c - dot(c, theta) * theta;
  const double nv = norm(v);
  if (nv < 1e-3) return std::nullopt;
  v = (1.0 / nv) * v;
  // One more Gram-Schmidt pass keeps orthogonality at round-off level.
  v = v - dot(v, theta) * theta;
  return normalized(v);
}

/// Random unit vector orthogonal to theta.
inline Point random_orthogonal(const Point& theta, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  while (true) {
    Point c(theta.size());
    for (double& v : c) v = gauss(rng);
    if (auto v = orthonormalize(c, theta)) return *v;
  }
}

}  // namespace detail

/// Chooses psi orthogonal to theta so that (theta, psi) is admissible and, if
/// requested, the curl side condition holds with margin kAdmissibleTol.
///
/// The fixed candidate list is projected onto the orthogonal complement of
/// theta and the best-scoring candidate kept; failing that, up to 16 random
/// small rotations of it within the complement are tried.
inline Point make_admissible_pair(const Point& theta, PairConstraint constraint = PairConstraint::none) {
  const int n = static_cast<int>(theta.size());
  if (n < 2 || std::abs(norm(theta) - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "theta must be a unit vector");
  if (constraint != PairConstraint::none && n != 3)
    throw Error(ErrorCode::InvalidArgument, "curl side conditions need dimension 3");

  if (n == 2) {
    Point psi{-theta[1], theta[0]};
    if (pair_score(theta, psi, constraint) > kAdmissibleTol) return psi;
    throw Error(ErrorCode::NoAdmissiblePsi, "no admissible psi in dimension 2");
  }

  std::optional<Point> best;
  double best_score = -1.0;
  for (const Point& c : detail::psi_candidates(n)) {
    auto v = detail::orthonormalize(c, theta);
    if (!v) continue;
    const double s = pair_score(theta, *v, constraint);
    if (s > best_score + 1e-12) {
      best_score = s;
      best = *v;
    }
  }
  if (best && best_score > kAdmissibleTol) return *best;

  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> small(-0.3, 0.3);
  Point base = best ? *best : detail::random_orthogonal(theta, rng);
  for (int attempt = 0; attempt < 16; ++attempt) {
    const Point other = detail::random_orthogonal(theta, rng);
    auto v = detail::orthonormalize(base + small(rng) * other, theta);
    if (v && pair_score(theta, *v, constraint) > kAdmissibleTol) return *v;
  }
  throw Error(ErrorCode::NoAdmissiblePsi, "no admissible psi found for the given theta");
}

/// A second psi for the same theta, spread away from `first`, maximizing
/// min(pair score, |sin(angle to first)|, extra(psi)).
template <typename Extra>
Point second_admissible_psi(const Point& theta, const Point& first, PairConstraint constraint, Extra&& extra) {
  const int n = static_cast<int>(theta.size());
  std::vector<Point> pool;
  if (n == 3) {
    const Point ortho = cross(theta, first);
    for (int k = 1; k < 24; ++k) {
      const double t = k * std::numbers::pi / 24.0;
      pool.push_back(normalized(std::cos(t) * first + std::sin(t) * ortho));
    }
  }
  for (const Point& c : detail::psi_candidates(n))
    if (auto v = detail::orthonormalize(c, theta)) pool.push_back(*v);

  std::optional<Point> best;
  double best_score = -1.0;
  for (const Point& v : pool) {
    const double c = dot(v, first);
    const double spread = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double s = std::min({pair_score(theta, v, constraint), spread, extra(v)});
    if (s > best_score + 1e-12) {
      best_score = s;
      best = v;
    }
  }
  if (!best || best_score <= kAdmissibleTol) throw Error(ErrorCode::NoAdmissiblePsi, "no second admissible psi");
  return *best;
}

inline Point second_admissible_psi(const Point& theta, const Point& first, PairConstraint constraint) {
  return second_admissible_psi(theta, first, constraint, [](const Point&) { return 1.0; });
}

// ---------------------------------------------------------------------------
// Probe kinds and closed-form pairings
// ---------------------------------------------------------------------------

/// Which test field a moment pairs the source with.
///   scalar  : e
///   curl_x  : curl(e, 0, 0)  = (0, a z3 e, -a z2 e)
///   curl_y  : curl(0, e, 0)  = (-a z3 e, 0, a z1 e)
///   grad    : grad e         = a z e, restricted to the components in mask
enum class ProbeKind { scalar, curl_x, curl_y, grad };

struct VectorProbe {
  ProbeKind kind = ProbeKind::scalar;
  unsigned component_mask = ~0U;

  PairConstraint constraint() const {
    switch (kind) {
      case ProbeKind::curl_x: return PairConstraint::elasticity23;
      case ProbeKind::curl_y: return PairConstraint::elasticity13;
      default: return PairConstraint::none;
    }
  }
  bool includes(int k) const { return (component_mask >> k) & 1U; }
};

inline const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::scalar: return "scalar";
    case ProbeKind::curl_x: return "curl-x";
    case ProbeKind::curl_y: return "curl-y";
    case ProbeKind::grad: return "grad";
  }
  return "?";
}

/// Constant C with P = C * sum_v q(v) e(v): alpha^-n prod(z_l)^-1 for scalar
/// probes, one power of alpha less for the vector ones.
inline Complex moment_prefactor(const ProbeParams& p, ProbeKind kind = ProbeKind::scalar) {
  const int n = p.dim();
  Complex prod(1.0, 0.0);
  for (int l = 0; l < n; ++l) prod *= p.z(l);
  const int power = kind == ProbeKind::scalar ? n : (kind == ProbeKind::grad ? n - 1 : 2);
  return 1.0 / (std::pow(p.alpha(), power) * prod);
}

/// Per-node weight q(v) of a mass vector for the given probe kind.
inline Complex node_weight(const VectorProbe& probe, std::span<const double> m, const ProbeParams& p) {
  switch (probe.kind) {
    case ProbeKind::scalar: return {m[0], 0.0};
    case ProbeKind::curl_x: return m[1] * p.z(2) - m[2] * p.z(1);
    case ProbeKind::curl_y: return m[2] * p.z(0) - m[0] * p.z(2);
    case ProbeKind::grad: {
      Complex s;
      for (std::size_t k = 0; k < m.size(); ++k)
        if (probe.includes(static_cast<int>(k))) s += m[k] * p.z(static_cast<int>(k));
      return s;
    }
  }
  return {};
}

/// Coefficients c_k with test field component k = c_k * e.
inline std::vector<Complex> test_field_coefficients(const VectorProbe& probe, const ProbeParams& p, int components) {
  std::vector<Complex> c(components, Complex{});
  const double a = p.alpha();
  switch (probe.kind) {
    case ProbeKind::scalar: c[0] = 1.0; break;
    case ProbeKind::curl_x:
      c[1] = a * p.z(2);
      c[2] = -a * p.z(1);
      break;
    case ProbeKind::curl_y:
      c[0] = -a * p.z(2);
      c[2] = a * p.z(0);
      break;
    case ProbeKind::grad:
      for (int k = 0; k < components; ++k)
        if (probe.includes(k)) c[k] = a * p.z(k);
      break;
  }
  return c;
}

inline void check_probe(const VectorProbe& probe, const ProbeParams& p, int components) {
  if (!is_admissible(p.theta(), p.psi())) throw Error(ErrorCode::NotAdmissible, "(theta, psi) is not admissible");
  if (probe.kind == ProbeKind::curl_x || probe.kind == ProbeKind::curl_y) {
    if (p.dim() != 3 || components != 3) throw Error(ErrorCode::InvalidArgument, "curl probes need a 3D vector field");
    if (std::abs(constraint_value(p.theta(), p.psi(), probe.constraint())) <= kAdmissibleTol)
      throw Error(ErrorCode::ConditionViolated, "curl side condition on (theta, psi) fails");
  }
  if (probe.kind == ProbeKind::grad && components != p.dim())
    throw Error(ErrorCode::InvalidArgument, "grad probes need one component per axis");
}

/// Closed-form pairing of point masses with a probe: C * sum_v q(v) e(v).
inline ScaledComplex moment_from_masses(const PointMassField& pm, const ProbeParams& p,
                                        const VectorProbe& probe = {}) {
  check_probe(probe, p, pm.components());
  if (pm.empty()) return {};
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& node : pm) shift = std::max(shift, p.alpha() * dot(p.theta(), node.point));
  Complex sum;
  for (const auto& node : pm) sum += node_weight(probe, node.mass, p) * scaled_exp(p.exponent(node.point), shift);
  return ScaledComplex{sum * moment_prefactor(p, probe.kind), shift}.normalized();
}

/// Closed-form moment of the scalar masses (the discretized field).
inline ScaledComplex moment_analytic(const PointMassField& pm, const ProbeParams& p) {
  if (pm.components() != 1) throw Error(ErrorCode::InvalidArgument, "moment_analytic expects scalar masses");
  return moment_from_masses(pm, p);
}

inline ScaledComplex vector_moment_analytic(const PointMassField& pm, const ProbeParams& p, const VectorProbe& probe) {
  return moment_from_masses(pm, p, probe);
}

// ---------------------------------------------------------------------------
// Volume quadrature
// ---------------------------------------------------------------------------

/// Gauss points per axis per panel.
inline constexpr int kPanelGaussPoints = 8;

/// Integral of e over a box by tensor Gauss-Legendre with panels sized so
/// that alpha * (panel diameter) <= 2.
inline ScaledComplex box_probe_integral(const Box& box, const ProbeParams& p) {
  const int n = box.dim();
  const double a = std::abs(p.alpha());
  static const GaussRule base = gauss_legendre(kPanelGaussPoints);

  std::vector<std::vector<double>> nodes(n), weights(n);
  for (int l = 0; l < n; ++l) {
    const int panels = std::max(1, static_cast<int>(std::ceil(a * box.width(l) * std::sqrt(double(n)) / 2.0)));
    const double h = box.width(l) / panels;
    for (int k = 0; k < panels; ++k) {
      const GaussRule r = base.mapped(box.lo(l) + k * h, box.lo(l) + (k + 1) * h);
      nodes[l].insert(nodes[l].end(), r.nodes.begin(), r.nodes.end());
      weights[l].insert(weights[l].end(), r.weights.begin(), r.weights.end());
    }
  }
  const double shift = p.alpha() > 0 ? p.alpha() * box.support(p.theta()) : p.alpha() * box.min_projection(p.theta());

  std::vector<int> extent(n);
  for (int l = 0; l < n; ++l) extent[l] = static_cast<int>(nodes[l].size());
  Complex sum;
  Point x(n);
  detail::for_each_index(extent, [&](const std::vector<int>& idx) {
    double w = 1.0;
    for (int l = 0; l < n; ++l) {
      x[l] = nodes[l][idx[l]];
      w *= weights[l][idx[l]];
    }
    sum += w * scaled_exp(p.exponent(x), shift);
  });
  return ScaledComplex{sum, shift}.normalized();
}

/// Volume moment (f, e) by quadrature; the brute-force check on the closed form.
inline ScaledComplex moment_quadrature(const CheckeredField& field, const ProbeParams& p) {
  ScaledComplex total;
  for (const auto& t : field.terms()) {
    if (t.value == 0.0) continue;
    total = total + box_probe_integral(t.box, p) * Complex(t.value, 0.0);
  }
  return total.normalized();
}

/// Volume pairing (F, test field) for a vector checkered field.
inline ScaledComplex vector_moment_quadrature(const VectorCheckeredField& field, const ProbeParams& p,
                                              const VectorProbe& probe) {
  const auto coeff = test_field_coefficients(probe, p, field.components());
  ScaledComplex total;
  for (const auto& t : field.terms()) {
    Complex c;
    for (int k = 0; k < field.components(); ++k) c += t.value[k] * coeff[k];
    if (c == Complex{}) continue;
    total = total + box_probe_integral(t.box, p) * c;
  }
  return total.normalized();
}

// ---------------------------------------------------------------------------
// Boundary (Green's formula) evaluation
// ---------------------------------------------------------------------------

inline void validate_trace(const BoundaryTrace& trace) {
  if (trace.samples.empty()) throw Error(ErrorCode::MalformedTrace, "trace has no samples");
  const int n = trace.gamma.dim();
  for (const auto& s : trace.samples) {
    if (static_cast<int>(s.point.size()) != n || static_cast<int>(s.normal.size()) != n)
      throw Error(ErrorCode::MalformedTrace, "sample point or normal has the wrong dimension");
    if (!(s.weight > 0.0) || !std::isfinite(s.weight)) throw Error(ErrorCode::MalformedTrace, "missing or nonpositive weight");
    if (std::abs(norm(s.normal) - 1.0) > 1e-9) throw Error(ErrorCode::MalformedTrace, "normal is not a unit vector");
  }
}

/// Sum over samples of w * (e phi2 - (grad e, nu) phi1), grad e = alpha (theta + i psi) e.
inline ScaledComplex moment_boundary(const BoundaryTrace& trace, const ProbeParams& p) {
  validate_trace(trace);
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& s : trace.samples) shift = std::max(shift, p.alpha() * dot(p.theta(), s.point));
  Complex sum;
  for (const auto& s : trace.samples) {
    const Complex e = scaled_exp(p.exponent(s.point), shift);
    const Complex dn = p.alpha() * Complex(dot(p.theta(), s.normal), dot(p.psi(), s.normal));
    sum += s.weight * (e * s.phi2 - dn * e * s.phi1);
  }
  return ScaledComplex{sum, shift}.normalized();
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_PROBES_HPP
