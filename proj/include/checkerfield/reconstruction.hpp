#ifndef CHECKERFIELD_RECONSTRUCTION_HPP
#define CHECKERFIELD_RECONSTRUCTION_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "checkerfield/checkered.hpp"
#include "checkerfield/error.hpp"
#include "checkerfield/geometry.hpp"
#include "checkerfield/parallel.hpp"
#include "checkerfield/polytope.hpp"
#include "checkerfield/probes.hpp"
#include "checkerfield/sources.hpp"

namespace checkerfield {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// alpha_k = alpha0 * ratio^k, k = 0 .. count-1.
struct AlphaGrid {
  double alpha0 = 0.5;
  double ratio = 1.3;
  int count = 25;

  double at(int k) const { return alpha0 * std::pow(ratio, k); }

  std::vector<double> values(int extra = 0) const {
    std::vector<double> v;
    v.reserve(count + extra);
    for (int k = 0; k < count + extra; ++k) v.push_back(at(k));
    return v;
  }
};

struct ReconstructionConfig {
  AlphaGrid alpha_grid;
  int directions = 0;  // 0 picks 180 in 2D and 400 in 3D
  int slope_window = 8;
  double tol_value = 1e-6;
  double tol_hull = 1e-3;  // relative to the domain diameter
  double tau_sep = 1e-6;
  int max_peel_rounds = 20;
  /// Grid points beyond alpha_grid.count used by vertex-value extraction.
  int extra_value_points = 20;
  /// Replace oscillating least-squares slopes by a matrix-pencil estimate.
  bool resolve_ties = true;
  /// Largest accepted |Im| / |value| of a vertex ratio.
  double tol_imag = 1e-4;
  /// Cancellation floor for corrected non-analytic sources. Peeled masses
  /// from quadrature moments are accurate to about 1e-10, so residuals below
  /// this fraction of the subtracted moment are treated as zero.
  double round_off_floor = 1e-8;

  void validate() const {
    if (!(alpha_grid.alpha0 > 0.0) || !(alpha_grid.ratio > 1.0) || alpha_grid.count < 2)
      throw Error(ErrorCode::InvalidArgument, "alpha grid needs alpha0 > 0, ratio > 1, count >= 2");
    if (slope_window < 2) throw Error(ErrorCode::InvalidArgument, "slope window must be >= 2");
    if (directions != 0 && directions < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 directions");
    if (!(tol_value > 0.0) || !(tol_hull > 0.0) || !(tau_sep > 0.0))
      throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
    if (max_peel_rounds < 0 || extra_value_points < 0) throw Error(ErrorCode::InvalidArgument, "negative count");
  }

  int direction_count(int dim) const { return directions > 0 ? directions : (dim == 2 ? 180 : 400); }
};

namespace detail {

/// log(P / C) for the source at p; empty when the moment vanishes.
inline std::optional<Complex> log_ratio(const MomentSource& s, const ProbeParams& p) {
  const ScaledComplex m = s.moment(p);
  if (m.is_zero() || !std::isfinite(m.log_scale) || !std::isfinite(std::abs(m.mantissa))) return std::nullopt;
  const Complex r = m.mantissa / s.prefactor(p);
  if (r == Complex{} || !std::isfinite(std::abs(r))) return std::nullopt;
  return std::log(r) + m.log_scale;
}

/// Maps x to (-pi, pi].
inline double wrap_phase(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  x = std::fmod(x, two_pi);
  if (x <= -std::numbers::pi) x += two_pi;
  if (x > std::numbers::pi) x -= two_pi;
  return x;
}

inline std::vector<double> usable_alphas(const AlphaGrid& grid, int extra, double max_alpha) {
  std::vector<double> out;
  for (double a : grid.values(extra))
    if (a <= max_alpha) out.push_back(a);
  return out;
}

inline Point first_psi(const MomentSource& s, const Point& theta) {
  return make_admissible_pair(theta, s.probe().constraint());
}

/// Psi directions whose span with theta is the whole space: one in 2D, two in 3D.
inline std::vector<Point> refinement_psis(const MomentSource& s, const Point& theta) {
  std::vector<Point> psis{first_psi(s, theta)};
  if (theta.size() == 3) psis.push_back(second_admissible_psi(theta, psis[0], s.probe().constraint()));
  if (theta.size() > 3) throw Error(ErrorCode::InvalidArgument, "vertex refinement supports n = 2, 3");
  return psis;
}

/// Largest real part among the significant exponents of
/// y_j = sum_k a_k exp(lambda_k j step), by the matrix-pencil method.
inline std::optional<double> pencil_max_rate(const std::vector<Complex>& y, double step) {
  const int n = static_cast<int>(y.size());
  const int l = n / 2;
  if (n < 6) return std::nullopt;
  Eigen::MatrixXcd hankel(n - l, l + 1);
  for (int i = 0; i < n - l; ++i)
    for (int j = 0; j <= l; ++j) hankel(i, j) = y[i + j];
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(hankel, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return std::nullopt;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-10 * sv(0)) ++rank;
  rank = std::min(rank, l - 1);
  if (rank < 1) return std::nullopt;
  const Eigen::MatrixXcd v = svd.matrixV().leftCols(rank);
  const Eigen::MatrixXcd v1 = v.topRows(l);
  const Eigen::MatrixXcd v2 = v.bottomRows(l);
  const Eigen::MatrixXcd a = v1.completeOrthogonalDecomposition().solve(v2);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(a, false);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXcd z = eig.eigenvalues();

  // Amplitudes by least squares on the Vandermonde system.
  Eigen::MatrixXcd vander(n, rank);
  for (int k = 0; k < rank; ++k) {
    Complex p(1.0, 0.0);
    for (int j = 0; j < n; ++j) {
      vander(j, k) = p;
      p *= z(k);
    }
  }
  Eigen::VectorXcd rhs(n);
  for (int j = 0; j < n; ++j) rhs(j) = y[j];
  const Eigen::VectorXcd amp = vander.completeOrthogonalDecomposition().solve(rhs);
  std::vector<double> weight(rank);
  double wmax = 0.0;
  for (int k = 0; k < rank; ++k) {
    weight[k] = std::abs(amp(k)) * std::max(1.0, std::pow(std::abs(z(k)), n - 1));
    wmax = std::max(wmax, weight[k]);
  }
  std::optional<double> best;
  for (int k = 0; k < rank; ++k) {
    if (weight[k] < 1e-6 * wmax || std::abs(z(k)) == 0.0) continue;
    const double rate = std::log(std::abs(z(k))) / step;
    if (!best || rate > *best) best = rate;
  }
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Support slopes and hulls
// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double residual = 0.0;  // rms of the least-squares fit of log|P/C|
  int points = 0;
  bool tie_resolved = false;
};

/// Least-squares slope of log|P / C| against alpha over the last W usable
/// grid points; estimates max over the support of (y, theta). Dividing by C
/// removes the alpha^-n drift that would otherwise bias the slope.
///
/// When several nodes share the maximal projection, log|P/C| oscillates and
/// the fit is only accurate to O(1 / window span); in that case the dominant
/// exponential rate is re-estimated by matrix pencil on a uniform alpha grid.
inline SlopeFit support_slope_fit(const MomentSource& source, const Point& theta, const ReconstructionConfig& cfg,
                                  double length_scale = 1.0) {
  const Point psi = detail::first_psi(source, theta);
  const auto alphas = detail::usable_alphas(cfg.alpha_grid, 0, source.max_alpha());
  std::vector<std::pair<double, double>> pts;
  for (auto it = alphas.rbegin(); it != alphas.rend() && static_cast<int>(pts.size()) < cfg.slope_window; ++it) {
    if (auto l = detail::log_ratio(source, ProbeParams(*it, theta, psi))) pts.emplace_back(*it, l->real());
  }
  if (pts.empty()) throw Error(ErrorCode::AllUnderflow, "every moment on the alpha grid vanished");
  SlopeFit fit;
  fit.points = static_cast<int>(pts.size());
  if (pts.size() == 1) {
    fit.slope = pts[0].second / pts[0].first;
    return fit;
  }
  double ma = 0.0, ml = 0.0;
  for (auto [a, l] : pts) ma += a, ml += l;
  ma /= pts.size();
  ml /= pts.size();
  double saa = 0.0, sal = 0.0;
  for (auto [a, l] : pts) saa += (a - ma) * (a - ma), sal += (a - ma) * (l - ml);
  fit.slope = sal / saa;
  double rss = 0.0;
  for (auto [a, l] : pts) {
    const double r = l - ml - fit.slope * (a - ma);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / pts.size());

  if (cfg.resolve_ties && fit.residual > 1e-10) {
    constexpr int kSamples = 32;
    const double alpha_end = pts.front().first;
    double step = std::numbers::pi / (2.0 * std::max(length_scale, 1e-300));
    step = std::min(step, (alpha_end - alphas.front()) / (kSamples - 1));
    if (step > 0.0) {
      std::vector<Complex> logs;
      bool ok = true;
      for (int j = 0; j < kSamples && ok; ++j) {
        const double a = alpha_end - (kSamples - 1 - j) * step;
        auto l = detail::log_ratio(source, ProbeParams(a, theta, psi));
        if (!l) ok = false;
        else logs.push_back(*l - a * fit.slope);
      }
      if (ok) {
        double shift = -std::numeric_limits<double>::infinity();
        for (const auto& l : logs) shift = std::max(shift, l.real());
        std::vector<Complex> y;
        for (const auto& l : logs) y.push_back(std::exp(l - shift));
        if (auto rate = detail::pencil_max_rate(y, step)) {
          const double s = fit.slope + *rate;
          if (std::abs(s - fit.slope) <= 0.1 * length_scale) {
            fit.slope = s;
            fit.tie_resolved = true;
          }
        }
      }
    }
  }
  return fit;
}

inline double support_slope(const MomentSource& source, const Point& theta, const ReconstructionConfig& cfg,
                            double length_scale = 1.0) {
  return support_slope_fit(source, theta, cfg, length_scale).slope;
}

/// Uniform angles in 2D, a Fibonacci lattice in 3D.
inline std::vector<Point> sample_directions(int dim, int count) {
  if (dim == 2) return circle_directions(count);
  if (dim == 3) return fibonacci_sphere(count);
  throw Error(ErrorCode::InvalidArgument, "direction sampling supports n = 2, 3");
}

/// Per-direction support slope, maximized over the sources; empty where every
/// source underflows.
inline std::vector<std::optional<double>> sweep_slopes(const std::vector<SourcePtr>& sources,
                                                       const std::vector<Point>& dirs, const ReconstructionConfig& cfg,
                                                       double length_scale) {
  std::vector<std::optional<double>> slopes(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    for (const auto& s : sources) {
      try {
        const double v = support_slope(*s, dirs[i], cfg, length_scale);
        if (!slopes[i] || v > *slopes[i]) slopes[i] = v;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllUnderflow) throw;
      }
    }
  });
  return slopes;
}

/// The domain box grown by 5 % on every side.
inline Box hull_bounds(const Box& domain) {
  Point lo(domain.dim()), hi(domain.dim());
  for (int l = 0; l < domain.dim(); ++l) {
    const double pad = 0.05 * domain.width(l);
    lo[l] = domain.lo(l) - pad;
    hi[l] = domain.hi(l) + pad;
  }
  return Box(lo, hi);
}

inline Polytope hull_from_slopes(const std::vector<Point>& dirs, const std::vector<std::optional<double>>& slopes,
                                 const Box& domain, const ReconstructionConfig& cfg) {
  std::vector<Halfspace> hs;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    if (slopes[i]) hs.push_back({dirs[i], *slopes[i]});
  if (hs.empty()) throw Error(ErrorCode::DegenerateHull, "no direction produced a usable slope");
  return intersect_halfspaces(hs, hull_bounds(domain), cfg.tol_hull * domain.diameter());
}

/// Convex hull of the source support as the intersection of the sampled
/// supporting half-spaces, clipped to the (slightly grown) domain box.
inline Polytope recover_hull(const MomentSource& source, const Box& domain, const ReconstructionConfig& cfg) {
  cfg.validate();
  if (source.dim() != domain.dim()) throw Error(ErrorCode::InvalidArgument, "source and domain dimensions differ");
  const auto dirs = sample_directions(domain.dim(), cfg.direction_count(domain.dim()));
  // Non-owning handle; the sweep does not outlive the call.
  const SourcePtr handle(std::shared_ptr<const MomentSource>{}, &source);
  return hull_from_slopes(dirs, sweep_slopes({handle}, dirs, cfg, domain.diameter()), domain, cfg);
}

/// Hull of the union of the supports seen by several sources: per direction
/// the larger slope wins.
inline Polytope recover_union_hull(const std::vector<SourcePtr>& sources, const Box& domain,
                                   const ReconstructionConfig& cfg) {
  cfg.validate();
  const auto dirs = sample_directions(domain.dim(), cfg.direction_count(domain.dim()));
  return hull_from_slopes(dirs, sweep_slopes(sources, dirs, cfg, domain.diameter()), domain, cfg);
}

// ---------------------------------------------------------------------------
// Vertex localization and values
// ---------------------------------------------------------------------------

struct RefinedVertex {
  Point point;
  bool converged = false;
  int iterations = 0;
  double last_step = std::numeric_limits<double>::infinity();
};

/// Moves `start` onto the node that dominates the moment along theta.
///
/// With w the current guess, L(alpha) = log(P / (C e(alpha; w))) tends to
/// log f(w*) + alpha (theta + i psi, w* - w), so finite differences of L in
/// alpha give (theta, w* - w) from the real part and (psi, w* - w) from the
/// phase. The first step keeps alpha-differences below pi / (2 * length) so
/// the phase needs no unwrapping.
inline RefinedVertex refine_vertex(const MomentSource& source, const Point& theta, const Point& start,
                                   const ReconstructionConfig& cfg, double length_scale, const Box* bounds = nullptr) {
  const int n = static_cast<int>(theta.size());
  const auto psis = detail::refinement_psis(source, theta);
  const auto alphas = detail::usable_alphas(cfg.alpha_grid, cfg.extra_value_points, source.max_alpha());
  if (alphas.empty()) throw Error(ErrorCode::InvalidArgument, "alpha grid is empty below the source limit");
  // Subdominant nodes bias the fixed point by O(exp(-alpha * gap)), so the
  // largest usable alpha is the most accurate.
  const double alpha = alphas.back();
  const double max_step = alpha * (1.0 - 1.0 / cfg.alpha_grid.ratio);
  const double scale = std::max(1.0, length_scale);

  RefinedVertex out;
  out.point = start;
  double prev = length_scale;
  for (int it = 0; it < 30; ++it) {
    out.iterations = it + 1;
    const double h = it == 0 ? std::min(max_step, 0.5 / scale)
                             : std::min(max_step, 0.25 / std::max(prev, 1e-3 * length_scale));
    std::vector<double> rates;  // (theta, d), then (psi_k, d)
    for (std::size_t k = 0; k < psis.size(); ++k) {
      const ProbeParams p1(alpha, theta, psis[k]);
      const ProbeParams p0(alpha - h, theta, psis[k]);
      auto l1 = detail::log_ratio(source, p1);
      auto l0 = detail::log_ratio(source, p0);
      if (!l1 || !l0) return out;
      const Complex d = (*l1 - p1.exponent(out.point)) - (*l0 - p0.exponent(out.point));
      if (k == 0) rates.push_back(d.real() / h);
      rates.push_back(detail::wrap_phase(d.imag()) / h);
    }
    Point delta = rates[0] * theta + rates[1] * psis[0];
    if (n == 3) {
      const Point& u = psis[0];
      const Point v = normalized(psis[1] - dot(psis[1], u) * u);
      const double c = (rates[2] - rates[1] * dot(psis[1], u)) / dot(psis[1], v);
      delta = delta + c * v;
    }
    const double step = norm(delta);
    if (!std::isfinite(step)) return out;
    out.point = out.point + delta;
    out.last_step = step;
    prev = step;
    if (bounds && !bounds->contains_closed(out.point, 0.0)) return out;
    if (step <= 1e-12 * scale) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

struct VertexValue {
  double value = 0.0;
  double imag = 0.0;
  bool converged = false;
  double alpha = 0.0;
  double change = std::numeric_limits<double>::infinity();
};

namespace detail {

/// Walks the extended alpha grid evaluating `estimate(alpha)` (a vector of
/// complex numbers) and stops once the successive relative change is below
/// tol and has stopped improving. Returns the best estimate and its change.
template <typename Estimate>
std::pair<std::vector<Complex>, double> converge_along_grid(const std::vector<double>& alphas, double tol,
                                                            Estimate&& estimate, double* alpha_out) {
  std::vector<Complex> prev, best;
  double best_change = std::numeric_limits<double>::infinity();
  for (double a : alphas) {
    std::vector<Complex> cur = estimate(a);
    bool finite = true;
    for (const auto& c : cur) finite = finite && std::isfinite(c.real()) && std::isfinite(c.imag());
    if (!finite) break;
    if (!prev.empty()) {
      double diff = 0.0, mag = 0.0;
      for (std::size_t k = 0; k < cur.size(); ++k) {
        diff = std::max(diff, std::abs(cur[k] - prev[k]));
        mag = std::max({mag, std::abs(cur[k]), std::abs(prev[k])});
      }
      const double change = mag == 0.0 ? 0.0 : diff / mag;
      if (change < best_change) {
        best_change = change;
        best = cur;
        if (alpha_out) *alpha_out = a;
      } else if (best_change < tol) {
        break;
      }
      if (best_change < 1e-13) break;
    }
    prev = std::move(cur);
  }
  if (best.empty()) return {std::vector<Complex>(prev.size(), Complex{}), std::numeric_limits<double>::infinity()};
  return {best, best_change};
}

}  // namespace detail

/// f(w) from P / (C e(w)) along the alpha grid (scalar probes).
inline VertexValue vertex_value(const MomentSource& source, const Point& theta, const Point& w,
                                const ReconstructionConfig& cfg) {
  if (source.probe().kind != ProbeKind::scalar)
    throw Error(ErrorCode::InvalidArgument, "vertex_value needs a scalar-probe source");
  const Point psi = detail::first_psi(source, theta);
  const auto alphas = detail::usable_alphas(cfg.alpha_grid, cfg.extra_value_points, source.max_alpha());
  VertexValue out;
  auto [best, change] = detail::converge_along_grid(
      alphas, cfg.tol_value,
      [&](double a) -> std::vector<Complex> {
        const ProbeParams p(a, theta, psi);
        auto l = detail::log_ratio(source, p);
        if (!l) return {Complex{}};
        return {std::exp(*l - p.exponent(w))};
      },
      &out.alpha);
  if (!best.empty()) {
    out.value = best[0].real();
    out.imag = best[0].imag();
  }
  out.change = change;
  out.converged = change < cfg.tol_value;
  return out;
}

struct VectorVertexValue {
  std::array<double, 3> value{};
  double f3_from_curl_x = 0.0;
  double f3_from_curl_y = 0.0;
  double imag = 0.0;  // largest |Im| over the four unknowns
  bool converged = false;
  double change = std::numeric_limits<double>::infinity();
};

namespace detail {

/// Two admissible psi for theta satisfying the curl side condition, chosen so
/// the 2x2 system rows (a(z), b(z)) are well conditioned.
template <typename Row>
std::pair<Point, Point> curl_psi_pair(const Point& theta, PairConstraint c, Row&& row) {
  const Point first = make_admissible_pair(theta, c);
  auto det = [&](const Point& psi) {
    const auto [a1, b1] = row(ProbeParams(1.0, theta, first));
    const auto [a2, b2] = row(ProbeParams(1.0, theta, psi));
    return std::abs(a1 * b2 - a2 * b1);
  };
  const Point second = second_admissible_psi(theta, first, c, det);
  if (det(second) <= kAdmissibleTol) throw Error(ErrorCode::SingularSystem, "curl system is singular for theta");
  return {first, second};
}

inline std::array<Complex, 2> solve2(Complex a11, Complex a12, Complex a21, Complex a22, Complex r1, Complex r2) {
  const Complex det = a11 * a22 - a12 * a21;
  if (std::abs(det) <= kAdmissibleTol) throw Error(ErrorCode::SingularSystem, "2x2 system is singular");
  return {(r1 * a22 - a12 * r2) / det, (a11 * r2 - r1 * a21) / det};
}

}  // namespace detail

/// Vertex values of a 3D vector field from curl-x and curl-y sources: two psi
/// per source give 2x2 systems for (f2, f3) and (f1, f3).
inline VectorVertexValue vertex_values_vector(const MomentSource& curl_x, const MomentSource& curl_y,
                                              const Point& theta, const Point& w, const ReconstructionConfig& cfg) {
  if (theta.size() != 3 || curl_x.probe().kind != ProbeKind::curl_x || curl_y.probe().kind != ProbeKind::curl_y)
    throw Error(ErrorCode::InvalidArgument, "vertex_values_vector needs 3D curl-x and curl-y sources");
  using Row = std::pair<Complex, Complex>;
  const auto row_x = [](const ProbeParams& p) -> Row { return {p.z(2), -p.z(1)}; };
  const auto row_y = [](const ProbeParams& p) -> Row { return {-p.z(2), p.z(0)}; };
  const auto [xa, xb] = detail::curl_psi_pair(theta, PairConstraint::elasticity23, row_x);
  const auto [ya, yb] = detail::curl_psi_pair(theta, PairConstraint::elasticity13, row_y);
  const auto alphas = detail::usable_alphas(cfg.alpha_grid, cfg.extra_value_points,
                                            std::min(curl_x.max_alpha(), curl_y.max_alpha()));

  auto ratio = [&](const MomentSource& s, const ProbeParams& p) -> Complex {
    auto l = detail::log_ratio(s, p);
    return l ? std::exp(*l - p.exponent(w)) : Complex{};
  };
  auto [best, change] = detail::converge_along_grid(
      alphas, cfg.tol_value,
      [&](double a) -> std::vector<Complex> {
        const ProbeParams pxa(a, theta, xa), pxb(a, theta, xb), pya(a, theta, ya), pyb(a, theta, yb);
        const auto [r1a, r2a] = row_x(pxa);
        const auto [r1b, r2b] = row_x(pxb);
        const auto fx = detail::solve2(r1a, r2a, r1b, r2b, ratio(curl_x, pxa), ratio(curl_x, pxb));
        const auto [s1a, s2a] = row_y(pya);
        const auto [s1b, s2b] = row_y(pyb);
        const auto fy = detail::solve2(s1a, s2a, s1b, s2b, ratio(curl_y, pya), ratio(curl_y, pyb));
        return {fy[0], fx[0], fx[1], fy[1]};  // f1, f2, f3 (curl-x), f3 (curl-y)
      },
      nullptr);

  VectorVertexValue out;
  out.value = {best[0].real(), best[1].real(), 0.5 * (best[2].real() + best[3].real())};
  out.f3_from_curl_x = best[2].real();
  out.f3_from_curl_y = best[3].real();
  for (const auto& c : best) out.imag = std::max(out.imag, std::abs(c.imag()));
  out.change = change;
  out.converged = change < cfg.tol_value;
  if (out.converged) {
    const double mag = std::max({1.0, std::abs(out.value[0]), std::abs(out.value[1]), std::abs(out.value[2])});
    if (std::abs(out.f3_from_curl_x - out.f3_from_curl_y) > cfg.tol_value * mag)
      throw Error(ErrorCode::InconsistentF3, "curl-x and curl-y disagree on the third component");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Peeling
// ---------------------------------------------------------------------------

enum class PeelStatus { complete, max_rounds, stalled };

inline const char* to_string(PeelStatus s) {
  switch (s) {
    case PeelStatus::complete: return "complete";
    case PeelStatus::max_rounds: return "max_rounds";
    case PeelStatus::stalled: return "stalled";
  }
  return "?";
}

struct VertexRecord {
  Point candidate;
  Point theta;
  Point point;
  std::vector<double> value;
  double imag = 0.0;
  double change = std::numeric_limits<double>::infinity();
  bool refined = false;
  bool converged = false;
  bool accepted = false;
  std::string note;
};

struct PeelRound {
  std::vector<Point> hull;                   // candidate polytope vertices
  std::vector<std::optional<double>> slopes;  // per sampled direction
  std::vector<VertexRecord> vertices;
  std::size_t accepted = 0;
};

struct PeelReport {
  PeelStatus status = PeelStatus::complete;
  PointMassField masses;
  std::vector<Point> directions;
  std::vector<PeelRound> rounds;
  std::string message;
};

namespace detail {

struct ValueResult {
  std::vector<double> value;
  double imag = 0.0;
  double change = 0.0;
  bool converged = false;
};

using ValueFn = std::function<ValueResult(const std::vector<SourcePtr>&, const Point&, const Point&)>;

/// Picks the source with the largest |P / (C e(w))| at the top grid alpha.
inline const MomentSource* dominant_source(const std::vector<SourcePtr>& sources, const Point& theta, const Point& w,
                                           const ReconstructionConfig& cfg) {
  const MomentSource* best = nullptr;
  double best_level = -std::numeric_limits<double>::infinity();
  for (const auto& s : sources) {
    const auto alphas = usable_alphas(cfg.alpha_grid, 0, s->max_alpha());
    if (alphas.empty()) continue;
    const ProbeParams p(alphas.back(), theta, first_psi(*s, theta));
    auto l = log_ratio(*s, p);
    if (!l) continue;
    const double level = l->real() - p.exponent(w).real();
    if (level > best_level) {
      best_level = level;
      best = s.get();
    }
  }
  return best;
}

inline VertexRecord process_candidate(const std::vector<SourcePtr>& sources, const Point& theta, const Point& start,
                                      const Box& bounds, const ReconstructionConfig& cfg, double length,
                                      const ValueFn& value_fn) {
  VertexRecord rec;
  rec.candidate = start;
  rec.theta = theta;
  rec.point = start;
  const MomentSource* s = dominant_source(sources, theta, start, cfg);
  if (!s) {
    rec.note = "no source sees the candidate";
    return rec;
  }
  const RefinedVertex r = refine_vertex(*s, theta, start, cfg, length, &bounds);
  rec.refined = true;
  rec.point = r.point;
  if (!r.converged) {
    rec.note = "localization did not converge";
    return rec;
  }
  const ValueResult v = value_fn(sources, theta, r.point);
  rec.value = v.value;
  rec.imag = v.imag;
  rec.change = v.change;
  rec.converged = v.converged;
  double mag = 0.0;
  for (double x : v.value) mag = std::max(mag, std::abs(x));
  if (!v.converged) rec.note = "vertex value did not converge";
  else if (mag <= cfg.tol_value) rec.note = "vertex value below tolerance";
  else if (v.imag > cfg.tol_imag * mag) rec.note = "imaginary part too large";
  else rec.accepted = true;
  return rec;
}

inline PeelReport peel_engine(std::vector<SourcePtr> sources, const Box& domain, const ReconstructionConfig& cfg,
                              int components, const ValueFn& value_fn) {
  cfg.validate();
  for (const auto& s : sources)
    if (s->dim() != domain.dim()) throw Error(ErrorCode::InvalidArgument, "source and domain dimensions differ");
  const double length = domain.diameter();
  const double tau = cfg.tol_hull * length;
  const Box bounds = hull_bounds(domain);

  PeelReport report;
  report.masses = PointMassField(domain.dim(), components, 1e-8 * length);
  report.directions = sample_directions(domain.dim(), cfg.direction_count(domain.dim()));
  const auto& dirs = report.directions;

  for (int round = 0;; ++round) {
    auto slopes = sweep_slopes(sources, dirs, cfg, length);
    bool remaining = false;
    for (std::size_t i = 0; i < dirs.size(); ++i)
      if (slopes[i] && *slopes[i] >= domain.min_projection(dirs[i]) + tau) remaining = true;
    if (!remaining) {
      report.status = PeelStatus::complete;
      return report;
    }
    if (round == cfg.max_peel_rounds) {
      report.status = PeelStatus::max_rounds;
      report.message = "moments remain after the last peeling round";
      return report;
    }

    PeelRound pr;
    pr.slopes = slopes;
    Polytope hull;
    try {
      hull = hull_from_slopes(dirs, slopes, domain, cfg);
    } catch (const Error& e) {
      report.rounds.push_back(std::move(pr));
      report.status = PeelStatus::stalled;
      report.message = std::string("hull recovery failed: ") + e.what();
      return report;
    }
    pr.hull = hull.vertices;

    std::vector<VertexRecord> records(hull.vertices.size());
    parallel_for(hull.vertices.size(), [&](std::size_t j) {
      try {
        const Point theta = separating_direction(hull, j, cfg.tau_sep, 1e-9 * std::max(1.0, length));
        records[j] = process_candidate(sources, theta, hull.vertices[j], bounds, cfg, length, value_fn);
      } catch (const Error& e) {
        records[j].candidate = hull.vertices[j];
        records[j].point = hull.vertices[j];
        records[j].note = e.what();
      }
    });

    // Directions still exceeding every accepted vertex get another try from
    // the candidate that is extreme along them.
    std::vector<bool> retried(hull.vertices.size(), false);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      if (!slopes[i]) continue;
      double top = -std::numeric_limits<double>::infinity();
      for (const auto& r : records)
        if (r.accepted) top = std::max(top, dot(dirs[i], r.point));
      for (const auto& r : pr.vertices)
        if (r.accepted) top = std::max(top, dot(dirs[i], r.point));
      if (*slopes[i] <= top + 5.0 * tau) continue;
      std::size_t arg = 0;
      for (std::size_t j = 1; j < hull.vertices.size(); ++j)
        if (dot(dirs[i], hull.vertices[j]) > dot(dirs[i], hull.vertices[arg])) arg = j;
      if (records[arg].accepted || retried[arg]) continue;
      retried[arg] = true;
      try {
        VertexRecord r = process_candidate(sources, dirs[i], hull.vertices[arg], bounds, cfg, length, value_fn);
        r.note = r.accepted ? "completion pass" : "completion pass: " + r.note;
        pr.vertices.push_back(std::move(r));
      } catch (const Error&) {
      }
    }
    records.insert(records.end(), pr.vertices.begin(), pr.vertices.end());

    // Accepted vertices within tau of each other are one node; the one with
    // the smallest imaginary residue and value change represents it.
    auto quality = [](const VertexRecord& r) {
      double mag = 0.0;
      for (double x : r.value) mag = std::max(mag, std::abs(x));
      return r.imag / mag + r.change;
    };
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].accepted) continue;
      auto same = std::find_if(keep.begin(), keep.end(),
                               [&](std::size_t k) { return distance(records[k].point, records[i].point) <= tau; });
      if (same == keep.end()) {
        keep.push_back(i);
        continue;
      }
      std::size_t loser = i;
      if (quality(records[i]) < quality(records[*same])) std::swap(loser, *same);
      records[loser].accepted = false;
      records[loser].note = "duplicate";
    }
    PointMassField found(domain.dim(), components, 1e-8 * length);
    for (std::size_t k : keep) found.add(records[k].point, records[k].value);
    pr.accepted = keep.size();
    pr.vertices = std::move(records);
    report.rounds.push_back(std::move(pr));
    if (found.empty()) {
      report.status = PeelStatus::stalled;
      report.message = "a peeling round recovered no vertex while moments remain";
      return report;
    }
    report.masses = report.masses.plus(found);
    for (auto& s : sources) s = subtract_masses(s, found, cfg.tol_value, cfg.round_off_floor);
  }
}

}  // namespace detail

/// Peeling with a full per-round report; never throws on stalls.
inline PeelReport peel_report(const SourcePtr& source, const Box& domain, const ReconstructionConfig& cfg) {
  if (source->probe().kind != ProbeKind::scalar) throw Error(ErrorCode::InvalidArgument, "peel needs a scalar source");
  const detail::ValueFn fn = [&cfg](const std::vector<SourcePtr>& s, const Point& theta, const Point& w) {
    const VertexValue v = vertex_value(*s[0], theta, w, cfg);
    return detail::ValueResult{{v.value}, std::abs(v.imag), v.change, v.converged};
  };
  return detail::peel_engine({source}, domain, cfg, 1, fn);
}

/// Recovered point masses; PeelStalled when a round finds nothing while
/// moments remain.
inline PointMassField peel(const SourcePtr& source, const Box& domain, const ReconstructionConfig& cfg) {
  PeelReport r = peel_report(source, domain, cfg);
  if (r.status == PeelStatus::stalled) throw Error(ErrorCode::PeelStalled, r.message);
  return r.masses;
}

/// Peeled masses carry errors of order tol_value, so the assembly residual
/// tolerance scales with it.
inline double assembly_tolerance(const PointMassField& pm, const ReconstructionConfig& cfg) {
  return std::max(kMassDropTol, cfg.tol_value * std::max(1.0, pm.max_magnitude()));
}

inline CheckeredField reconstruct_scalar(const SourcePtr& source, const Box& domain, const ReconstructionConfig& cfg) {
  const PointMassField pm = peel(source, domain, cfg);
  return reconstruct_field(pm, domain, assembly_tolerance(pm, cfg));
}

/// Peel report plus the assembled field, or the reason assembly failed.
struct ReconstructionReport {
  PeelReport peel;
  std::optional<CheckeredField> field;
  std::optional<VectorCheckeredField> vector_field;
  std::string error;
};

/// Report-producing variant; field_tol is the residual tolerance handed to
/// reconstruct_field (0 uses assembly_tolerance).
inline ReconstructionReport reconstruct_scalar_report(const SourcePtr& source, const Box& domain,
                                                      const ReconstructionConfig& cfg, double field_tol = 0.0) {
  ReconstructionReport out;
  out.peel = peel_report(source, domain, cfg);
  if (out.peel.status == PeelStatus::stalled) {
    out.error = out.peel.message;
    return out;
  }
  try {
    out.field = reconstruct_field(out.peel.masses, domain,
                                  field_tol > 0.0 ? field_tol : assembly_tolerance(out.peel.masses, cfg));
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vector (elasticity) reconstruction
// ---------------------------------------------------------------------------

inline PeelReport peel_vector_report(const SourcePtr& curl_x, const SourcePtr& curl_y, const Box& domain,
                                     const ReconstructionConfig& cfg) {
  if (domain.dim() != 3) throw Error(ErrorCode::InvalidArgument, "vector reconstruction needs n = 3");
  const detail::ValueFn fn = [&cfg](const std::vector<SourcePtr>& s, const Point& theta, const Point& w) {
    const VectorVertexValue v = vertex_values_vector(*s[0], *s[1], theta, w, cfg);
    return detail::ValueResult{{v.value[0], v.value[1], v.value[2]}, v.imag, v.change, v.converged};
  };
  return detail::peel_engine({curl_x, curl_y}, domain, cfg, 3, fn);
}

inline VectorCheckeredField reconstruct_vector(const SourcePtr& curl_x, const SourcePtr& curl_y, const Box& domain,
                                               const ReconstructionConfig& cfg) {
  PeelReport r = peel_vector_report(curl_x, curl_y, domain, cfg);
  if (r.status == PeelStatus::stalled) throw Error(ErrorCode::PeelStalled, r.message);
  return reconstruct_vector_field(r.masses, domain, assembly_tolerance(r.masses, cfg));
}

/// Oracle mode: curl-x and curl-y analytic sources backed by the true masses.
inline std::pair<SourcePtr, SourcePtr> curl_sources(const VectorCheckeredField& field) {
  const PointMassField m = discretize(field);
  return {std::make_shared<AnalyticSource>(m, VectorProbe{ProbeKind::curl_x}),
          std::make_shared<AnalyticSource>(m, VectorProbe{ProbeKind::curl_y})};
}

inline VectorCheckeredField reconstruct_vector(const VectorCheckeredField& field, const ReconstructionConfig& cfg) {
  const auto [cx, cy] = curl_sources(field);
  return reconstruct_vector(cx, cy, field.domain(), cfg);
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_RECONSTRUCTION_HPP
