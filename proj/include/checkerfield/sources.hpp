#ifndef CHECKERFIELD_SOURCES_HPP
#define CHECKERFIELD_SOURCES_HPP

#include <algorithm>
#include <limits>
#include <memory>
#include <string>

#include "checkerfield/checkered.hpp"
#include "checkerfield/probes.hpp"
#include "checkerfield/trace.hpp"

namespace checkerfield {

/// Anything that can answer "what is the moment P(alpha, theta, psi)?".
/// Realizations are immutable; corrections produce new sources.
class MomentSource {
 public:
  virtual ~MomentSource() = default;

  virtual int dim() const = 0;
  virtual VectorProbe probe() const { return {}; }
  virtual ScaledComplex moment(const ProbeParams& p) const = 0;
  virtual std::string tag() const = 0;

  /// Largest alpha this source can be evaluated at with reasonable cost.
  virtual double max_alpha() const { return std::numeric_limits<double>::infinity(); }

  Complex prefactor(const ProbeParams& p) const { return moment_prefactor(p, probe().kind); }
};

using SourcePtr = std::shared_ptr<const MomentSource>;

/// Closed-form source backed by point masses (the discretized field).
class AnalyticSource final : public MomentSource {
 public:
  explicit AnalyticSource(PointMassField masses, VectorProbe probe = {})
      : masses_(std::move(masses)), probe_(probe) {}

  int dim() const override { return masses_.dim(); }
  VectorProbe probe() const override { return probe_; }
  ScaledComplex moment(const ProbeParams& p) const override { return moment_from_masses(masses_, p, probe_); }
  std::string tag() const override { return "analytic"; }
  const PointMassField& masses() const { return masses_; }

  /// Subtracts the masses directly, so exactly recovered nodes vanish from
  /// the map instead of leaving round-off residue behind. Touched nodes whose
  /// residual is at or below cancel_tol (relative) are dropped.
  std::shared_ptr<const MomentSource> without(const PointMassField& masses, double cancel_tol) const {
    const double tol = std::max(masses_.merge_tol(), masses.merge_tol());
    const auto& removed = masses.nodes();
    std::vector<bool> used(removed.size(), false);
    PointMassField rest(masses_.dim(), masses_.components(), masses_.merge_tol(), masses_.drop_tol());
    for (const auto& node : masses_) {
      std::vector<double> m = node.mass;
      bool touched = false;
      for (std::size_t j = 0; j < removed.size(); ++j) {
        if (used[j] || !nearly_equal(node.point, removed[j].point, tol)) continue;
        for (std::size_t k = 0; k < m.size(); ++k) m[k] -= removed[j].mass[k];
        used[j] = touched = true;
        break;
      }
      const double limit = cancel_tol * std::max(1.0, PointMassField::magnitude(node.mass));
      if (touched && PointMassField::magnitude(m) <= limit) continue;
      rest.add(node.point, m);
    }
    for (std::size_t j = 0; j < removed.size(); ++j)
      if (!used[j]) {
        std::vector<double> m = removed[j].mass;
        for (double& v : m) v = -v;
        rest.add(removed[j].point, m);
      }
    return std::make_shared<AnalyticSource>(std::move(rest), probe_);
  }

 private:
  PointMassField masses_;
  VectorProbe probe_;
};

/// Volume-quadrature source backed by the checkered field itself.
class VolumeSource final : public MomentSource {
 public:
  explicit VolumeSource(CheckeredField field) : field_(std::move(field)) {}

  int dim() const override { return field_.dim(); }
  ScaledComplex moment(const ProbeParams& p) const override { return moment_quadrature(field_, p); }
  std::string tag() const override { return "volume"; }
  /// Panel count grows like alpha^n; beyond this the sweep is not worth it.
  double max_alpha() const override { return 400.0 / field_.domain().diameter(); }

 private:
  CheckeredField field_;
};

/// Vector volume-quadrature source (tests and oracle checks).
class VectorVolumeSource final : public MomentSource {
 public:
  VectorVolumeSource(VectorCheckeredField field, VectorProbe probe) : field_(std::move(field)), probe_(probe) {}

  int dim() const override { return field_.dim(); }
  VectorProbe probe() const override { return probe_; }
  ScaledComplex moment(const ProbeParams& p) const override { return vector_moment_quadrature(field_, p, probe_); }
  std::string tag() const override { return "volume"; }
  double max_alpha() const override { return 100.0 / field_.domain().diameter(); }

 private:
  VectorCheckeredField field_;
  VectorProbe probe_;
};

/// Green's-formula source backed by boundary Cauchy data.
class BoundarySource final : public MomentSource {
 public:
  explicit BoundarySource(BoundaryTrace trace) : trace_(std::move(trace)) { validate_trace(trace_); }

  int dim() const override { return trace_.gamma.dim(); }
  ScaledComplex moment(const ProbeParams& p) const override { return moment_boundary(trace_, p); }
  std::string tag() const override { return "boundary"; }
  const BoundaryTrace& trace() const { return trace_; }

 private:
  BoundaryTrace trace_;
};

/// base - C * sum_w q(w) e(w). Results that cancel below cancel_tol relative
/// to the larger operand are reported as zero (below the round-off floor).
class CorrectedSource final : public MomentSource {
 public:
  CorrectedSource(SourcePtr base, PointMassField removed, double cancel_tol)
      : base_(std::move(base)), removed_(std::move(removed)), cancel_tol_(cancel_tol) {}

  int dim() const override { return base_->dim(); }
  VectorProbe probe() const override { return base_->probe(); }
  double max_alpha() const override { return base_->max_alpha(); }
  std::string tag() const override { return base_->tag() + "-corrected"; }

  ScaledComplex moment(const ProbeParams& p) const override {
    const ScaledComplex b = base_->moment(p);
    const ScaledComplex s = moment_from_masses(removed_, p, base_->probe());
    const ScaledComplex d = (b - s).normalized();
    const double floor = std::max(b.log_abs(), s.log_abs()) + std::log(cancel_tol_);
    if (d.log_abs() <= floor) return {};
    return d;
  }

 private:
  SourcePtr base_;
  PointMassField removed_;
  double cancel_tol_;
};

/// Source with the contribution C * sum_w q(w) e(w) of the given masses
/// removed. Analytic sources subtract exactly; all others are wrapped.
inline SourcePtr subtract_masses(const SourcePtr& source, const PointMassField& masses, double cancel_tol,
                                 double round_off_floor = 1e-12) {
  if (auto analytic = std::dynamic_pointer_cast<const AnalyticSource>(source))
    return analytic->without(masses, cancel_tol);
  return std::make_shared<CorrectedSource>(source, masses, round_off_floor);
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_SOURCES_HPP
