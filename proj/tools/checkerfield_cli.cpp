// checkerfield: generate fields and traces, probe moments, reconstruct and
// certify from the command line. Outputs go to --out (stdout when "-").
//
// Exit codes: 0 ok, 2 usage, 3 numeric failure (error JSON on stderr).

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "checkerfield.hpp"
#include "checkerfield/io.hpp"
#include "checkerfield/svg.hpp"

using namespace checkerfield;
using io::Json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct GridOptions {
  double alpha0 = 0.5;
  double ratio = 1.3;
  int count = 25;
  int directions = 0;
  int window = 8;
  double tol = 1e-6;
  double tol_imag = 1e-4;
  int max_rounds = 20;
  int extra = 20;

  void add_to(CLI::App* app, bool with_reconstruction) {
    app->add_option("--alpha0", alpha0, "first alpha of the geometric grid")->check(CLI::PositiveNumber);
    app->add_option("--ratio", ratio, "grid ratio (> 1)")->check(CLI::Range(1.0 + 1e-12, 100.0));
    app->add_option("--count", count, "number of grid points")->check(CLI::Range(2, 10000));
    app->add_option("--directions", directions, "sampled directions (0: 180 in 2D, 400 in 3D)")
        ->check(CLI::Range(0, 100000));
    if (!with_reconstruction) return;
    app->add_option("--window", window, "slope-fit window")->check(CLI::Range(2, 10000));
    app->add_option("--tol", tol, "vertex value tolerance")->check(CLI::PositiveNumber);
    app->add_option("--tol-imag", tol_imag, "largest accepted |Im|/|value| of a vertex ratio")
        ->check(CLI::PositiveNumber);
    app->add_option("--max-rounds", max_rounds, "peeling round limit")->check(CLI::Range(0, 1000));
    app->add_option("--extra-points", extra, "grid points beyond --count for vertex values")
        ->check(CLI::Range(0, 1000));
  }

  ReconstructionConfig config() const {
    ReconstructionConfig c;
    c.alpha_grid = {alpha0, ratio, count};
    c.directions = directions;
    c.slope_window = window;
    c.tol_value = tol;
    c.tol_imag = tol_imag;
    c.max_peel_rounds = max_rounds;
    c.extra_value_points = extra;
    c.validate();
    return c;
  }
};

void emit(const std::string& out, const std::string& text) {
  if (out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    io::write_text(out, text);
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

BoundaryTrace load_trace(const std::string& path) {
  std::istringstream in(io::read_file(path));
  return io::read_trace_csv(in);
}

std::vector<Point> probe_directions(int dim, int count) {
  return dim == 2 ? circle_directions(count) : fibonacci_sphere(count);
}

// A random vector field on the unit cube: box geometry from random_field,
// one random value per component.
VectorCheckeredField random_vector_field(const RandomFieldSpec& spec, int components, std::mt19937_64& rng) {
  const CheckeredField shape = random_field(spec, rng);
  std::uniform_real_distribution<double> value(-spec.max_abs_value, spec.max_abs_value);
  const double scale = std::pow(10.0, spec.value_decimals);
  VectorCheckeredField f(shape.domain(), components);
  for (const auto& t : shape.terms()) {
    std::vector<double> v(components);
    for (double& c : v) c = std::round(value(rng) * scale) / scale;
    f.add(t.box, v);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct GenOptions {
  std::string preset = "fig1";
  std::uint64_t seed = 1;
  int dim = 2;
  int boxes = 4;
  int components = 1;
  std::string out = "-";
};

int run_gen(const GenOptions& o) {
  if (o.preset == "fig1") {
    emit(o.out, dump(io::to_json(fig1_field())));
    return 0;
  }
  std::mt19937_64 rng(o.seed);
  const RandomFieldSpec spec{o.dim, o.boxes, 5.0, 8, 2};
  if (o.components == 1)
    emit(o.out, dump(io::to_json(random_field(spec, rng))));
  else
    emit(o.out, dump(io::to_json(random_vector_field(spec, o.components, rng))));
  return 0;
}

struct ForwardOptions {
  std::string field;
  int points_per_edge = 64;
  int panels = 8;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::string out = "-";
};

int run_forward(const ForwardOptions& o) {
  const CheckeredField f = io::field_from_json(io::read_json(o.field));
  BoundaryTrace t = boundary_trace(f, f.domain(), o.points_per_edge, o.panels);
  if (o.noise > 0.0) t = add_noise(t, o.noise, o.seed);
  std::ostringstream os;
  io::write_trace_csv(os, t);
  emit(o.out, os.str());
  return 0;
}

struct ProbeOptions {
  std::string field;
  std::string trace;
  std::string mode;
  GridOptions grid;
  std::string out = "-";
};

int run_probe(ProbeOptions o) {
  if (o.field.empty() == o.trace.empty()) throw CLI::ValidationError("probe", "give exactly one of --field, --trace");
  if (o.mode.empty()) o.mode = o.trace.empty() ? "analytic" : "boundary";
  SourcePtr source;
  if (!o.trace.empty()) {
    if (o.mode != "boundary") throw CLI::ValidationError("--mode", "a trace only supports --mode boundary");
    source = std::make_shared<BoundarySource>(load_trace(o.trace));
  } else {
    const CheckeredField f = io::field_from_json(io::read_json(o.field));
    if (o.mode == "analytic") {
      source = std::make_shared<AnalyticSource>(discretize(f));
    } else if (o.mode == "volume") {
      source = std::make_shared<VolumeSource>(f);
    } else if (o.mode == "boundary") {
      source = std::make_shared<BoundarySource>(boundary_trace(f, f.domain(), 64, 8));
    } else {
      throw CLI::ValidationError("--mode", "expected analytic, volume or boundary");
    }
  }
  const int dirs = o.grid.directions > 0 ? o.grid.directions : 8;
  std::vector<io::ProbeRow> rows;
  for (const Point& theta : probe_directions(source->dim(), dirs)) {
    const Point psi = make_admissible_pair(theta);
    for (double alpha : AlphaGrid{o.grid.alpha0, o.grid.ratio, o.grid.count}.values()) {
      const ProbeParams p(alpha, theta, psi);
      rows.push_back({p, source->moment(p), source->tag()});
    }
  }
  std::ostringstream os;
  io::write_probe_csv(os, rows);
  emit(o.out, os.str());
  return 0;
}

struct ReconstructOptions {
  std::string field;
  std::string trace;
  std::string mode = "oracle";
  GridOptions grid;
  std::string out = "-";
};

Json error_entry(const std::string& code, const std::string& message) {
  return Json{{"error", code}, {"message", message}};
}

int run_reconstruct(const ReconstructOptions& o) {
  const ReconstructionConfig cfg = o.grid.config();
  Json out{{"mode", o.mode}, {"config", io::to_json(cfg)}};
  std::optional<Json> failure;

  if (o.mode == "boundary") {
    if (o.trace.empty()) throw CLI::ValidationError("--trace", "boundary mode needs --trace");
    const BoundaryTrace t = load_trace(o.trace);
    const ReconstructionReport r = reconstruct_scalar_report(std::make_shared<BoundarySource>(t), t.gamma, cfg);
    out["report"] = io::to_json(r.peel);
    out["field"] = r.field ? io::to_json(*r.field) : Json(nullptr);
    if (!r.field) failure = error_entry(to_string(ErrorCode::PeelStalled), r.error);
  } else if (o.mode == "oracle" || o.mode == "volume") {
    if (o.field.empty()) throw CLI::ValidationError("--field", o.mode + " mode needs --field");
    const Json fj = io::read_json(o.field);
    if (io::is_vector_field_json(fj)) {
      if (o.mode != "oracle") throw CLI::ValidationError("--mode", "vector fields support oracle mode only");
      const VectorCheckeredField f = io::vector_field_from_json(fj);
      const auto [cx, cy] = curl_sources(f);
      const PeelReport r = peel_vector_report(cx, cy, f.domain(), cfg);
      out["report"] = io::to_json(r);
      const PointMassField truth = discretize(f);
      out["exact"] = r.status == PeelStatus::complete && approx_equal(r.masses, truth, cfg.tol_hull * f.domain().diameter(), 1e-6);
      try {
        out["field"] = io::to_json(reconstruct_vector_field(r.masses, f.domain(), assembly_tolerance(r.masses, cfg)));
      } catch (const Error& e) {
        out["field"] = nullptr;
        failure = io::error_json(e);
      }
      if (r.status == PeelStatus::stalled) failure = error_entry(to_string(ErrorCode::PeelStalled), r.message);
    } else {
      const CheckeredField f = io::field_from_json(fj);
      const PointMassField truth = discretize(f);
      SourcePtr src = o.mode == "oracle" ? SourcePtr(std::make_shared<AnalyticSource>(truth))
                                         : SourcePtr(std::make_shared<VolumeSource>(f));
      const ReconstructionReport r = reconstruct_scalar_report(src, f.domain(), cfg);
      out["report"] = io::to_json(r.peel);
      out["field"] = r.field ? io::to_json(*r.field) : Json(nullptr);
      out["exact"] = r.peel.status == PeelStatus::complete &&
                     approx_equal(r.peel.masses, truth, cfg.tol_hull * f.domain().diameter(), 1e-6);
      if (!r.field) failure = error_entry(to_string(ErrorCode::PeelStalled), r.error);
    }
  } else {
    throw CLI::ValidationError("--mode", "expected oracle, volume or boundary");
  }
  out["error"] = failure ? *failure : Json(nullptr);
  emit(o.out, dump(out));
  if (failure) {
    std::cerr << failure->dump() << "\n";
    return kExitNumeric;
  }
  return 0;
}

struct DiagnoseOptions {
  std::string field;
  std::string trace;
  double theta_angle = 0.0;
  int points_per_edge = 64;
  GridOptions grid{0.25, 1.1, 71};
  std::string out = "-";
  std::string svg;
};

int run_diagnose(const DiagnoseOptions& o) {
  CheckeredField f(Box({0, 0}, {1, 1}));
  if (o.field.empty())
    f.add(Box({0.25, 0.25}, {0.75, 0.75}), 1.0);
  else
    f = io::field_from_json(io::read_json(o.field));
  const BoundaryTrace t =
      o.trace.empty() ? boundary_trace(f, f.domain(), o.points_per_edge, std::max(1, o.points_per_edge / 8))
                      : load_trace(o.trace);
  const Point theta{std::cos(o.theta_angle), std::sin(o.theta_angle)};
  const Point psi = make_admissible_pair(theta);

  std::ostringstream os;
  os << "alpha,volume,boundary,rel_diff\n";
  svg::Series vol{"volume", "#1f77b4", {}}, bnd{"boundary", "#d62728", {}};
  for (double alpha : AlphaGrid{o.grid.alpha0, o.grid.ratio, o.grid.count}.values()) {
    const ProbeParams p(alpha, theta, psi);
    const double lv = moment_quadrature(f, p).log_abs() / alpha;
    const double lb = moment_boundary(t, p).log_abs() / alpha;
    os << io::fmt(alpha) << ',' << io::fmt(lv) << ',' << io::fmt(lb) << ',' << io::fmt(std::abs(lb - lv) / std::abs(lv))
       << '\n';
    vol.points.emplace_back(alpha, lv);
    bnd.points.emplace_back(alpha, lb);
  }
  emit(o.out, os.str());
  std::string svg_path = o.svg;
  if (svg_path.empty() && o.out != "-") {
    svg_path = o.out;
    if (svg_path.size() > 4 && svg_path.ends_with(".csv")) svg_path.resize(svg_path.size() - 4);
    svg_path += ".svg";
  }
  if (!svg_path.empty())
    io::write_text(svg_path, svg::line_plot({vol, bnd}, "log|P| / alpha, volume vs boundary", "alpha", "log|P| / alpha"));
  return 0;
}

struct CertifyOptions {
  int dim = 2;
  std::vector<double> scalar_radii{1.0, 2.0};
  std::vector<double> vector_radii{1.0, 2.0, 3.0};
  double lame = 1.0;
  std::string out = "-";
};

int run_certify(const CertifyOptions& o) {
  if (o.scalar_radii.size() != 2) throw CLI::ValidationError("--scalar-radii", "need two radii");
  if (o.vector_radii.size() != 3) throw CLI::ValidationError("--vector-radii", "need three radii");
  const int n = o.dim;
  const auto harmonic = kernel_samples(KernelKind::harmonic, n, 100);
  const auto navier = kernel_samples(KernelKind::navier, n, 12, o.lame);
  const RadialLayerField s = scalar_null_field(o.scalar_radii[0], o.scalar_radii[1], n);
  const VectorNullField v = vector_null_field(o.vector_radii[0], o.vector_radii[1], o.vector_radii[2], n);

  Json mean_value = Json::array();
  for (const auto& b : biharmonic_samples(n))
    mean_value.push_back(
        {{"test", b.name}, {"residual", mean_value_residual(b, Point(n, 0.1), 0.7, n, QuadratureResolution::defaults(n))}});
  Json dims = Json::array();
  for (int k : {3, 4}) {
    std::vector<double> radii{0.0};
    for (int i = 1; i <= k; ++i) radii.push_back(0.5 + 0.4 * i);
    const auto ds = null_space_dimension(layer_pairing_matrix(radii, n, false, harmonic));
    const auto dv = null_space_dimension(layer_pairing_matrix(radii, n, true, navier));
    dims.push_back({{"layers", k}, {"radii", radii}, {"scalar_dimension", ds.dimension},
                    {"vector_dimension", dv.dimension}, {"scalar_singular_values", ds.singular_values},
                    {"vector_singular_values", dv.singular_values}});
  }
  const Json out{{"dim", n},
                 {"scalar", {{"field", io::to_json(s)}, {"orthogonality", io::to_json(orthogonality_report(s, harmonic))}}},
                 {"vector",
                  {{"a", v.a}, {"b", v.b}, {"lame_ratio", o.lame}, {"field", io::to_json(v.field)},
                   {"orthogonality", io::to_json(orthogonality_report(v.field, navier))}}},
                 {"mean_value", mean_value},
                 {"dimensions", dims}};
  emit(o.out, dump(out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Checkered source reconstruction from exponential harmonic moments"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "write a field JSON");
  g->add_option("--preset", gen.preset, "fig1 or random")->check(CLI::IsMember({"fig1", "random"}));
  g->add_option("--seed", gen.seed, "random seed");
  g->add_option("--dim", gen.dim, "dimension of random fields")->check(CLI::Range(2, 3));
  g->add_option("--boxes", gen.boxes, "largest number of boxes")->check(CLI::Range(1, 64));
  g->add_option("--components", gen.components, "1 (scalar) or the dimension (vector)")->check(CLI::Range(1, 3));
  g->add_option("--out", gen.out, "output path");

  ForwardOptions fwd;
  auto* f = app.add_subcommand("forward", "field JSON to boundary trace CSV");
  f->add_option("--field", fwd.field, "field JSON")->required();
  f->add_option("--points-per-edge", fwd.points_per_edge)->check(CLI::Range(1, 1 << 20));
  f->add_option("--panels", fwd.panels, "Gauss panels per edge")->check(CLI::Range(1, 1 << 16));
  f->add_option("--noise", fwd.noise, "relative Gaussian noise level")->check(CLI::NonNegativeNumber);
  f->add_option("--seed", fwd.seed, "noise seed");
  f->add_option("--out", fwd.out, "output path");

  ProbeOptions prb;
  auto* p = app.add_subcommand("probe", "moment table CSV");
  p->add_option("--field", prb.field, "field JSON");
  p->add_option("--trace", prb.trace, "trace CSV");
  p->add_option("--mode", prb.mode, "analytic, volume or boundary");
  prb.grid.add_to(p, false);
  p->add_option("--out", prb.out, "output path");

  ReconstructOptions rec;
  auto* r = app.add_subcommand("reconstruct", "peel a field from moments, report JSON");
  r->add_option("--field", rec.field, "field JSON (oracle, volume)");
  r->add_option("--trace", rec.trace, "trace CSV (boundary)");
  r->add_option("--mode", rec.mode, "oracle, volume or boundary")->check(CLI::IsMember({"oracle", "volume", "boundary"}));
  rec.grid.add_to(r, true);
  r->add_option("--out", rec.out, "output path");

  DiagnoseOptions dia;
  auto* d = app.add_subcommand("diagnose", "volume vs boundary log|P|/alpha curves, CSV and SVG");
  d->add_option("--field", dia.field, "field JSON (default: 1 on [0.25,0.75)^2 in the unit square)");
  d->add_option("--trace", dia.trace, "trace CSV (default: exact trace of the field)");
  d->add_option("--theta", dia.theta_angle, "direction angle in radians");
  d->add_option("--points-per-edge", dia.points_per_edge)->check(CLI::Range(8, 1 << 20));
  dia.grid.add_to(d, false);
  d->add_option("--out", dia.out, "CSV output path");
  d->add_option("--svg", dia.svg, "SVG output path (default: <out>.svg)");

  CertifyOptions cer;
  auto* c = app.add_subcommand("certify", "null-space certification JSON");
  c->add_option("--dim", cer.dim)->check(CLI::Range(2, 3));
  c->add_option("--scalar-radii", cer.scalar_radii, "rA rB")->expected(2);
  c->add_option("--vector-radii", cer.vector_radii, "r1 r2 r3")->expected(3);
  c->add_option("--lame", cer.lame, "Lame ratio of the Navier operator")->check(CLI::PositiveNumber);
  c->add_option("--out", cer.out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (g->parsed()) return run_gen(gen);
    if (f->parsed()) return run_forward(fwd);
    if (p->parsed()) return run_probe(prb);
    if (r->parsed()) return run_reconstruct(rec);
    if (d->parsed()) return run_diagnose(dia);
    if (c->parsed()) return run_certify(cer);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << io::error_json(e).dump() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? kExitUsage : kExitNumeric;
  }
  return kExitUsage;
}
