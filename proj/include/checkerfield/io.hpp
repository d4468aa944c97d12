#ifndef CHECKERFIELD_IO_HPP
#define CHECKERFIELD_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "checkerfield/checkered.hpp"
#include "checkerfield/error.hpp"
#include "checkerfield/null_space.hpp"
#include "checkerfield/probes.hpp"
#include "checkerfield/reconstruction.hpp"
#include "checkerfield/trace.hpp"

namespace checkerfield::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON: fields and masses
// ---------------------------------------------------------------------------

inline Json to_json(const Box& b) { return Json{{"lo", b.lo()}, {"hi", b.hi()}}; }

inline Box box_from_json(const Json& j) {
  try {
    return Box(j.at("lo").get<Point>(), j.at("hi").get<Point>());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("box: ") + e.what());
  }
}

inline Json to_json(const CheckeredField& f) {
  Json terms = Json::array();
  for (const auto& t : f.terms()) terms.push_back({{"lo", t.box.lo()}, {"hi", t.box.hi()}, {"value", t.value}});
  return Json{{"dim", f.dim()}, {"domain", to_json(f.domain())}, {"terms", terms}};
}

inline Json to_json(const VectorCheckeredField& f) {
  Json terms = Json::array();
  for (const auto& t : f.terms()) terms.push_back({{"lo", t.box.lo()}, {"hi", t.box.hi()}, {"value", t.value}});
  return Json{{"dim", f.dim()}, {"components", f.components()}, {"domain", to_json(f.domain())}, {"terms", terms}};
}

inline bool is_vector_field_json(const Json& j) { return j.contains("components"); }

inline CheckeredField field_from_json(const Json& j) {
  try {
    CheckeredField f(box_from_json(j.at("domain")));
    if (j.at("dim").get<int>() != f.dim()) throw Error(ErrorCode::ParseError, "dim does not match the domain");
    for (const auto& t : j.at("terms")) f.add(box_from_json(t), t.at("value").get<double>());
    return f;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field: ") + e.what());
  }
}

inline VectorCheckeredField vector_field_from_json(const Json& j) {
  try {
    VectorCheckeredField f(box_from_json(j.at("domain")), j.at("components").get<int>());
    if (j.at("dim").get<int>() != f.dim()) throw Error(ErrorCode::ParseError, "dim does not match the domain");
    for (const auto& t : j.at("terms")) f.add(box_from_json(t), t.at("value").get<std::vector<double>>());
    return f;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("vector field: ") + e.what());
  }
}

/// [{"point": [...], "mass": v or [...]}]; scalar masses are written as numbers.
inline Json to_json(const PointMassField& pm) {
  Json out = Json::array();
  for (const auto& n : pm) {
    Json m = pm.components() == 1 ? Json(n.mass[0]) : Json(n.mass);
    out.push_back({{"point", n.point}, {"mass", m}});
  }
  return out;
}

inline PointMassField masses_from_json(const Json& j, int dim, int components = 1,
                                       double merge_tol = kPointMergeTol) {
  try {
    PointMassField pm(dim, components, merge_tol);
    for (const auto& n : j) {
      const Point p = n.at("point").get<Point>();
      const Json& m = n.at("mass");
      if (m.is_number()) {
        pm.add(p, m.get<double>());
      } else {
        const auto v = m.get<std::vector<double>>();
        pm.add(p, v);
      }
    }
    return pm;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("masses: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV: traces and probe tables
// ---------------------------------------------------------------------------

inline std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* kTraceHeader = "edge_id,s,x,y,nu_x,nu_y,weight,phi1,phi2";

inline void write_trace_csv(std::ostream& os, const BoundaryTrace& t) {
  if (t.gamma.dim() != 2) throw Error(ErrorCode::InvalidArgument, "traces are two-dimensional");
  os << kTraceHeader << '\n';
  for (const auto& s : t.samples)
    os << s.edge_id << ',' << fmt(s.s) << ',' << fmt(s.point[0]) << ',' << fmt(s.point[1]) << ','
       << fmt(s.normal[0]) << ',' << fmt(s.normal[1]) << ',' << fmt(s.weight) << ',' << fmt(s.phi1) << ','
       << fmt(s.phi2) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \r\t", used) != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace detail

/// The rectangle is taken from the extent of the sample points.
inline BoundaryTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ParseError, "empty trace file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw Error(ErrorCode::ParseError, "trace header must be '" + std::string(kTraceHeader) + "'");
  BoundaryTrace t;
  Point lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point hi{-lo[0], -lo[1]};
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = detail::split_csv(line);
    if (c.size() != 9) throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": expected 9 columns");
    TraceSample s;
    s.edge_id = static_cast<int>(detail::parse_double(c[0], n));
    s.s = detail::parse_double(c[1], n);
    s.point = {detail::parse_double(c[2], n), detail::parse_double(c[3], n)};
    s.normal = {detail::parse_double(c[4], n), detail::parse_double(c[5], n)};
    s.weight = detail::parse_double(c[6], n);
    s.phi1 = detail::parse_double(c[7], n);
    s.phi2 = detail::parse_double(c[8], n);
    for (int l = 0; l < 2; ++l) {
      lo[l] = std::min(lo[l], s.point[l]);
      hi[l] = std::max(hi[l], s.point[l]);
    }
    t.samples.push_back(std::move(s));
  }
  if (t.samples.empty()) throw Error(ErrorCode::MalformedTrace, "trace has no samples");
  try {
    t.gamma = Box(lo, hi);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedTrace, "trace samples do not span a rectangle");
  }
  return t;
}

struct ProbeRow {
  ProbeParams params;
  ScaledComplex moment;
  std::string tag;
};

/// Columns alpha, theta_1..n, psi_1..n, re, im, source. re/im are the moment
/// value; when it does not fit a double, log_abs and arg are appended.
inline void write_probe_csv(std::ostream& os, const std::vector<ProbeRow>& rows) {
  if (rows.empty()) {
    os << "alpha,re,im,log_abs,arg,source\n";
    return;
  }
  const int n = rows.front().params.dim();
  os << "alpha";
  for (int l = 1; l <= n; ++l) os << ",theta_" << l;
  for (int l = 1; l <= n; ++l) os << ",psi_" << l;
  os << ",re,im,log_abs,arg,source\n";
  for (const auto& r : rows) {
    const Complex v = r.moment.value();
    os << fmt(r.params.alpha());
    for (double t : r.params.theta()) os << ',' << fmt(t);
    for (double p : r.params.psi()) os << ',' << fmt(p);
    os << ',' << fmt(v.real()) << ',' << fmt(v.imag()) << ',' << fmt(r.moment.log_abs()) << ','
       << fmt(std::arg(r.moment.mantissa)) << ',' << r.tag << '\n';
  }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json to_json(const ReconstructionConfig& c) {
  return Json{{"alpha0", c.alpha_grid.alpha0},
              {"ratio", c.alpha_grid.ratio},
              {"count", c.alpha_grid.count},
              {"directions", c.directions},
              {"slope_window", c.slope_window},
              {"tol_value", c.tol_value},
              {"tol_hull", c.tol_hull},
              {"tau_sep", c.tau_sep},
              {"max_peel_rounds", c.max_peel_rounds},
              {"extra_value_points", c.extra_value_points},
              {"tol_imag", c.tol_imag},
              {"round_off_floor", c.round_off_floor}};
}

inline Json to_json(const PeelReport& r) {
  Json rounds = Json::array();
  for (const auto& round : r.rounds) {
    Json slopes = Json::array();
    for (const auto& s : round.slopes) slopes.push_back(s ? Json(*s) : Json(nullptr));
    Json verts = Json::array();
    for (const auto& v : round.vertices)
      verts.push_back({{"candidate", v.candidate},
                       {"theta", v.theta},
                       {"point", v.point},
                       {"value", v.value},
                       {"imag", v.imag},
                       {"change", std::isfinite(v.change) ? Json(v.change) : Json(nullptr)},
                       {"refined", v.refined},
                       {"converged", v.converged},
                       {"accepted", v.accepted},
                       {"note", v.note}});
    rounds.push_back({{"hull", round.hull}, {"slopes", slopes}, {"vertices", verts}, {"accepted", round.accepted}});
  }
  return Json{{"status", to_string(r.status)},
              {"message", r.message},
              {"masses", to_json(r.masses)},
              {"directions", r.directions},
              {"rounds", rounds}};
}

inline Json to_json(const OrthogonalityReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) entries.push_back({{"test", e.test}, {"pairing", e.pairing}, {"normalized", e.normalized}});
  return Json{{"max_normalized", r.max_normalized},
              {"threshold", r.threshold},
              {"pass", r.pass},
              {"resolution", {{"radial", r.resolution.radial}, {"angular", r.resolution.angular}, {"polar", r.resolution.polar}}},
              {"tests", entries}};
}

inline Json to_json(const RadialLayerField& f) {
  return Json{{"dim", f.dim}, {"radii", f.radii}, {"values", f.values}, {"vector", f.vector}};
}

inline Json error_json(const Error& e) { return Json{{"error", to_string(e.code())}, {"message", e.what()}}; }

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

}  // namespace checkerfield::io

#endif  // CHECKERFIELD_IO_HPP
