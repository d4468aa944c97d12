#ifndef CHECKERFIELD_SVG_HPP
#define CHECKERFIELD_SVG_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace checkerfield::svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;  // non-finite points break the line
};

/// Line plot as a standalone SVG document: axes box, min/max tick labels,
/// one polyline per series and a legend.
inline std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                             const std::string& ylabel, int width = 640, int height = 420) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points)
      if (std::isfinite(x) && std::isfinite(y)) {
        x0 = std::min(x0, x), x1 = std::max(x1, x);
        y0 = std::min(y0, y), y1 = std::max(y1, y);
      }
  if (!(x0 < x1)) x0 = 0.0, x1 = 1.0;
  if (!(y0 < y1)) y0 -= 0.5, y1 += 0.5;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">" << x0 << "</text>\n";
  os << "<text x=\"" << ml + pw << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">" << x1 << "</text>\n";
  os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + ph << "\" text-anchor=\"end\">" << y0 << "</text>\n";
  os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 10 << "\" text-anchor=\"end\">" << y1 << "</text>\n";
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << mt + ph / 2
     << ")\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
      pts.clear();
    };
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) {
        flush();
        continue;
      }
      std::ostringstream p;
      p.precision(6);
      p << px(x) << ',' << py(y) << ' ';
      pts += p.str();
    }
    flush();
    const double ly = mt + 16 + 16.0 * k;
    os << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + pw - 125 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << ml + pw - 120 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace checkerfield::svg

#endif  // CHECKERFIELD_SVG_HPP
