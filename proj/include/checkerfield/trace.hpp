#ifndef CHECKERFIELD_TRACE_HPP
#define CHECKERFIELD_TRACE_HPP

#include <vector>

#include "checkerfield/geometry.hpp"

namespace checkerfield {

/// One quadrature sample of Cauchy data on the boundary of a rectangle.
struct TraceSample {
  int edge_id = 0;     // 0 bottom, 1 right, 2 top, 3 left (counter-clockwise)
  double s = 0.0;      // arc parameter along the edge
  Point point;         // location on the boundary
  Point normal;        // outward unit normal
  double weight = 0.0; // quadrature weight (> 0)
  double phi1 = 0.0;   // Dirichlet data u
  double phi2 = 0.0;   // Neumann data (grad u, normal)
};

struct BoundaryTrace {
  Box gamma;
  std::vector<TraceSample> samples;
};

}  // namespace checkerfield

#endif  // CHECKERFIELD_TRACE_HPP
