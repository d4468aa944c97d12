#ifndef CHECKERFIELD_PRESETS_HPP
#define CHECKERFIELD_PRESETS_HPP

#include <cstdint>
#include <random>

#include "checkerfield/checkered.hpp"

namespace checkerfield {

/// Two unit-charge rectangles strictly inside Omega = [0,4) x [0,3).
inline CheckeredField fig1_field() {
  CheckeredField f(Box({0.0, 0.0}, {4.0, 3.0}));
  f.add(Box({0.8, 1.0}, {1.6, 2.0}), 1.0);
  f.add(Box({2.4, 0.8}, {3.2, 1.8}), 1.0);
  return f;
}

struct RandomFieldSpec {
  int dim = 2;
  int max_boxes = 4;
  double max_abs_value = 5.0;
  int grid = 8;  // box corners on multiples of 1/grid of the domain
  int value_decimals = 2;
};

/// Random checkered field on the unit cube: 1..max_boxes boxes with corners
/// on a 1/grid lattice strictly inside the domain and nonzero values rounded
/// to value_decimals.
inline CheckeredField random_field(const RandomFieldSpec& spec, std::mt19937_64& rng) {
  CheckeredField f(Box(Point(spec.dim, 0.0), Point(spec.dim, 1.0)));
  std::uniform_int_distribution<int> count(1, spec.max_boxes);
  std::uniform_int_distribution<int> coord(1, spec.grid - 1);
  std::uniform_real_distribution<double> value(-spec.max_abs_value, spec.max_abs_value);
  const double scale = std::pow(10.0, spec.value_decimals);
  const int boxes = count(rng);
  for (int b = 0; b < boxes; ++b) {
    Point lo(spec.dim), hi(spec.dim);
    for (int l = 0; l < spec.dim; ++l) {
      int a = coord(rng), c = coord(rng);
      while (c == a) c = coord(rng);
      if (c < a) std::swap(a, c);
      lo[l] = static_cast<double>(a) / spec.grid;
      hi[l] = static_cast<double>(c) / spec.grid;
    }
    double v = 0.0;
    while (v == 0.0) v = std::round(value(rng) * scale) / scale;
    f.add(Box(lo, hi), v);
  }
  return f;
}

}  // namespace checkerfield

#endif  // CHECKERFIELD_PRESETS_HPP
