#ifndef CHECKERFIELD_HPP
#define CHECKERFIELD_HPP

#include "checkerfield/checkered.hpp"
#include "checkerfield/error.hpp"
#include "checkerfield/forward.hpp"
#include "checkerfield/geometry.hpp"
#include "checkerfield/null_space.hpp"
#include "checkerfield/polytope.hpp"
#include "checkerfield/presets.hpp"
#include "checkerfield/probes.hpp"
#include "checkerfield/reconstruction.hpp"
#include "checkerfield/sources.hpp"
#include "checkerfield/trace.hpp"

#endif  // CHECKERFIELD_HPP
