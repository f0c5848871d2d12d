#pragma once

#include <set>

#include "cgl/geometry.hpp"

namespace cgl {

// Rasterization oracle for box_to_pgns. Walks a step_px lattice of sample
// points (x_min + step/2 + i*step, likewise for y) strictly inside the box and
// collects the owning cell of every sample via cell_at(). Shares no code with
// the interval-overlap path it is used to check.
//
// Agrees with intersection mode whenever the box overlaps every touched cell
// by more than one lattice step in both axes. Requires
// step_px <= min(cell side) / 4; throws ArgumentError otherwise.
std::set<int> mapping_oracle(const BoundingBox& box, const GridSpec& spec, double step_px);

}  // namespace cgl
