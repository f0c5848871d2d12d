#include "cgl/mapping_oracle.hpp"

#include <algorithm>

#include "cgl/error.hpp"

namespace cgl {

std::set<int> mapping_oracle(const BoundingBox& box, const GridSpec& spec, double step_px) {
  double min_side = std::min(spec.cell_width(), spec.cell_height());
  if (!(step_px > 0.0) || step_px > min_side / 4.0)
    throw ArgumentError("oracle step must be positive and at most a quarter of the smallest cell side");

  std::set<int> cells;
  // Clamp here instead of trusting the caller; a box fully outside the frame
  // yields no samples.
  double x0 = std::max(box.x_min(), 0.0), x1 = std::min(box.x_max(), spec.width());
  double y0 = std::max(box.y_min(), 0.0), y1 = std::min(box.y_max(), spec.height());
  if (!(x0 < x1 && y0 < y1)) return cells;

  for (double y = y0 + step_px / 2; y < y1; y += step_px) {
    for (double x = x0 + step_px / 2; x < x1; x += step_px) {
      if (auto idx = cell_at(spec, x, y)) cells.insert(*idx);
    }
  }
  return cells;
}

}  // namespace cgl
