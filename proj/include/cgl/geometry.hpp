#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cgl {

// R x C partition of a W x H challenge image. Cell boundaries are real
// valued (c * W / C), so non-divisible sizes still tile the image exactly.
class GridSpec {
 public:
  // Throws ArgumentError on a zero/negative dimension.
  GridSpec(int rows, int cols, double width_px, double height_px);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double width() const { return width_; }
  double height() const { return height_; }
  int cell_count() const { return rows_ * cols_; }

  double cell_width() const { return width_ / cols_; }
  double cell_height() const { return height_ / rows_; }
  double col_edge(int c) const;  // x of the left edge of column c; col_edge(cols) == width
  double row_edge(int r) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int rows_;
  int cols_;
  double width_;
  double height_;
};

// Cell k at (row r, col c), zero-based r and c, has index r * C + c + 1.
struct CellRect {
  int index = 0;
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
};

// Axis-aligned box in image pixels, y pointing down.
class BoundingBox {
 public:
  BoundingBox() = default;
  // Unclamped. Throws ArgumentError on non-finite coordinates.
  BoundingBox(double x_min, double y_min, double x_max, double y_max);
  // Clamps every coordinate to [0, W] x [0, H]. The result may be degenerate
  // if the box lies entirely outside the frame.
  static BoundingBox clamped(double x_min, double y_min, double x_max, double y_max, double width,
                             double height);

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return degenerate() ? 0.0 : width() * height(); }
  bool degenerate() const { return !(x_min_ < x_max_ && y_min_ < y_max_); }

  BoundingBox translated(double dx, double dy) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  double x_min_ = 0, y_min_ = 0, x_max_ = 0, y_max_ = 0;
};

struct Detection {
  std::string label;  // lowercase singular class name
  double confidence = 0.0;
  BoundingBox box;

  // Validates confidence in [0,1] and a non-empty label; lowercases the label.
  static Detection make(std::string label, double confidence, BoundingBox box);

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GridMapping {
  std::string label;
  double confidence = 0.0;
  std::vector<int> pgns;  // strictly increasing, each in [1, R*C]

  friend bool operator==(const GridMapping&, const GridMapping&) = default;
};

// Which cells a box marks as potential grids.
//   intersection: positive-area overlap with the cell
//   corner:       one of the four box corners strictly inside the cell
//   coverage(t):  overlap area >= t * cell area, t in (0, 1]
class MappingMode {
 public:
  enum class Kind { intersection, corner, coverage };

  static MappingMode intersection() { return MappingMode(Kind::intersection, 0.0); }
  static MappingMode corner() { return MappingMode(Kind::corner, 0.0); }
  static MappingMode coverage(double tau);
  // "intersection", "corner", "coverage:0.25". Throws ConfigError otherwise.
  static MappingMode parse(std::string_view text);

  Kind kind() const { return kind_; }
  double tau() const { return tau_; }
  std::string to_string() const;

  friend bool operator==(const MappingMode&, const MappingMode&) = default;

 private:
  MappingMode(Kind kind, double tau) : kind_(kind), tau_(tau) {}
  Kind kind_;
  double tau_;
};

std::vector<CellRect> grid_cells(const GridSpec& spec);

// Cell that owns point (x, y) under the half-open tiling rule: a point on an
// internal edge belongs to the cell whose lower edge it sits on; the right and
// bottom image edges belong to the last column/row. nullopt outside the image.
std::optional<int> cell_at(const GridSpec& spec, double x, double y);

double overlap_area(const BoundingBox& box, const CellRect& cell);

// PGNs of one box under `mode`, ascending.
std::vector<int> box_to_pgns(const BoundingBox& box, const GridSpec& spec, const MappingMode& mode);

// Keeps detections whose label equals target_label and whose confidence is
// >= threshold; maps each to its PGNs. Output follows input order; detections
// that hit no cell are dropped.
std::vector<GridMapping> map_detections_to_grids(std::span<const Detection> detections, const GridSpec& spec,
                                                 std::string_view target_label, double threshold,
                                                 const MappingMode& mode = MappingMode::intersection());

// Union of all PGNs, ascending, deduplicated.
std::vector<int> union_pgns(std::span<const GridMapping> mappings);

// Compact JSON array: [{"class":"bus","confidence":0.912,"pgns":[1,2]}]
std::string serialize_mappings(std::span<const GridMapping> mappings);
// Inverse of serialize_mappings. Throws ParseError on malformed input.
std::vector<GridMapping> parse_mappings(std::string_view json_text);

}  // namespace cgl
