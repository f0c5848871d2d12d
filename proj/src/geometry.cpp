#include "cgl/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "cgl/error.hpp"

namespace cgl {

GridSpec::GridSpec(int rows, int cols, double width_px, double height_px)
    : rows_(rows), cols_(cols), width_(width_px), height_(height_px) {
  if (rows < 1 || cols < 1) throw ArgumentError("grid needs at least one row and one column");
  if (!(width_px > 0.0) || !(height_px > 0.0) || !std::isfinite(width_px) || !std::isfinite(height_px))
    throw ArgumentError("grid image dimensions must be positive");
}

double GridSpec::col_edge(int c) const { return c >= cols_ ? width_ : c * width_ / cols_; }

double GridSpec::row_edge(int r) const { return r >= rows_ ? height_ : r * height_ / rows_; }

BoundingBox::BoundingBox(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  if (!std::isfinite(x_min) || !std::isfinite(y_min) || !std::isfinite(x_max) || !std::isfinite(y_max))
    throw ArgumentError("bounding box coordinates must be finite");
}

BoundingBox BoundingBox::clamped(double x_min, double y_min, double x_max, double y_max, double width,
                                 double height) {
  BoundingBox raw(x_min, y_min, x_max, y_max);
  return BoundingBox(std::clamp(raw.x_min_, 0.0, width), std::clamp(raw.y_min_, 0.0, height),
                     std::clamp(raw.x_max_, 0.0, width), std::clamp(raw.y_max_, 0.0, height));
}

BoundingBox BoundingBox::translated(double dx, double dy) const {
  return BoundingBox(x_min_ + dx, y_min_ + dy, x_max_ + dx, y_max_ + dy);
}

Detection Detection::make(std::string label, double confidence, BoundingBox box) {
  if (label.empty()) throw ArgumentError("detection label must be non-empty");
  if (!(confidence >= 0.0 && confidence <= 1.0)) throw ArgumentError("detection confidence must lie in [0, 1]");
  std::transform(label.begin(), label.end(), label.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return Detection{std::move(label), confidence, box};
}

MappingMode MappingMode::coverage(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("coverage threshold must lie in (0, 1]");
  return MappingMode(Kind::coverage, tau);
}

MappingMode MappingMode::parse(std::string_view text) {
  if (text == "intersection") return intersection();
  if (text == "corner") return corner();
  constexpr std::string_view prefix = "coverage:";
  if (text.starts_with(prefix)) {
    std::string num(text.substr(prefix.size()));
    char* end = nullptr;
    double tau = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size()) throw ConfigError("bad coverage threshold: " + num);
    return coverage(tau);
  }
  throw ConfigError("unknown mapping mode: " + std::string(text));
}

std::string MappingMode::to_string() const {
  switch (kind_) {
    case Kind::intersection:
      return "intersection";
    case Kind::corner:
      return "corner";
    case Kind::coverage: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "coverage:%g", tau_);
      return buf;
    }
  }
  return "intersection";
}

std::vector<CellRect> grid_cells(const GridSpec& spec) {
  std::vector<CellRect> cells;
  cells.reserve(static_cast<std::size_t>(spec.cell_count()));
  for (int r = 0; r < spec.rows(); ++r) {
    for (int c = 0; c < spec.cols(); ++c) {
      cells.push_back(CellRect{r * spec.cols() + c + 1, spec.col_edge(c), spec.row_edge(r), spec.col_edge(c + 1),
                               spec.row_edge(r + 1)});
    }
  }
  return cells;
}

namespace {

int locate(double v, double extent, int n, double (GridSpec::*edge)(int) const, const GridSpec& spec) {
  int i = std::clamp(static_cast<int>(std::floor(v * n / extent)), 0, n - 1);
  // Snap against the exact edges so floating rounding never disagrees with grid_cells().
  while (i > 0 && v < (spec.*edge)(i)) --i;
  while (i < n - 1 && v >= (spec.*edge)(i + 1)) ++i;
  return i;
}

}  // namespace

std::optional<int> cell_at(const GridSpec& spec, double x, double y) {
  if (!(x >= 0.0 && x <= spec.width() && y >= 0.0 && y <= spec.height())) return std::nullopt;
  int c = locate(x, spec.width(), spec.cols(), &GridSpec::col_edge, spec);
  int r = locate(y, spec.height(), spec.rows(), &GridSpec::row_edge, spec);
  return r * spec.cols() + c + 1;
}

double overlap_area(const BoundingBox& box, const CellRect& cell) {
  double w = std::min(box.x_max(), cell.x_max) - std::max(box.x_min(), cell.x_min);
  double h = std::min(box.y_max(), cell.y_max) - std::max(box.y_min(), cell.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

std::vector<int> box_to_pgns(const BoundingBox& box, const GridSpec& spec, const MappingMode& mode) {
  std::vector<int> pgns;
  if (box.degenerate()) return pgns;
  for (const CellRect& cell : grid_cells(spec)) {
    bool hit = false;
    switch (mode.kind()) {
      case MappingMode::Kind::intersection:
        hit = overlap_area(box, cell) > 0.0;
        break;
      case MappingMode::Kind::corner: {
        const double xs[2] = {box.x_min(), box.x_max()};
        const double ys[2] = {box.y_min(), box.y_max()};
        for (double x : xs)
          for (double y : ys)
            hit = hit || (cell.x_min < x && x < cell.x_max && cell.y_min < y && y < cell.y_max);
        break;
      }
      case MappingMode::Kind::coverage: {
        double a = overlap_area(box, cell);
        hit = a > 0.0 && a >= mode.tau() * cell.area();
        break;
      }
    }
    if (hit) pgns.push_back(cell.index);
  }
  return pgns;
}

std::vector<GridMapping> map_detections_to_grids(std::span<const Detection> detections, const GridSpec& spec,
                                                 std::string_view target_label, double threshold,
                                                 const MappingMode& mode) {
  if (target_label.empty()) throw ArgumentError("target label must be non-empty");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ArgumentError("threshold must lie in [0, 1]");
  std::vector<GridMapping> out;
  for (const Detection& d : detections) {
    if (d.label != target_label || d.confidence < threshold) continue;
    std::vector<int> pgns = box_to_pgns(d.box, spec, mode);
    if (pgns.empty()) continue;
    out.push_back(GridMapping{d.label, d.confidence, std::move(pgns)});
  }
  return out;
}

std::vector<int> union_pgns(std::span<const GridMapping> mappings) {
  std::vector<int> all;
  for (const GridMapping& m : mappings) all.insert(all.end(), m.pgns.begin(), m.pgns.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::string serialize_mappings(std::span<const GridMapping> mappings) {
  std::string out = "[";
  for (std::size_t i = 0; i < mappings.size(); ++i) {
    const GridMapping& m = mappings[i];
    if (i) out += ',';
    out += "{\"class\":";
    out += nlohmann::json(m.label).dump();
    char conf[32];
    std::snprintf(conf, sizeof conf, "%.3f", m.confidence);
    out += ",\"confidence\":";
    out += conf;
    out += ",\"pgns\":[";
    for (std::size_t k = 0; k < m.pgns.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(m.pgns[k]);
    }
    out += "]}";
  }
  out += ']';
  return out;
}

std::vector<GridMapping> parse_mappings(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("mapping JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("mapping JSON must be an array");
  std::vector<GridMapping> out;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("class") || !item.contains("confidence") || !item.contains("pgns"))
      throw ParseError("mapping entry needs class, confidence and pgns");
    const auto& cls = item.at("class");
    const auto& conf = item.at("confidence");
    const auto& pgns = item.at("pgns");
    if (!cls.is_string() || !conf.is_number() || !pgns.is_array()) throw ParseError("mapping entry has wrong types");
    GridMapping m{cls.get<std::string>(), conf.get<double>(), {}};
    for (const auto& p : pgns) {
      if (!p.is_number_integer()) throw ParseError("pgn must be an integer");
      int v = p.get<int>();
      if (v < 1 || (!m.pgns.empty() && v <= m.pgns.back())) throw ParseError("pgns must be positive and ascending");
      m.pgns.push_back(v);
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace cgl
