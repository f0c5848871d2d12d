#include "cgl/categories.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cgl/error.hpp"

namespace cgl {

std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::rectangle:
      return "rectangle";
    case Shape::ellipse:
      return "ellipse";
    case Shape::triangle:
      return "triangle";
  }
  return "rectangle";
}

Shape shape_from_string(std::string_view s) {
  if (s == "rectangle") return Shape::rectangle;
  if (s == "ellipse") return Shape::ellipse;
  if (s == "triangle") return Shape::triangle;
  throw ArgumentError("unknown shape: " + std::string(s));
}

const std::vector<Category>& all_categories() {
  static const std::vector<Category> kCategories = {
      {"bus", {230, 30, 30}, Shape::rectangle},
      {"traffic light", {30, 200, 40}, Shape::rectangle},
      {"crosswalk", {250, 250, 250}, Shape::rectangle},
      {"car", {30, 60, 230}, Shape::rectangle},
      {"fire hydrant", {250, 140, 0}, Shape::triangle},
      {"bicycle", {160, 0, 200}, Shape::ellipse},
      {"motorcycle", {0, 200, 200}, Shape::ellipse},
      {"boat", {250, 230, 0}, Shape::triangle},
      {"stair", {120, 70, 20}, Shape::rectangle},
      {"bridge", {250, 0, 160}, Shape::rectangle},
      {"taxi", {200, 200, 90}, Shape::rectangle},
      {"chimney", {90, 0, 0}, Shape::rectangle},
      {"palm tree", {0, 110, 60}, Shape::triangle},
      {"parking meter", {0, 0, 110}, Shape::rectangle},
      {"tractor", {140, 180, 0}, Shape::ellipse},
      {"mountain", {100, 100, 160}, Shape::triangle},
      {"tree", {20, 20, 20}, Shape::triangle},
      {"statue", {190, 120, 250}, Shape::ellipse},
      {"store front", {0, 120, 255}, Shape::rectangle},
  };
  return kCategories;
}

const Category& category(std::string_view name) {
  for (const Category& c : all_categories())
    if (c.name == name) return c;
  throw ArgumentError("unknown category: " + std::string(name));
}

bool is_category(std::string_view name) {
  const auto& all = all_categories();
  return std::any_of(all.begin(), all.end(), [&](const Category& c) { return c.name == name; });
}

void CategoryDistribution::validate() const {
  if (labels.empty() || labels.size() != weights.size())
    throw ConfigError("category distribution needs one weight per label");
  for (double w : weights)
    if (!(w >= 0.0)) throw ConfigError("category weights must be non-negative");
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("category weights must sum to 1");
  for (const auto& l : labels)
    if (!is_category(l)) throw ConfigError("unknown category in distribution: " + l);
}

double CategoryDistribution::mass_of_top(std::size_t n) const {
  std::vector<double> sorted = weights;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  n = std::min(n, sorted.size());
  return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
}

CategoryDistribution CategoryDistribution::selection_default() {
  CategoryDistribution d;
  const std::vector<double> w = {0.24,  0.19,  0.15,  0.12,  0.10,  0.04,  0.035, 0.03,  0.025, 0.02,
                                 0.010, 0.008, 0.007, 0.006, 0.005, 0.004, 0.004, 0.003, 0.003};
  const auto& cats = all_categories();
  for (std::size_t i = 0; i < cats.size(); ++i) {
    d.labels.emplace_back(cats[i].name);
    d.weights.push_back(w[i]);
  }
  return d;
}

CategoryDistribution CategoryDistribution::click_default() {
  return CategoryDistribution{{"bus", "traffic light", "crosswalk", "car", "fire hydrant"},
                              {0.30, 0.25, 0.20, 0.15, 0.10}};
}

}  // namespace cgl
