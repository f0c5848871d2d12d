#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cgl {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

enum class Shape { rectangle, ellipse, triangle };

std::string_view to_string(Shape s);
Shape shape_from_string(std::string_view s);

// A labelled object class with the colour and silhouette the renderer uses
// for it. Colours are pairwise far apart so a colour-rule detector can
// recover labels from pixels.
struct Category {
  std::string_view name;
  Rgb color;
  Shape shape;
};

// The 19 object classes observed in the wild, most frequent first.
const std::vector<Category>& all_categories();
const Category& category(std::string_view name);  // throws ArgumentError if unknown
bool is_category(std::string_view name);

// Discrete distribution over category names.
struct CategoryDistribution {
  std::vector<std::string> labels;
  std::vector<double> weights;

  void validate() const;  // throws ConfigError unless weights are >= 0 and sum to 1
  double mass_of_top(std::size_t n) const;

  // Heavy-headed: top five carry 0.80 of the mass, top ten 0.95.
  static CategoryDistribution selection_default();
  // Exactly five classes.
  static CategoryDistribution click_default();
};

}  // namespace cgl
