#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cgl/categories.hpp"
#include "cgl/geometry.hpp"

namespace cgl {

// Row-major, 3 channels, 8 bits per channel.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});
  Image(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return pixels_[index(x, y, c)]; }
  Rgb pixel(int x, int y) const { return {at(x, y, 0), at(x, y, 1), at(x, y, 2)}; }
  void set_pixel(int x, int y, Rgb p) {
    at(x, y, 0) = p.r;
    at(x, y, 1) = p.g;
    at(x, y, 2) = p.b;
  }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3 +
           static_cast<std::size_t>(c);
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct SceneObject {
  std::string label;
  BoundingBox box;
  Shape shape = Shape::rectangle;
  Rgb color;
  int tile = 0;  // owning grid cell for click challenges, 0 when the object is free-floating

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

// Ground truth for one challenge image. Objects are painted in order, so a
// later object occludes an earlier one.
struct Scene {
  int width = 0;
  int height = 0;
  std::vector<SceneObject> objects;

  friend bool operator==(const Scene&, const Scene&) = default;
};

// Builds an object with the category's palette colour and silhouette.
SceneObject make_object(std::string_view label, const BoundingBox& box, int tile = 0);

// 8-bit quantisation used by every filter: round half away from zero, then
// clamp to [0, 255].
std::uint8_t quantize(double v);

Image render_scene(const Scene& scene, std::uint64_t seed);

// Adds i.i.d. N(0, sigma^2) per pixel and channel. Throws ArgumentError on
// negative sigma.
Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed);

enum class BlurKind { gaussian, median, average };
std::string_view to_string(BlurKind k);
BlurKind blur_kind_from_string(std::string_view s);

// gaussian: param is sigma (> 0). median/average: param is an odd kernel
// size in [3, 31]. Clamp-to-edge borders.
Image blur(const Image& image, BlurKind kind, double param);

// Pixel-wise (v - 128) * contrast + 128 + brightness.
Image adjust_brightness_contrast(const Image& image, double brightness, double contrast);

// Blind estimate of the Gaussian noise standard deviation, averaged over the
// three channels. Per channel: the orthonormal Haar diagonal coefficient of
// every non-overlapping 2x2 block, (a - b - c + d) / 2, has the same standard
// deviation as i.i.d. pixel noise; the robust estimate is median(|d|) / 0.6745.
// Throws ArgumentError if either dimension is below 2.
double estimate_noise_sigma(const Image& image);

// True iff sigma_hat exceeds threshold (strictly).
bool classify_perturbed(double sigma_hat, double threshold = 10.0);

// One applied augmentation with its resolved parameters. Enough to replay it.
struct PerturbationOp {
  enum class Kind { brightness_contrast, gaussian_noise, gaussian_blur, median_blur, average_blur };
  Kind kind = Kind::gaussian_noise;
  double brightness = 0.0;
  double contrast = 1.0;
  double sigma = 0.0;  // noise sigma or gaussian-blur sigma
  int k = 0;           // median/average kernel
  std::uint64_t noise_seed = 0;

  friend bool operator==(const PerturbationOp&, const PerturbationOp&) = default;
};

struct PerturbationRecord {
  std::vector<PerturbationOp> ops;
  double total_sigma = 0.0;  // injected Gaussian noise sigma, 0 if none

  friend bool operator==(const PerturbationRecord&, const PerturbationRecord&) = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Per-op probabilities and parameter ranges. Defaults mirror the usual
// training-time augmentation: noise scale in (0, 0.2*255], gaussian blur
// sigma in [0.5, 5], median/average kernels odd in [5, 17].
struct PerturbationConfig {
  double p_brightness_contrast = 0.0;
  Range brightness{-40.0, 40.0};
  Range contrast{0.7, 1.3};

  double p_noise = 0.0;
  Range noise_sigma{0.0, 0.2 * 255.0};
  bool noise_lo_exclusive = true;  // draw from (lo, hi] rather than [lo, hi]

  double p_blur = 0.0;
  Range gaussian_blur_sigma{0.5, 5.0};
  int kernel_min = 5;
  int kernel_max = 17;

  void validate() const;  // throws ConfigError

  // Every op certain to fire; handy for stress corpora.
  static PerturbationConfig all_ops();
};

// Samples which ops fire and their parameters. Fixed order:
// brightness/contrast, then noise, then blur.
PerturbationRecord sample_perturbation(const PerturbationConfig& config, std::uint64_t seed);

// Replays a record against an image. Byte-exact with augment_pipeline.
Image apply_perturbation(const Image& image, const PerturbationRecord& record);

std::pair<Image, PerturbationRecord> augment_pipeline(const Image& image, const PerturbationConfig& config,
                                                      std::uint64_t seed);

// PNG I/O (RGB8).
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);  // throws ParseError
void write_png(const std::filesystem::path& path, const Image& image);  // throws IoError
Image read_png(const std::filesystem::path& path);                      // throws IoError / ParseError

}  // namespace cgl
