#include "cgl/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "cgl/error.hpp"
#include "cgl/random.hpp"

namespace cgl {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw ArgumentError("image dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) throw ArgumentError("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3)
    throw ArgumentError("pixel buffer size must equal width * height * 3");
}

SceneObject make_object(std::string_view label, const BoundingBox& box, int tile) {
  const Category& cat = category(label);
  return SceneObject{std::string(cat.name), box, cat.shape, cat.color, tile};
}

std::uint8_t quantize(double v) {
  double r = std::round(v);  // half away from zero
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

namespace {

bool inside_shape(const SceneObject& obj, double px, double py) {
  const BoundingBox& b = obj.box;
  switch (obj.shape) {
    case Shape::rectangle:
      return true;
    case Shape::ellipse: {
      double cx = (b.x_min() + b.x_max()) / 2, cy = (b.y_min() + b.y_max()) / 2;
      double rx = b.width() / 2, ry = b.height() / 2;
      double dx = (px - cx) / rx, dy = (py - cy) / ry;
      return dx * dx + dy * dy <= 1.0;
    }
    case Shape::triangle: {
      // Apex at top centre, base along the bottom edge.
      double t = (py - b.y_min()) / b.height();
      double cx = (b.x_min() + b.x_max()) / 2;
      double half = t * b.width() / 2;
      return px >= cx - half && px <= cx + half;
    }
  }
  return false;
}

}  // namespace

Image render_scene(const Scene& scene, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "background"));
  // Muted earth tone with a smooth, low-frequency texture. Kept far from the
  // category palette and free of pixel-scale detail so a clean render reads
  // as noise-free.
  const double base[3] = {rng.uniform(150, 175), rng.uniform(140, 165), rng.uniform(115, 140)};
  const double amp = rng.uniform(4.0, 8.0);
  const double px_period = rng.uniform(90, 160), py_period = rng.uniform(90, 160);
  const double phase_x = rng.uniform(0, 2 * std::numbers::pi), phase_y = rng.uniform(0, 2 * std::numbers::pi);
  const double tilt = rng.uniform(-0.02, 0.02);

  Image img(scene.width, scene.height);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      double tex = amp * std::sin(2 * std::numbers::pi * x / px_period + phase_x) *
                       std::sin(2 * std::numbers::pi * y / py_period + phase_y) +
                   tilt * (x + y);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = quantize(base[c] + tex);
    }
  }

  for (const SceneObject& obj : scene.objects) {
    const BoundingBox& b = obj.box;
    if (b.degenerate()) continue;
    // Only pixels whose whole square lies in the box are painted, so the box
    // always encloses the drawn shape.
    int x0 = std::max(0, static_cast<int>(std::ceil(b.x_min())));
    int y0 = std::max(0, static_cast<int>(std::ceil(b.y_min())));
    int x1 = std::min(scene.width, static_cast<int>(std::floor(b.x_max())));
    int y1 = std::min(scene.height, static_cast<int>(std::floor(b.y_max())));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x)
        if (inside_shape(obj, x + 0.5, y + 0.5)) img.set_pixel(x, y, obj.color);
  }
  return img;
}

Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise sigma must be non-negative");
  if (sigma == 0.0) return image;
  Image out = image;
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (std::uint8_t& v : out.pixels()) v = quantize(v + dist(rng.engine()));
  return out;
}

std::string_view to_string(BlurKind k) {
  switch (k) {
    case BlurKind::gaussian:
      return "gaussian";
    case BlurKind::median:
      return "median";
    case BlurKind::average:
      return "average";
  }
  return "gaussian";
}

BlurKind blur_kind_from_string(std::string_view s) {
  if (s == "gaussian") return BlurKind::gaussian;
  if (s == "median") return BlurKind::median;
  if (s == "average") return BlurKind::average;
  throw ArgumentError("unknown blur kind: " + std::string(s));
}

namespace {

int clamp_coord(int v, int n) { return std::clamp(v, 0, n - 1); }

int checked_kernel(double param) {
  if (param != std::floor(param)) throw ArgumentError("kernel size must be an integer");
  int k = static_cast<int>(param);
  if (k % 2 == 0) throw ArgumentError("kernel size must be odd");
  if (k < 3 || k > 31) throw ArgumentError("kernel size must lie in [3, 31]");
  return k;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("gaussian blur sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const int W = img.width(), H = img.height();
  std::vector<double> tmp(static_cast<std::size_t>(W) * H * 3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[static_cast<std::size_t>(i + radius)] * img.at(clamp_coord(x + i, W), y, c);
        tmp[(static_cast<std::size_t>(y) * W + x) * 3 + c] = acc;
      }
  Image out(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[static_cast<std::size_t>(i + radius)] *
                 tmp[(static_cast<std::size_t>(clamp_coord(y + i, H)) * W + x) * 3 + c];
        out.at(x, y, c) = quantize(acc);
      }
  return out;
}

Image average_blur(const Image& img, int k) {
  // Integer box sums keep constant images bit-exact.
  const int r = k / 2, W = img.width(), H = img.height();
  std::vector<int> rows(static_cast<std::size_t>(W) * H * 3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        int acc = 0;
        for (int i = -r; i <= r; ++i) acc += img.at(clamp_coord(x + i, W), y, c);
        rows[(static_cast<std::size_t>(y) * W + x) * 3 + c] = acc;
      }
  Image out(W, H);
  const double norm = static_cast<double>(k) * k;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        int acc = 0;
        for (int i = -r; i <= r; ++i) acc += rows[(static_cast<std::size_t>(clamp_coord(y + i, H)) * W + x) * 3 + c];
        out.at(x, y, c) = quantize(acc / norm);
      }
  return out;
}

// Sliding-histogram median (Huang): O(k) work per pixel.
Image median_blur(const Image& img, int k) {
  const int r = k / 2, W = img.width(), H = img.height();
  const int rank = (k * k) / 2;  // zero-based middle element
  Image out(W, H);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < H; ++y) {
      std::array<int, 256> hist{};
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) ++hist[img.at(clamp_coord(dx, W), clamp_coord(y + dy, H), c)];
      for (int x = 0; x < W; ++x) {
        if (x > 0) {
          int old_x = clamp_coord(x - r - 1, W), new_x = clamp_coord(x + r, W);
          for (int dy = -r; dy <= r; ++dy) {
            int yy = clamp_coord(y + dy, H);
            --hist[img.at(old_x, yy, c)];
            ++hist[img.at(new_x, yy, c)];
          }
        }
        int seen = 0, v = 0;
        for (; v < 256; ++v) {
          seen += hist[static_cast<std::size_t>(v)];
          if (seen > rank) break;
        }
        out.at(x, y, c) = static_cast<std::uint8_t>(v);
      }
    }
  }
  return out;
}

}  // namespace

Image blur(const Image& image, BlurKind kind, double param) {
  switch (kind) {
    case BlurKind::gaussian:
      return gaussian_blur(image, param);
    case BlurKind::median:
      return median_blur(image, checked_kernel(param));
    case BlurKind::average:
      return average_blur(image, checked_kernel(param));
  }
  throw ArgumentError("unknown blur kind");
}

Image adjust_brightness_contrast(const Image& image, double brightness, double contrast) {
  Image out = image;
  for (std::uint8_t& v : out.pixels()) v = quantize((v - 128.0) * contrast + 128.0 + brightness);
  return out;
}

double estimate_noise_sigma(const Image& image) {
  if (image.width() < 2 || image.height() < 2) throw ArgumentError("noise estimation needs at least 2x2 pixels");
  const int bw = image.width() / 2, bh = image.height() / 2;
  std::vector<double> mags(static_cast<std::size_t>(bw) * bh);
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::size_t n = 0;
    for (int by = 0; by < bh; ++by)
      for (int bx = 0; bx < bw; ++bx) {
        int x = 2 * bx, y = 2 * by;
        double d = (double(image.at(x, y, c)) - image.at(x + 1, y, c) - image.at(x, y + 1, c) +
                    image.at(x + 1, y + 1, c)) /
                   2.0;
        mags[n++] = std::abs(d);
      }
    auto mid = mags.begin() + static_cast<std::ptrdiff_t>((mags.size() - 1) / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    double med = *mid;
    if (mags.size() % 2 == 0) {
      double upper = *std::min_element(mid + 1, mags.end());
      med = (med + upper) / 2.0;
    }
    total += med / 0.6745;
  }
  return total / 3.0;
}

bool classify_perturbed(double sigma_hat, double threshold) { return sigma_hat > threshold; }

void PerturbationConfig::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " probability must lie in [0, 1]");
  };
  auto range = [](const Range& r, const char* what) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
      throw ConfigError(std::string(what) + " range must satisfy lo <= hi");
  };
  prob(p_brightness_contrast, "brightness/contrast");
  prob(p_noise, "noise");
  prob(p_blur, "blur");
  range(brightness, "brightness");
  range(contrast, "contrast");
  range(noise_sigma, "noise sigma");
  range(gaussian_blur_sigma, "gaussian blur sigma");
  if (contrast.lo < 0.0) throw ConfigError("contrast gain must be non-negative");
  if (noise_sigma.lo < 0.0) throw ConfigError("noise sigma must be non-negative");
  if (noise_lo_exclusive && p_noise > 0.0 && !(noise_sigma.hi > noise_sigma.lo))
    throw ConfigError("half-open noise range (lo, hi] is empty");
  if (gaussian_blur_sigma.lo <= 0.0) throw ConfigError("gaussian blur sigma must be positive");
  if (kernel_min < 3 || kernel_max > 31 || kernel_min > kernel_max || kernel_min % 2 == 0 || kernel_max % 2 == 0)
    throw ConfigError("kernel range must be odd bounds within [3, 31]");
}

PerturbationConfig PerturbationConfig::all_ops() {
  PerturbationConfig cfg;
  cfg.p_brightness_contrast = 1.0;
  cfg.p_noise = 1.0;
  cfg.p_blur = 1.0;
  return cfg;
}

PerturbationRecord sample_perturbation(const PerturbationConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  PerturbationRecord rec;
  // Every gate and parameter is drawn unconditionally so that flipping one
  // probability does not reshuffle the draws of the other ops.
  const bool do_bc = rng.bernoulli(config.p_brightness_contrast);
  const double brightness = rng.uniform(config.brightness.lo, config.brightness.hi);
  const double contrast = rng.uniform(config.contrast.lo, config.contrast.hi);
  const bool do_noise = rng.bernoulli(config.p_noise);
  double sigma = rng.uniform(config.noise_sigma.lo, config.noise_sigma.hi);
  if (config.noise_lo_exclusive) sigma = config.noise_sigma.hi - (sigma - config.noise_sigma.lo);  // (lo, hi]
  const std::uint64_t noise_seed = rng.next_u64();
  const bool do_blur = rng.bernoulli(config.p_blur);
  const int which = rng.uniform_int(0, 2);
  const double blur_sigma = rng.uniform(config.gaussian_blur_sigma.lo, config.gaussian_blur_sigma.hi);
  const int kernel = config.kernel_min + 2 * rng.uniform_int(0, (config.kernel_max - config.kernel_min) / 2);

  if (do_bc) {
    PerturbationOp op;
    op.kind = PerturbationOp::Kind::brightness_contrast;
    op.brightness = brightness;
    op.contrast = contrast;
    rec.ops.push_back(op);
  }
  if (do_noise) {
    PerturbationOp op;
    op.kind = PerturbationOp::Kind::gaussian_noise;
    op.sigma = sigma;
    op.noise_seed = noise_seed;
    rec.ops.push_back(op);
    rec.total_sigma = sigma;
  }
  if (do_blur) {
    PerturbationOp op;
    if (which == 0) {
      op.kind = PerturbationOp::Kind::gaussian_blur;
      op.sigma = blur_sigma;
    } else {
      op.kind = which == 1 ? PerturbationOp::Kind::median_blur : PerturbationOp::Kind::average_blur;
      op.k = kernel;
    }
    rec.ops.push_back(op);
  }
  return rec;
}

Image apply_perturbation(const Image& image, const PerturbationRecord& record) {
  Image out = image;
  for (const PerturbationOp& op : record.ops) {
    switch (op.kind) {
      case PerturbationOp::Kind::brightness_contrast:
        out = adjust_brightness_contrast(out, op.brightness, op.contrast);
        break;
      case PerturbationOp::Kind::gaussian_noise:
        out = add_gaussian_noise(out, op.sigma, op.noise_seed);
        break;
      case PerturbationOp::Kind::gaussian_blur:
        out = blur(out, BlurKind::gaussian, op.sigma);
        break;
      case PerturbationOp::Kind::median_blur:
        out = blur(out, BlurKind::median, op.k);
        break;
      case PerturbationOp::Kind::average_blur:
        out = blur(out, BlurKind::average, op.k);
        break;
    }
  }
  return out;
}

std::pair<Image, PerturbationRecord> augment_pipeline(const Image& image, const PerturbationConfig& config,
                                                      std::uint64_t seed) {
  PerturbationRecord rec = sample_perturbation(config, seed);
  Image out = apply_perturbation(image, rec);
  return {std::move(out), std::move(rec)};
}

}  // namespace cgl
