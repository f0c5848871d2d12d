#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cgl/error.hpp"
#include "cgl/imaging.hpp"

namespace cgl {
namespace {

Image gray(int w, int h, std::uint8_t v = 128) { return Image(w, h, Rgb{v, v, v}); }

double sample_variance(const Image& img) {
  auto px = img.pixels();
  double mean = std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
  double ss = 0;
  for (auto v : px) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(px.size() - 1);
}

Scene scene_with(std::vector<SceneObject> objects) { return Scene{400, 400, std::move(objects)}; }

TEST(ImageTest, PixelCountInvariant) {
  Image img(7, 5);
  EXPECT_EQ(img.pixels().size(), 7u * 5u * 3u);
  EXPECT_THROW(Image(2, 2, std::vector<std::uint8_t>(11)), ArgumentError);
}

TEST(Quantize, RoundsHalfAwayFromZeroAndClamps) {
  EXPECT_EQ(quantize(28.5), 29);
  EXPECT_EQ(quantize(28.49), 28);
  EXPECT_EQ(quantize(-3.0), 0);
  EXPECT_EQ(quantize(300.0), 255);
}

TEST(Render, EmptySceneIsDeterministicBackground) {
  Scene s = scene_with({});
  Image a = render_scene(s, 42), b = render_scene(s, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, render_scene(s, 43));
}

TEST(Render, ObjectPixelsStayInsideBox) {
  for (const char* label : {"bus", "bicycle", "fire hydrant"}) {
    BoundingBox box(100, 100, 200, 200);
    Scene s = scene_with({make_object(label, box)});
    Image with = render_scene(s, 9);
    Image without = render_scene(scene_with({}), 9);
    int changed = 0;
    for (int y = 0; y < 400; ++y)
      for (int x = 0; x < 400; ++x)
        if (with.pixel(x, y) != without.pixel(x, y)) {
          ++changed;
          EXPECT_TRUE(x >= 100 && x + 1 <= 200 && y >= 100 && y + 1 <= 200) << label << " at " << x << "," << y;
        }
    EXPECT_GT(changed, 3000) << label;
  }
}

TEST(Render, FractionalBoxStillEnclosesShape) {
  BoundingBox box(10.4, 20.7, 60.2, 90.9);
  Scene s = scene_with({make_object("bicycle", box)});
  Image with = render_scene(s, 1), without = render_scene(scene_with({}), 1);
  for (int y = 0; y < 400; ++y)
    for (int x = 0; x < 400; ++x)
      if (with.pixel(x, y) != without.pixel(x, y)) {
        EXPECT_GE(x, box.x_min());
        EXPECT_LE(x + 1, box.x_max());
        EXPECT_GE(y, box.y_min());
        EXPECT_LE(y + 1, box.y_max());
      }
}

TEST(Render, LaterObjectOccludesEarlier) {
  BoundingBox box(50, 50, 150, 150);
  Image img = render_scene(scene_with({make_object("bus", box), make_object("car", box)}), 3);
  EXPECT_EQ(img.pixel(100, 100), category("car").color);
  Image rev = render_scene(scene_with({make_object("car", box), make_object("bus", box)}), 3);
  EXPECT_EQ(rev.pixel(100, 100), category("bus").color);
}

TEST(Noise, ZeroSigmaIsIdentity) {
  Image img = render_scene(scene_with({make_object("bus", BoundingBox(10, 10, 90, 90))}), 5);
  EXPECT_EQ(add_gaussian_noise(img, 0.0, 17), img);
}

TEST(Noise, NegativeSigmaRejected) { EXPECT_THROW(add_gaussian_noise(gray(4, 4), -1.0, 1), ArgumentError); }

TEST(Noise, SampleStdMatchesTenPercentScale) {
  // Monte Carlo over 600*600*3 = 1.08e6 samples at mid-gray.
  const double sigma = 0.1 * 255;
  Image base = gray(600, 600);
  Image noisy = add_gaussian_noise(base, sigma, 2024);
  double sum = 0, sum2 = 0;
  auto a = base.pixels(), b = noisy.pixels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = double(b[i]) - a[i];
    sum += d;
    sum2 += d * d;
  }
  double n = static_cast<double>(a.size());
  double sd = std::sqrt((sum2 - sum * sum / n) / (n - 1));
  EXPECT_NEAR(sd, sigma, 0.05 * sigma);
}

TEST(Noise, SeedsDiffer) {
  Image a = add_gaussian_noise(gray(32, 32), 10, 1), b = add_gaussian_noise(gray(32, 32), 10, 2);
  EXPECT_NE(a, b);
  EXPECT_EQ(a.width(), b.width());
  EXPECT_EQ(a.height(), b.height());
}

TEST(Blur, ConstantImagesPreserved) {
  Image img = gray(40, 30, 77);
  EXPECT_EQ(blur(img, BlurKind::gaussian, 0.5), img);
  EXPECT_EQ(blur(img, BlurKind::gaussian, 5.0), img);
  EXPECT_EQ(blur(img, BlurKind::median, 5), img);
  EXPECT_EQ(blur(img, BlurKind::median, 17), img);
  EXPECT_EQ(blur(img, BlurKind::average, 3), img);
  EXPECT_EQ(blur(img, BlurKind::average, 15), img);
}

TEST(Blur, AverageOfSinglePixel) {
  // Hand-computed: a 3x3 box spreads 255 evenly over nine pixels, 255/9 = 28.33 -> 28.
  Image img = gray(9, 9, 0);
  img.set_pixel(4, 4, Rgb{255, 255, 255});
  Image out = blur(img, BlurKind::average, 3);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      bool near = std::abs(x - 4) <= 1 && std::abs(y - 4) <= 1;
      EXPECT_EQ(out.at(x, y, 0), near ? 28 : 0) << x << "," << y;
    }
}

TEST(Blur, MedianRemovesSpeckAndMatchesBruteForce) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> u(0, 255);
  std::vector<std::uint8_t> px(23 * 17 * 3);
  for (auto& v : px) v = static_cast<std::uint8_t>(u(gen));
  Image img(23, 17, px);
  Image out = blur(img, BlurKind::median, 5);
  for (int y = 0; y < 17; ++y)
    for (int x = 0; x < 23; ++x)
      for (int c = 0; c < 3; ++c) {
        std::vector<int> win;
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx)
            win.push_back(img.at(std::clamp(x + dx, 0, 22), std::clamp(y + dy, 0, 16), c));
        std::nth_element(win.begin(), win.begin() + 12, win.end());
        ASSERT_EQ(out.at(x, y, c), win[12]);
      }
}

TEST(Blur, GaussianReducesVariance) {
  Image noisy = add_gaussian_noise(gray(64, 64), 30, 4);
  EXPECT_LT(sample_variance(blur(noisy, BlurKind::gaussian, 5.0)), 0.1 * sample_variance(noisy));
}

TEST(Blur, Errors) {
  EXPECT_THROW(blur(gray(8, 8), BlurKind::median, 4), ArgumentError);
  EXPECT_THROW(blur(gray(8, 8), BlurKind::average, 6), ArgumentError);
  EXPECT_THROW(blur(gray(8, 8), BlurKind::median, 33), ArgumentError);
  EXPECT_THROW(blur(gray(8, 8), BlurKind::gaussian, 0.0), ArgumentError);
}

TEST(Blur, DimensionsPreserved) {
  Image img = add_gaussian_noise(gray(31, 13), 20, 1);
  for (auto [kind, p] : {std::pair{BlurKind::gaussian, 2.0}, {BlurKind::median, 7.0}, {BlurKind::average, 9.0}}) {
    Image out = blur(img, kind, p);
    EXPECT_EQ(out.width(), 31);
    EXPECT_EQ(out.height(), 13);
  }
}

TEST(NoiseEstimate, ConstantImageIsZero) { EXPECT_EQ(estimate_noise_sigma(gray(50, 50, 200)), 0.0); }

TEST(NoiseEstimate, DegenerateRejected) {
  EXPECT_THROW(estimate_noise_sigma(gray(1, 50)), ArgumentError);
  EXPECT_THROW(estimate_noise_sigma(gray(50, 1)), ArgumentError);
}

TEST(NoiseEstimate, HaarCoefficientHandComputed) {
  // One 2x2 block per channel: (a - b - c + d) / 2 = (10 - 0 - 0 + 10) / 2 = 10
  // in every channel, so the estimate is 10 / 0.6745.
  Image img(2, 2, std::vector<std::uint8_t>{10, 10, 10, 0, 0, 0, 0, 0, 0, 10, 10, 10});
  EXPECT_NEAR(estimate_noise_sigma(img), 10 / 0.6745, 1e-12);
}

TEST(NoiseEstimate, RecoversSigmaTenOnAverage) {
  double total = 0;
  for (int seed = 0; seed < 64; ++seed) total += estimate_noise_sigma(add_gaussian_noise(gray(128, 128), 10, seed));
  double mean = total / 64;
  EXPECT_GE(mean, 8.5);
  EXPECT_LE(mean, 11.5);
}

TEST(NoiseEstimate, CleanRenderedSceneBelowTwo) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Scene s = scene_with({make_object("bus", BoundingBox(40, 60, 260, 170)),
                          make_object("fire hydrant", BoundingBox(300, 220, 380, 390))});
    EXPECT_LT(estimate_noise_sigma(render_scene(s, seed)), 2.0) << seed;
  }
}

TEST(ClassifyPerturbed, StrictThreshold) {
  EXPECT_TRUE(classify_perturbed(14.86));
  EXPECT_FALSE(classify_perturbed(10.0));
  EXPECT_FALSE(classify_perturbed(1.9));
  EXPECT_TRUE(classify_perturbed(5.1, 5.0));
}

TEST(Augment, AllProbabilitiesZeroIsIdentity) {
  Image img = render_scene(scene_with({make_object("car", BoundingBox(10, 10, 100, 80))}), 2);
  PerturbationConfig cfg;
  auto [out, rec] = augment_pipeline(img, cfg, 123);
  EXPECT_EQ(out, img);
  EXPECT_TRUE(rec.ops.empty());
  EXPECT_EQ(rec.total_sigma, 0.0);
}

TEST(Augment, NoiseOnlyRecordsOneOpInRange) {
  Image img = gray(64, 64);
  PerturbationConfig cfg;
  cfg.p_noise = 1.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto [out, rec] = augment_pipeline(img, cfg, seed);
    ASSERT_EQ(rec.ops.size(), 1u);
    EXPECT_EQ(rec.ops[0].kind, PerturbationOp::Kind::gaussian_noise);
    EXPECT_GT(rec.ops[0].sigma, 0.0);
    EXPECT_LE(rec.ops[0].sigma, 51.0);
    EXPECT_EQ(rec.total_sigma, rec.ops[0].sigma);
  }
}

TEST(Augment, DeterministicAndReplayable) {
  Image img = render_scene(scene_with({make_object("boat", BoundingBox(50, 50, 200, 150))}), 6);
  PerturbationConfig cfg;
  cfg.p_brightness_contrast = 0.5;
  cfg.p_noise = 0.7;
  cfg.p_blur = 0.6;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    auto [a, ra] = augment_pipeline(img, cfg, seed);
    auto [b, rb] = augment_pipeline(img, cfg, seed);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ra, rb);
    EXPECT_EQ(apply_perturbation(img, ra), a);
    EXPECT_EQ(a.width(), img.width());
    EXPECT_EQ(a.height(), img.height());
    for (const auto& op : ra.ops) {
      if (op.kind == PerturbationOp::Kind::median_blur || op.kind == PerturbationOp::Kind::average_blur) {
        EXPECT_EQ(op.k % 2, 1);
        EXPECT_GE(op.k, 5);
        EXPECT_LE(op.k, 17);
      }
      if (op.kind == PerturbationOp::Kind::gaussian_blur) {
        EXPECT_GE(op.sigma, 0.5);
        EXPECT_LE(op.sigma, 5.0);
      }
    }
  }
}

TEST(Augment, OrderIsBrightnessNoiseBlur) {
  auto rec = sample_perturbation(PerturbationConfig::all_ops(), 77);
  ASSERT_EQ(rec.ops.size(), 3u);
  EXPECT_EQ(rec.ops[0].kind, PerturbationOp::Kind::brightness_contrast);
  EXPECT_EQ(rec.ops[1].kind, PerturbationOp::Kind::gaussian_noise);
  EXPECT_NE(rec.ops[2].kind, PerturbationOp::Kind::gaussian_noise);
}

TEST(Augment, MalformedRangesRejected) {
  PerturbationConfig cfg;
  cfg.noise_sigma = {10, 5};
  EXPECT_THROW(augment_pipeline(gray(4, 4), cfg, 1), ConfigError);
  cfg = {};
  cfg.kernel_min = 4;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.p_blur = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Png, RoundTrip) {
  Image img = add_gaussian_noise(render_scene(scene_with({make_object("taxi", BoundingBox(5, 5, 50, 50))}), 1), 5, 2);
  EXPECT_EQ(decode_png(encode_png(img)), img);
  std::vector<std::uint8_t> junk = {1, 2, 3};
  EXPECT_THROW(decode_png(junk), ParseError);
}

}  // namespace
}  // namespace cgl
