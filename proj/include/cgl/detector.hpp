#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cgl/challenge.hpp"
#include "cgl/geometry.hpp"
#include "cgl/imaging.hpp"

namespace cgl {

// Error model of the simulated detector. Recall falls off with the injected
// noise sigma as r(sigma) = r0 * exp(-sigma / sigma0).
struct DetectorConfig {
  std::string name = "perfect";
  double threshold = 0.2;
  double r0 = 1.0;
  std::map<std::string, double> r0_per_category;  // overrides r0 by label
  double fp_rate = 0.0;                            // P(one false positive) per image
  double sigma_loc = 0.0;                          // px, per box coordinate
  double sigma0 = 1e9;

  double recall(std::string_view label, double noise_sigma) const;
  void validate() const;  // throws ConfigError

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// "perfect", "base", "augmented", "adv". Throws ConfigError for others.
DetectorConfig detector_preset(std::string_view name);
std::vector<std::string> detector_preset_names();

// Each scene object is kept with probability recall(label, total_sigma), its
// box jittered per coordinate and clamped to the frame. Confidences are
// uniform in [threshold, 1]. One false positive with a random label and box
// appears with probability fp_rate. Every draw happens whether or not it is
// used, so two configs run on the same seed stay paired object by object.
std::vector<Detection> oracle_detect(const Scene& scene, const PerturbationRecord& perturbation,
                                     const DetectorConfig& config, std::uint64_t seed);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const Challenge& challenge, std::uint64_t seed) = 0;
  virtual double threshold() const = 0;
  virtual std::string name() const = 0;
};

class OracleDetector final : public Detector {
 public:
  explicit OracleDetector(DetectorConfig config);

  std::vector<Detection> detect(const Challenge& challenge, std::uint64_t seed) override;
  double threshold() const override { return config_.threshold; }
  std::string name() const override { return config_.name; }
  const DetectorConfig& config() const { return config_; }

 private:
  DetectorConfig config_;
};

}  // namespace cgl
