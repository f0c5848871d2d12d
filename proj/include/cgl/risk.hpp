#pragma once

#include <array>
#include <string>
#include <string_view>

#include "cgl/imaging.hpp"
#include "cgl/policy.hpp"

namespace cgl {

enum class IpClass { regular, tor };
std::string_view to_string(IpClass c);
IpClass ip_class_from_string(std::string_view s);

struct ClientSignals {
  bool webdriver = false;
  double cookie_age_days = 0.0;
  IpClass ip_class = IpClass::regular;
  double request_rate_per_min = 0.0;

  void validate() const;  // throws ArgumentError

  // A long-lived browser profile on a residential IP.
  static ClientSignals low_risk() { return {false, 365.0, IpClass::regular, 0.1}; }
  // Automation framework advertising itself, fresh profile.
  static ClientSignals webdriver_client() { return {true, 0.0, IpClass::regular, 1.0}; }
  static ClientSignals tor_client() { return {false, 0.0, IpClass::tor, 1.0}; }
};

// score = min(1, fresh_cookie * exp(-age / cookie_decay_days) + tor
//                + min(rate_cap, rate_weight * requests_per_min))
// then raised to webdriver_floor when the webdriver flag is set.
struct RiskWeights {
  double fresh_cookie = 0.4;
  double cookie_decay_days = 30.0;
  double tor = 0.3;
  double rate_weight = 0.1;
  double rate_cap = 0.5;
  double webdriver_floor = 0.8;
};

double risk_score(const ClientSignals& signals, const RiskWeights& weights = {});

enum class SecurityPref { easiest, medium, most_secure };
std::string_view to_string(SecurityPref p);
SecurityPref security_pref_from_string(std::string_view s);

constexpr int kMaxRounds = 5;

struct DifficultyProfile {
  SecurityPref security_pref = SecurityPref::medium;
  double p_click = 0.0;
  std::array<double, kMaxRounds> rounds_distribution{1.0, 0, 0, 0, 0};  // P(rounds = 1..5)
  Range noise_sigma_range{0.0, 0.0};
  FlexibilityPolicy flexibility;
  double p_no_challenge = 0.0;  // checkbox-only pass

  void validate() const;  // throws ConfigError
};

// Anchor points of the risk -> difficulty map. Scores at or below low_score
// get the low-risk profile, scores at or above high_score the high-risk one,
// with linear interpolation in between.
struct DifficultyTuning {
  double low_score = 0.2;
  double high_score = 0.8;
  double p_click_low = 87.0 / 788.0;
  double p_click_high = 0.30;
  std::array<double, kMaxRounds> rounds_low{0.8081, 0.1684, 0.0140, 0.0065, 0.0030};
  std::array<double, kMaxRounds> rounds_high{0.5500, 0.3000, 0.1000, 0.0350, 0.0150};
  std::array<double, kMaxRounds> rounds_secure_low{0.4500, 0.3500, 0.1200, 0.0500, 0.0300};
  std::array<double, kMaxRounds> rounds_secure_high{0.3000, 0.3800, 0.1700, 0.1000, 0.0500};
  double noise_hi_low = 2.0;
  double noise_hi_high = 15.0;
  double p_no_challenge_low = 12.0 / 800.0;
};

DifficultyProfile difficulty_from_risk(double score, SecurityPref pref, const DifficultyTuning& tuning = {});

}  // namespace cgl
