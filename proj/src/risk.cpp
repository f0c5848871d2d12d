#include "cgl/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cgl/error.hpp"

namespace cgl {

std::string_view to_string(IpClass c) { return c == IpClass::tor ? "tor" : "regular"; }

IpClass ip_class_from_string(std::string_view s) {
  if (s == "regular") return IpClass::regular;
  if (s == "tor") return IpClass::tor;
  throw ArgumentError("unknown ip class: " + std::string(s));
}

void ClientSignals::validate() const {
  if (!(cookie_age_days >= 0.0)) throw ArgumentError("cookie age must be non-negative");
  if (!(request_rate_per_min >= 0.0)) throw ArgumentError("request rate must be non-negative");
}

double risk_score(const ClientSignals& s, const RiskWeights& w) {
  s.validate();
  double score = w.fresh_cookie * std::exp(-s.cookie_age_days / w.cookie_decay_days);
  if (s.ip_class == IpClass::tor) score += w.tor;
  score += std::min(w.rate_cap, w.rate_weight * s.request_rate_per_min);
  score = std::min(score, 1.0);
  if (s.webdriver) score = std::max(score, w.webdriver_floor);
  return score;
}

std::string_view to_string(SecurityPref p) {
  switch (p) {
    case SecurityPref::easiest:
      return "easiest";
    case SecurityPref::medium:
      return "medium";
    case SecurityPref::most_secure:
      return "most_secure";
  }
  return "medium";
}

SecurityPref security_pref_from_string(std::string_view s) {
  if (s == "easiest") return SecurityPref::easiest;
  if (s == "medium") return SecurityPref::medium;
  if (s == "most_secure" || s == "most-secure") return SecurityPref::most_secure;
  throw ConfigError("unknown security preference: " + std::string(s));
}

void DifficultyProfile::validate() const {
  if (!(p_click >= 0.0 && p_click <= 1.0)) throw ConfigError("p_click must lie in [0, 1]");
  if (!(p_no_challenge >= 0.0 && p_no_challenge <= 1.0)) throw ConfigError("p_no_challenge must lie in [0, 1]");
  for (double p : rounds_distribution)
    if (!(p >= 0.0)) throw ConfigError("round probabilities must be non-negative");
  double total = std::accumulate(rounds_distribution.begin(), rounds_distribution.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("round probabilities must sum to 1");
  if (!(noise_sigma_range.lo >= 0.0 && noise_sigma_range.lo <= noise_sigma_range.hi))
    throw ConfigError("noise sigma range must satisfy 0 <= lo <= hi");
}

DifficultyProfile difficulty_from_risk(double score, SecurityPref pref, const DifficultyTuning& tuning) {
  if (!(score >= 0.0 && score <= 1.0)) throw ArgumentError("risk score must lie in [0, 1]");
  const double t =
      std::clamp((score - tuning.low_score) / (tuning.high_score - tuning.low_score), 0.0, 1.0);
  auto lerp = [t](double a, double b) { return a + (b - a) * t; };

  DifficultyProfile d;
  d.security_pref = pref;
  d.p_click = lerp(tuning.p_click_low, tuning.p_click_high);
  const auto& lo = pref == SecurityPref::most_secure ? tuning.rounds_secure_low : tuning.rounds_low;
  const auto& hi = pref == SecurityPref::most_secure ? tuning.rounds_secure_high : tuning.rounds_high;
  for (std::size_t i = 0; i < d.rounds_distribution.size(); ++i) d.rounds_distribution[i] = lerp(lo[i], hi[i]);
  // Renormalise away interpolation round-off so validate() holds exactly.
  double total = std::accumulate(d.rounds_distribution.begin(), d.rounds_distribution.end(), 0.0);
  for (double& p : d.rounds_distribution) p /= total;
  d.noise_sigma_range = {0.0, lerp(tuning.noise_hi_low, tuning.noise_hi_high)};
  d.flexibility = pref == SecurityPref::easiest ? easiest_policy() : strict_policy();
  d.p_no_challenge = lerp(tuning.p_no_challenge_low, 0.0);
  d.validate();
  return d;
}

}  // namespace cgl
