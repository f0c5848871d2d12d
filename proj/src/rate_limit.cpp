#include "cgl/rate_limit.hpp"

#include <cmath>

#include "cgl/error.hpp"

namespace cgl {

void RateLimitConfig::validate() const {
  if (daily_cap < 0) throw ConfigError("daily cap must be non-negative");
  if (!(block_min_minutes > 0 && block_min_minutes <= block_max_minutes))
    throw ConfigError("block duration range must satisfy 0 < min <= max");
  if (!(p_tor_block >= 0 && p_tor_block <= 1)) throw ConfigError("p_tor_block must lie in [0, 1]");
}

RateDecision rate_limit_check(IpState& s, SimTime now, const RateLimitConfig& cfg, Rng& rng) {
  if (!std::isfinite(now)) throw ArgumentError("timestamp must be finite");
  if (s.last_seen && now < *s.last_seen) throw StateError("simulated clock went backwards");
  s.last_seen = now;

  const auto day = static_cast<std::int64_t>(std::floor(now / kSecondsPerDay));
  if (day != s.day) {
    s.day = day;
    s.daily_count = 0;
    s.blocked_until.reset();
  }
  ++s.daily_count;

  RateDecision d;
  if (s.blocked_until && now < *s.blocked_until) {
    d.allowed = false;
    d.until = s.blocked_until;
  } else if (s.ip_class == IpClass::regular && s.daily_count > cfg.daily_cap) {
    const double minutes = rng.uniform(cfg.block_min_minutes, cfg.block_max_minutes);
    s.blocked_until = now + minutes * 60.0;
    d.allowed = false;
    d.until = s.blocked_until;
    d.new_block = true;
  }
  if (d.allowed && s.ip_class == IpClass::tor && rng.bernoulli(cfg.p_tor_block)) d.allowed = false;
  return d;
}

RateLimiter::RateLimiter(RateLimitConfig config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.validate();
}

RateLimiter::Entry& RateLimiter::entry(const std::string& ip, IpClass ip_class) {
  std::lock_guard lock(table_mu_);
  auto& slot = table_[ip];
  if (!slot) {
    slot = std::make_unique<Entry>();
    slot->state.ip = ip;
    slot->state.ip_class = ip_class;
    slot->rng = Rng(derive_seed(seed_, "ip:" + ip));
  }
  return *slot;
}

RateDecision RateLimiter::check(const std::string& ip, IpClass ip_class, SimTime now) {
  Entry& e = entry(ip, ip_class);
  std::lock_guard lock(e.mu);
  return rate_limit_check(e.state, now, config_, e.rng);
}

IpState RateLimiter::snapshot(const std::string& ip) const {
  std::unique_lock lock(table_mu_);
  auto it = table_.find(ip);
  if (it == table_.end()) throw ArgumentError("unknown ip: " + ip);
  Entry& e = *it->second;
  lock.unlock();
  std::lock_guard elock(e.mu);
  return e.state;
}

}  // namespace cgl
