#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "cgl/random.hpp"
#include "cgl/risk.hpp"

namespace cgl {

// Simulated time in seconds since the start of day 0.
using SimTime = double;
constexpr double kSecondsPerDay = 86400.0;

struct RateLimitConfig {
  int daily_cap = 800;
  double block_min_minutes = 36.0;
  double block_max_minutes = 95.0;
  double p_tor_block = 0.30;

  void validate() const;  // throws ConfigError
};

struct IpState {
  std::string ip;
  IpClass ip_class = IpClass::regular;
  int daily_count = 0;
  std::optional<SimTime> blocked_until;
  std::int64_t day = 0;
  std::optional<SimTime> last_seen;
};

struct RateDecision {
  bool allowed = true;
  std::optional<SimTime> until;  // set when blocked by an active block
  bool new_block = false;        // this request started a block
};

// Counts the request, then decides. The day boundary clears both the count and
// any block. Regular IPs: requests past the cap start a fresh block once the
// previous one has expired. Tor IPs ignore the cap; each request is refused
// independently with p_tor_block.
// Throws StateError if `now` is earlier than the last request seen.
RateDecision rate_limit_check(IpState& state, SimTime now, const RateLimitConfig& config, Rng& rng);

// Per-IP state table. Each IP's state is guarded by its own mutex, so checks
// for distinct IPs run concurrently.
class RateLimiter {
 public:
  explicit RateLimiter(RateLimitConfig config = {}, std::uint64_t seed = 0);

  RateDecision check(const std::string& ip, IpClass ip_class, SimTime now);
  IpState snapshot(const std::string& ip) const;

 private:
  struct Entry {
    std::mutex mu;
    IpState state;
    Rng rng{0};
  };
  Entry& entry(const std::string& ip, IpClass ip_class);

  RateLimitConfig config_;
  std::uint64_t seed_;
  mutable std::mutex table_mu_;
  std::map<std::string, std::unique_ptr<Entry>> table_;
};

}  // namespace cgl
