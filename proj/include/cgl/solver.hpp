#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cgl/challenge.hpp"
#include "cgl/detector.hpp"
#include "cgl/geometry.hpp"
#include "cgl/policy.hpp"
#include "cgl/random.hpp"

namespace cgl {

enum class ActionKind { load, detect, click, wait, reload, submit };
std::string_view to_string(ActionKind k);
ActionKind action_kind_from_string(std::string_view s);

struct TraceAction {
  ActionKind kind = ActionKind::load;
  int cell = 0;          // click only
  double latency_s = 0;  // wait only: slowest tile regeneration of the loop
  double t = 0;          // start time, set by simulate_timing

  friend bool operator==(const TraceAction&, const TraceAction&) = default;
};

struct SolveTrace {
  std::string challenge_id;  // the challenge that was finally submitted
  ChallengeKind kind = ChallengeKind::selection;
  std::string target_label;
  std::vector<TraceAction> actions;
  std::vector<std::vector<Detection>> detections;  // one entry per detect action
  std::vector<int> submitted;  // selection: cells selected at submit; click: every click in order
  int loops = 0;
  int reloads = 0;
  std::optional<std::string> error;  // detector failure; nothing was submitted
  VerifyOutcome outcome;
  double duration_s = 0;  // set by simulate_timing
};

struct SolverOptions {
  MappingMode mode = MappingMode::intersection();
  int max_reloads = 3;
  int max_loops = 10;
  // Click challenges: after the first loop, act on the full image (true) or
  // only on the tiles that were just regenerated (false).
  bool full_image_redetect = true;
};

// Randomness used while solving: detector calls derive from detector_seed,
// tile regeneration draws from server, acceptance draws from verify.
struct SolveStreams {
  std::uint64_t detector_seed = 0;
  Rng server{0};
  Rng verify{0};
};

// Supplies a fresh challenge when the solver presses reload; the argument
// counts reloads from 1.
using ReloadFn = std::function<Challenge(int)>;

// Detect, map every target detection to its cells, select the union, submit.
// With no target detection the solver reloads up to max_reloads times (when a
// reload source is given) and then submits an empty selection.
SolveTrace solve_selection(const Challenge& challenge, Detector& detector, const FlexibilityPolicy& policy,
                           SolveStreams& streams, const SolverOptions& options = {}, const ReloadFn& reload = {});

// Detect, click every potential cell, wait for the tiles to come back, repeat
// until nothing is detected or max_loops click loops ran, then submit.
SolveTrace solve_click(Challenge challenge, Detector& detector, const FlexibilityPolicy& policy,
                       SolveStreams& streams, const SolverOptions& options = {});

// Dispatches on challenge.kind.
SolveTrace solve(const Challenge& challenge, Detector& detector, const FlexibilityPolicy& policy,
                 SolveStreams& streams, const SolverOptions& options = {}, const ReloadFn& reload = {});

struct TimingConfig {
  double inference_s = 6.5;
  double inference_sd = 0.3;
  double per_click_s = 1.6;
  double click_jitter = 0.5;  // each click takes per_click_s * (1 + U[-j, j])
  Range load_s{1.0, 8.0};
  double wait_scale = 1.0;  // multiplies the recorded tile regeneration latency

  void validate() const;  // throws ConfigError
};

// Stamps every action with its start time and returns the total. load and
// reload draw U[load_s]; detect N(inference_s, inference_sd) floored at 0.1 s;
// submit takes no time. Deterministic per seed.
double simulate_timing(SolveTrace& trace, const TimingConfig& timing, std::uint64_t seed);

// One JSON object per line: a header, then one line per action, then the result.
std::string trace_to_jsonl(const SolveTrace& trace);
SolveTrace trace_from_jsonl(std::string_view text);  // throws ParseError

}  // namespace cgl
