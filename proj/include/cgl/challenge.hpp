#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cgl/categories.hpp"
#include "cgl/geometry.hpp"
#include "cgl/imaging.hpp"
#include "cgl/random.hpp"
#include "cgl/risk.hpp"

namespace cgl {

enum class ChallengeKind { selection, click };
std::string_view to_string(ChallengeKind k);
ChallengeKind challenge_kind_from_string(std::string_view s);

// Tile regeneration behaviour of click challenges. A regenerated tile holds
// the target with probability p_regen * decay^n, n being how many times that
// tile was regenerated before.
struct ClickDynamics {
  double p_regen = 0.25;
  double decay = 0.5;
  double p_distractor = 0.6;       // non-target tile carries some other object
  Range latency_s{6.0, 11.0};      // tile fade-out + reload, fitted to the click solve times
};

struct RegenEvent {
  int cell = 0;
  bool has_target = false;
  double latency_s = 0.0;
};

struct Challenge {
  std::string id;
  ChallengeKind kind = ChallengeKind::selection;
  std::string target_label;
  GridSpec grid{4, 4, 400, 400};
  Scene scene;
  PerturbationRecord perturbation;
  std::vector<int> ground_truth_pgns;  // ascending
  std::uint64_t seed = 0;

  // Click challenges only.
  ClickDynamics dynamics;
  std::vector<int> regen_counts;  // per cell, index = cell - 1
  int correct_clicks = 0;
  int wrong_clicks = 0;
  std::vector<RegenEvent> regen_log;

  // Background render plus the recorded perturbation.
  Image render() const;
};

// Cells touched (intersection semantics) by any object labelled `target`.
std::vector<int> ground_truth_for(const Scene& scene, const GridSpec& grid, std::string_view target);

struct GeneratorConfig {
  int selection_rows = 4;
  int selection_cols = 4;
  int click_size = 4;  // click grids are square
  double image_px = 400.0;

  // P(|ground truth| = n) for selection challenges. Defaults put 0.0572 /
  // 0.4259 / 0.3215 on 2 / 3 / 4 cells and spread the rest over 5..14.
  std::map<int, double> pgn_count_distribution = {
      {2, 0.0572}, {3, 0.4259}, {4, 0.3215}, {5, 0.0600}, {6, 0.0450},  {7, 0.0300},  {8, 0.0200},
      {9, 0.0150}, {10, 0.0100}, {11, 0.0070}, {12, 0.0040}, {13, 0.0020}, {14, 0.0024}};
  int max_target_objects = 3;
  int max_distractors = 3;
  double edge_margin_px = 8.0;  // target box edges keep this far from grid lines
  double min_object_px = 24.0;

  CategoryDistribution click_categories = CategoryDistribution::click_default();
  std::map<int, double> click_initial_targets = {{2, 0.3}, {3, 0.4}, {4, 0.3}};
  ClickDynamics dynamics;

  double p_blur = 0.0;  // extra anti-recognition blur on top of noise
  int max_attempts = 2000;

  void validate() const;  // throws ConfigError
};

// Deterministic per seed. `force_kind` overrides the p_click draw (the draw
// still happens, so other streams do not shift). Throws GenerationError if a
// layout with the sampled ground-truth size cannot be found.
Challenge generate_challenge(const DifficultyProfile& difficulty, const CategoryDistribution& categories,
                             std::uint64_t seed, const GeneratorConfig& config = {},
                             std::optional<ChallengeKind> force_kind = std::nullopt);

// Click challenges: replace the tile's content. Throws StateError on a
// selection challenge and ArgumentError for an out-of-range cell.
Challenge regenerate_cell(Challenge challenge, int cell, Rng& rng);

// Click challenges: one click on `cell`. Counts it as correct if the tile
// currently shows the target, wrong otherwise, then regenerates the tile.
// Returns whether the click was correct.
bool click_cell(Challenge& challenge, int cell, Rng& rng);

struct VerifyOutcome {
  bool passed = false;
  int missed = 0;
  int wrong = 0;

  friend bool operator==(const VerifyOutcome&, const VerifyOutcome&) = default;
};

// Draws exactly one uniform from rng regardless of the outcome.
VerifyOutcome verify_selection(const Challenge& challenge, const std::set<int>& selected,
                               const FlexibilityPolicy& policy, Rng& rng);
VerifyOutcome verify_click(const Challenge& challenge, const FlexibilityPolicy& policy, Rng& rng);

enum class SessionState { active, passed, failed };
enum class RoundResult { continue_session, passed, failed };
std::string_view to_string(SessionState s);

struct RoundRecord {
  std::string challenge_id;
  VerifyOutcome outcome;
};

struct Session {
  std::string session_id;
  ClientSignals client;
  DifficultyProfile difficulty;
  int rounds_total = 1;
  int rounds_remaining = 1;
  SessionState state = SessionState::active;
  std::vector<RoundRecord> history;
};

Session open_session(std::string id, const ClientSignals& client, const DifficultyProfile& difficulty, int rounds);

// Samples a round count from the profile's distribution.
int sample_rounds(const DifficultyProfile& difficulty, Rng& rng);

// Records one verified round. Throws StateError on a finished session.
RoundResult next_round(Session& session, std::string challenge_id, const VerifyOutcome& outcome);

}  // namespace cgl
