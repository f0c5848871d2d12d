#include "cgl/challenge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cgl/error.hpp"

namespace cgl {

std::string_view to_string(ChallengeKind k) { return k == ChallengeKind::click ? "click" : "selection"; }

ChallengeKind challenge_kind_from_string(std::string_view s) {
  if (s == "selection") return ChallengeKind::selection;
  if (s == "click") return ChallengeKind::click;
  throw ArgumentError("unknown challenge kind: " + std::string(s));
}

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::active:
      return "active";
    case SessionState::passed:
      return "passed";
    case SessionState::failed:
      return "failed";
  }
  return "active";
}

Image Challenge::render() const {
  return apply_perturbation(render_scene(scene, derive_seed(seed, "render")), perturbation);
}

std::vector<int> ground_truth_for(const Scene& scene, const GridSpec& grid, std::string_view target) {
  std::vector<int> cells;
  for (const SceneObject& obj : scene.objects) {
    if (obj.label != target) continue;
    auto pgns = box_to_pgns(obj.box, grid, MappingMode::intersection());
    cells.insert(cells.end(), pgns.begin(), pgns.end());
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

void GeneratorConfig::validate() const {
  if (selection_rows < 1 || selection_cols < 1 || click_size < 1) throw ConfigError("grid sizes must be positive");
  if (!(image_px > 0)) throw ConfigError("image size must be positive");
  auto check_dist = [](const std::map<int, double>& d, const char* what) {
    double total = 0;
    for (auto [n, p] : d) {
      if (n < 1 || !(p >= 0.0)) throw ConfigError(std::string(what) + " has a bad entry");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError(std::string(what) + " must sum to 1");
  };
  check_dist(pgn_count_distribution, "pgn count distribution");
  check_dist(click_initial_targets, "click initial target distribution");
  click_categories.validate();
  if (max_target_objects < 1 || max_distractors < 0) throw ConfigError("object counts out of range");
  if (!(edge_margin_px >= 0) || !(min_object_px > 0)) throw ConfigError("object geometry out of range");
  double min_side = std::min(image_px / std::max(selection_rows, selection_cols), image_px / click_size);
  if (2 * edge_margin_px + min_object_px > min_side) throw ConfigError("cells too small for margin + object size");
  if (!(dynamics.p_regen >= 0 && dynamics.p_regen <= 1) || !(dynamics.decay >= 0 && dynamics.decay <= 1) ||
      !(dynamics.p_distractor >= 0 && dynamics.p_distractor <= 1))
    throw ConfigError("click dynamics probabilities must lie in [0, 1]");
  if (!(dynamics.latency_s.lo > 0 && dynamics.latency_s.lo <= dynamics.latency_s.hi))
    throw ConfigError("regeneration latency range must be positive");
  if (!(p_blur >= 0 && p_blur <= 1)) throw ConfigError("p_blur must lie in [0, 1]");
  if (max_attempts < 1) throw ConfigError("max_attempts must be positive");
}

namespace {

std::string make_id(std::uint64_t seed) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(seed));
  return buf;
}

template <typename T>
T sample_discrete(const std::map<T, double>& dist, Rng& rng) {
  double u = rng.uniform(), acc = 0;
  T last{};
  for (const auto& [v, p] : dist) {
    acc += p;
    last = v;
    if (u < acc) return v;
  }
  return last;
}

std::string sample_label(const CategoryDistribution& d, Rng& rng) {
  double u = rng.uniform(), acc = 0;
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    acc += d.weights[i];
    if (u < acc) return d.labels[i];
  }
  return d.labels.back();
}

std::string sample_distractor_label(std::string_view target, Rng& rng) {
  const auto& cats = all_categories();
  for (;;) {
    const Category& c = cats[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cats.size()) - 1))];
    if (c.name != target) return std::string(c.name);
  }
}

// Edge pair [lo, hi] with lo in [a0, a1] and hi in [b0, b1], hi - lo >= min_len.
std::pair<double, double> sample_span(double a0, double a1, double b0, double b1, double min_len, Rng& rng) {
  for (int i = 0; i < 64; ++i) {
    double lo = rng.uniform(a0, a1), hi = rng.uniform(b0, b1);
    if (hi - lo >= min_len) return {lo, hi};
  }
  return {a0, b1};
}

struct CellBlock {
  int r0, c0, h, w;
};

BoundingBox box_spanning(const CellBlock& b, const GridSpec& g, const GeneratorConfig& cfg, Rng& rng) {
  const double m = cfg.edge_margin_px;
  auto [x0, x1] = sample_span(g.col_edge(b.c0) + m, g.col_edge(b.c0 + 1) - m - (b.w == 1 ? cfg.min_object_px : 0),
                              g.col_edge(b.c0 + b.w - 1) + m + (b.w == 1 ? cfg.min_object_px : 0),
                              g.col_edge(b.c0 + b.w) - m, cfg.min_object_px, rng);
  auto [y0, y1] = sample_span(g.row_edge(b.r0) + m, g.row_edge(b.r0 + 1) - m - (b.h == 1 ? cfg.min_object_px : 0),
                              g.row_edge(b.r0 + b.h - 1) + m + (b.h == 1 ? cfg.min_object_px : 0),
                              g.row_edge(b.r0 + b.h) - m, cfg.min_object_px, rng);
  return BoundingBox(x0, y0, x1, y1);
}

std::vector<int> block_cells(const CellBlock& b, const GridSpec& g) {
  std::vector<int> cells;
  for (int r = b.r0; r < b.r0 + b.h; ++r)
    for (int c = b.c0; c < b.c0 + b.w; ++c) cells.push_back(r * g.cols() + c + 1);
  return cells;
}

// Up to max_blocks axis-aligned cell blocks whose union covers exactly n cells.
std::optional<std::vector<CellBlock>> find_blocks(const GridSpec& g, int n, int max_blocks, Rng& rng,
                                                  int attempts) {
  std::vector<CellBlock> all;
  for (int h = 1; h <= g.rows(); ++h)
    for (int w = 1; w <= g.cols(); ++w)
      for (int r0 = 0; r0 + h <= g.rows(); ++r0)
        for (int c0 = 0; c0 + w <= g.cols(); ++c0) all.push_back({r0, c0, h, w});

  for (int attempt = 0; attempt < attempts; ++attempt) {
    const int k = rng.uniform_int(1, std::min(max_blocks, n));
    std::vector<CellBlock> chosen;
    std::set<int> covered;
    bool ok = true;
    for (int j = 0; j < k && ok; ++j) {
      const bool last = j == k - 1;
      std::vector<const CellBlock*> candidates;
      for (const CellBlock& b : all) {
        std::set<int> u = covered;
        for (int cell : block_cells(b, g)) u.insert(cell);
        int size = static_cast<int>(u.size());
        if (size == static_cast<int>(covered.size())) continue;  // adds nothing
        if (last ? size == n : size < n) candidates.push_back(&b);
      }
      if (candidates.empty()) {
        ok = false;
        break;
      }
      const CellBlock& pick =
          *candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(candidates.size()) - 1))];
      chosen.push_back(pick);
      for (int cell : block_cells(pick, g)) covered.insert(cell);
    }
    if (ok && static_cast<int>(covered.size()) == n) return chosen;
  }
  return std::nullopt;
}

BoundingBox box_inside_cell(int cell, const GridSpec& g, const GeneratorConfig& cfg, Rng& rng) {
  int r = (cell - 1) / g.cols(), c = (cell - 1) % g.cols();
  return box_spanning(CellBlock{r, c, 1, 1}, g, cfg, rng);
}

// Returns the cells the layout is meant to cover.
std::set<int> layout_selection(Challenge& ch, const CategoryDistribution& cats, const GeneratorConfig& cfg,
                               Rng& rng) {
  ch.grid = GridSpec(cfg.selection_rows, cfg.selection_cols, cfg.image_px, cfg.image_px);
  ch.target_label = sample_label(cats, rng);

  std::map<int, double> counts;
  for (auto [n, p] : cfg.pgn_count_distribution)
    if (n <= ch.grid.cell_count()) counts[n] = p;
  double mass = 0;
  for (auto& kv : counts) mass += kv.second;
  if (counts.empty() || mass <= 0) throw GenerationError("no ground-truth size fits the grid");
  for (auto& kv : counts) kv.second /= mass;
  const int n = sample_discrete(counts, rng);

  auto blocks = find_blocks(ch.grid, n, cfg.max_target_objects, rng, cfg.max_attempts);
  if (!blocks) throw GenerationError("could not lay out " + std::to_string(n) + " target cells");

  ch.scene = Scene{static_cast<int>(cfg.image_px), static_cast<int>(cfg.image_px), {}};
  const int distractors = rng.uniform_int(0, cfg.max_distractors);
  for (int i = 0; i < distractors; ++i) {
    std::string label = sample_distractor_label(ch.target_label, rng);
    double w = rng.uniform(cfg.min_object_px, 0.4 * cfg.image_px), h = rng.uniform(cfg.min_object_px, 0.4 * cfg.image_px);
    double x = rng.uniform(0, cfg.image_px - w), y = rng.uniform(0, cfg.image_px - h);
    ch.scene.objects.push_back(make_object(label, BoundingBox(x, y, x + w, y + h)));
  }
  std::set<int> intended;
  for (const CellBlock& b : *blocks) {
    ch.scene.objects.push_back(make_object(ch.target_label, box_spanning(b, ch.grid, cfg, rng)));
    for (int cell : block_cells(b, ch.grid)) intended.insert(cell);
  }
  return intended;
}

SceneObject tile_object(std::string_view label, int cell, const GridSpec& g, const GeneratorConfig& cfg, Rng& rng) {
  return make_object(label, box_inside_cell(cell, g, cfg, rng), cell);
}

std::set<int> layout_click(Challenge& ch, const GeneratorConfig& cfg, Rng& rng) {
  ch.grid = GridSpec(cfg.click_size, cfg.click_size, cfg.image_px, cfg.image_px);
  ch.target_label = sample_label(cfg.click_categories, rng);
  ch.dynamics = cfg.dynamics;
  const int cells = ch.grid.cell_count();
  const int n0 = std::min(sample_discrete(cfg.click_initial_targets, rng), cells);

  std::vector<int> order(static_cast<std::size_t>(cells));
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::set<int> targets(order.begin(), order.begin() + n0);

  ch.scene = Scene{static_cast<int>(cfg.image_px), static_cast<int>(cfg.image_px), {}};
  for (int cell = 1; cell <= cells; ++cell) {
    if (targets.count(cell)) {
      ch.scene.objects.push_back(tile_object(ch.target_label, cell, ch.grid, cfg, rng));
    } else if (rng.bernoulli(cfg.dynamics.p_distractor)) {
      ch.scene.objects.push_back(tile_object(sample_distractor_label(ch.target_label, rng), cell, ch.grid, cfg, rng));
    }
  }
  ch.regen_counts.assign(static_cast<std::size_t>(cells), 0);
  return targets;
}

}  // namespace

Challenge generate_challenge(const DifficultyProfile& difficulty, const CategoryDistribution& categories,
                             std::uint64_t seed, const GeneratorConfig& config,
                             std::optional<ChallengeKind> force_kind) {
  difficulty.validate();
  categories.validate();
  config.validate();

  Rng rng(derive_seed(seed, "layout"));
  Challenge ch;
  ch.seed = seed;
  ch.id = make_id(seed);
  const bool click_draw = rng.bernoulli(difficulty.p_click);
  ch.kind = force_kind ? *force_kind : (click_draw ? ChallengeKind::click : ChallengeKind::selection);

  const std::set<int> intended = ch.kind == ChallengeKind::selection ? layout_selection(ch, categories, config, rng)
                                                                     : layout_click(ch, config, rng);

  PerturbationConfig pc;
  pc.p_noise = difficulty.noise_sigma_range.hi > 0.0 ? 1.0 : 0.0;
  pc.noise_sigma = difficulty.noise_sigma_range;
  pc.noise_lo_exclusive = false;
  pc.p_blur = config.p_blur;
  ch.perturbation = sample_perturbation(pc, derive_seed(seed, "perturbation"));

  ch.ground_truth_pgns = ground_truth_for(ch.scene, ch.grid, ch.target_label);
  if (ch.ground_truth_pgns.empty()) throw GenerationError("generated challenge has no target cells");
  if (!std::equal(intended.begin(), intended.end(), ch.ground_truth_pgns.begin(), ch.ground_truth_pgns.end()))
    throw GenerationError("target boxes do not map onto the intended cells");
  return ch;
}

Challenge regenerate_cell(Challenge ch, int cell, Rng& rng) {
  if (ch.kind != ChallengeKind::click) throw StateError("only click challenges regenerate tiles");
  if (cell < 1 || cell > ch.grid.cell_count()) throw ArgumentError("cell index out of range");

  int& count = ch.regen_counts[static_cast<std::size_t>(cell - 1)];
  const double p = ch.dynamics.p_regen * std::pow(ch.dynamics.decay, count);
  ++count;

  // Fixed draw order: target gate, distractor gate, latency, then placement.
  const bool has_target = rng.bernoulli(p);
  const bool has_distractor = rng.bernoulli(ch.dynamics.p_distractor);
  const double latency = rng.uniform(ch.dynamics.latency_s.lo, ch.dynamics.latency_s.hi);

  auto& objs = ch.scene.objects;
  objs.erase(std::remove_if(objs.begin(), objs.end(), [cell](const SceneObject& o) { return o.tile == cell; }),
             objs.end());
  GeneratorConfig geom;  // only margins and minimum size are used
  const double side = std::min(ch.grid.cell_width(), ch.grid.cell_height());
  geom.edge_margin_px = std::min(geom.edge_margin_px, side / 8);
  geom.min_object_px = std::min(geom.min_object_px, side / 4);
  if (has_target) {
    objs.push_back(tile_object(ch.target_label, cell, ch.grid, geom, rng));
  } else if (has_distractor) {
    objs.push_back(tile_object(sample_distractor_label(ch.target_label, rng), cell, ch.grid, geom, rng));
  }
  ch.ground_truth_pgns = ground_truth_for(ch.scene, ch.grid, ch.target_label);
  ch.regen_log.push_back({cell, has_target, latency});
  return ch;
}

bool click_cell(Challenge& ch, int cell, Rng& rng) {
  if (ch.kind != ChallengeKind::click) throw StateError("click_cell on a selection challenge");
  if (cell < 1 || cell > ch.grid.cell_count()) throw ArgumentError("cell index out of range");
  const bool correct = std::binary_search(ch.ground_truth_pgns.begin(), ch.ground_truth_pgns.end(), cell);
  if (correct)
    ++ch.correct_clicks;
  else
    ++ch.wrong_clicks;
  ch = regenerate_cell(std::move(ch), cell, rng);
  return correct;
}

VerifyOutcome verify_selection(const Challenge& ch, const std::set<int>& selected, const FlexibilityPolicy& policy,
                               Rng& rng) {
  for (int s : selected)
    if (s < 1 || s > ch.grid.cell_count()) throw ArgumentError("selected cell out of range");
  const double u = rng.uniform();
  VerifyOutcome out;
  for (int g : ch.ground_truth_pgns)
    if (!selected.count(g)) ++out.missed;
  for (int s : selected)
    if (!std::binary_search(ch.ground_truth_pgns.begin(), ch.ground_truth_pgns.end(), s)) ++out.wrong;
  out.passed = u < policy.selection_accept(out.missed, out.wrong);
  return out;
}

VerifyOutcome verify_click(const Challenge& ch, const FlexibilityPolicy& policy, Rng& rng) {
  if (ch.kind != ChallengeKind::click) throw StateError("verify_click on a selection challenge");
  const double u = rng.uniform();
  VerifyOutcome out;
  out.missed = static_cast<int>(ch.ground_truth_pgns.size());
  out.wrong = ch.wrong_clicks;
  out.passed = u < policy.click_accept(out.missed, out.wrong);
  return out;
}

Session open_session(std::string id, const ClientSignals& client, const DifficultyProfile& difficulty, int rounds) {
  if (rounds < 1 || rounds > kMaxRounds) throw ArgumentError("round count must lie in [1, 5]");
  return Session{std::move(id), client, difficulty, rounds, rounds, SessionState::active, {}};
}

int sample_rounds(const DifficultyProfile& difficulty, Rng& rng) {
  double u = rng.uniform(), acc = 0;
  for (int i = 0; i < kMaxRounds; ++i) {
    acc += difficulty.rounds_distribution[static_cast<std::size_t>(i)];
    if (u < acc) return i + 1;
  }
  return kMaxRounds;
}

RoundResult next_round(Session& s, std::string challenge_id, const VerifyOutcome& outcome) {
  if (s.state != SessionState::active) throw StateError("session already finished");
  s.history.push_back({std::move(challenge_id), outcome});
  if (!outcome.passed) {
    s.state = SessionState::failed;
    return RoundResult::failed;
  }
  --s.rounds_remaining;
  if (s.rounds_remaining == 0) {
    s.state = SessionState::passed;
    return RoundResult::passed;
  }
  return RoundResult::continue_session;
}

}  // namespace cgl
