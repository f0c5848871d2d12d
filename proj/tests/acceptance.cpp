// Acceptance suite. Each criterion prints exactly one PASS/FAIL line; the
// exit status is non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "cgl/detector.hpp"
#include "cgl/eval.hpp"
#include "cgl/geometry.hpp"
#include "cgl/imaging.hpp"
#include "cgl/json_io.hpp"
#include "cgl/mapping_oracle.hpp"
#include "cgl/rate_limit.hpp"
#include "cgl/solver.hpp"
#include "test_support.hpp"

using namespace cgl;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(const char* name, const std::function<Result()>& f) {
  auto t0 = std::chrono::steady_clock::now();
  Result r;
  try {
    r = f();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s  %-28s %s  [%.2f s]\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str(), s);
  std::fflush(stdout);
  if (!r.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Exact (Clopper-Pearson) two-sided 95% interval for k successes in n trials.
std::pair<double, double> clopper_pearson(int k, int n) {
  const double a = 0.05;
  double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1, a / 2);
  double hi = k == n ? 1.0 : boost::math::ibeta_inv(k + 1, n - k, 1 - a / 2);
  return {lo, hi};
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (w <= 0 || h <= 0) return 0.0;
  double inter = w * h;
  return inter / (a.area() + b.area() - inter);
}

const DifficultyProfile kLowRisk = difficulty_from_risk(risk_score(ClientSignals::low_risk()), SecurityPref::medium);

Result mapping_oracle_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(7);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    GridSpec g = testing::random_grid(gen);
    BoundingBox b = testing::random_clear_box(gen, g);
    if (testing::to_set(box_to_pgns(b, g, MappingMode::intersection())) != mapping_oracle(b, g, 1.0)) ++mismatches;
  }
  double s = seconds_since(t0);
  return {mismatches == 0 && s < 10.0, fmt("10000 pairs, %d mismatches, %.2f s (limit 10 s)", mismatches, s)};
}

Result corner_containment() {
  std::mt19937_64 gen(8);
  int violations = 0, strict = 0;
  for (int i = 0; i < 10000; ++i) {
    GridSpec g = testing::random_grid(gen);
    BoundingBox b = testing::random_clear_box(gen, g);
    auto corner = testing::to_set(box_to_pgns(b, g, MappingMode::corner()));
    auto inter = testing::to_set(box_to_pgns(b, g, MappingMode::intersection()));
    if (!std::includes(inter.begin(), inter.end(), corner.begin(), corner.end())) ++violations;
    if (corner.size() < inter.size()) ++strict;
  }
  GridSpec g4(4, 4, 400, 400);
  BoundingBox wide(10, 10, 390, 40);
  auto c = box_to_pgns(wide, g4, MappingMode::corner());
  auto x = box_to_pgns(wide, g4, MappingMode::intersection());
  bool example = c == std::vector<int>{1, 4} && x == std::vector<int>{1, 2, 3, 4};
  return {violations == 0 && example,
          fmt("%d violations in 10000, %d strict; (10,10)-(390,40): corner {1,4} vs intersection {1,2,3,4} %s",
              violations, strict, example ? "ok" : "WRONG")};
}

Result perfect_detector_end_to_end() {
  auto t0 = std::chrono::steady_clock::now();
  OracleDetector perfect(detector_preset("perfect"));
  auto policy = strict_policy();
  int passed = 0, challenges = 0;
  const int sessions = 1000;
  for (int i = 0; i < sessions; ++i) {
    auto seed = derive_seed(2024, "session", static_cast<std::uint64_t>(i));
    Rng gen(derive_seed(seed, "generation"));
    int rounds = sample_rounds(kLowRisk, gen);
    Session session = open_session(std::to_string(i), ClientSignals::low_risk(), kLowRisk, rounds);
    SolveStreams streams{derive_seed(seed, "detector"), Rng(derive_seed(seed, "server")),
                         Rng(derive_seed(seed, "verification"))};
    for (int r = 0; session.state == SessionState::active; ++r) {
      auto ch = generate_challenge(kLowRisk, CategoryDistribution::selection_default(),
                                   derive_seed(seed, "challenge", static_cast<std::uint64_t>(r)), {},
                                   ChallengeKind::selection);
      auto tr = solve_selection(ch, perfect, policy, streams);
      ++challenges;
      next_round(session, tr.challenge_id, tr.outcome);
    }
    passed += session.state == SessionState::passed;
  }
  double s = seconds_since(t0);
  return {passed == sessions && s < 30.0,
          fmt("%d/%d sessions passed (%d challenges), %.2f s (limit 30 s)", passed, sessions, challenges, s)};
}

Result table5_reproduction() {
  const int trials = 500;
  std::string detail;
  bool ok = true;
  for (const auto& row : click_flexibility_rows()) {
    GeneratorConfig cfg;
    cfg.click_initial_targets = {{row.correct + row.missed, 1.0}};
    cfg.dynamics.p_regen = 0.0;  // a clicked target tile never brings the target back
    auto policy = builtin_policy("table5:" + row.name);
    int k = 0;
    for (int t = 0; t < trials; ++t) {
      auto seed = derive_seed(5, row.name, static_cast<std::uint64_t>(t));
      auto ch = generate_challenge(kLowRisk, CategoryDistribution::click_default(), seed, cfg, ChallengeKind::click);
      Rng server(derive_seed(seed, "server")), verify(derive_seed(seed, "verification"));
      auto targets = ch.ground_truth_pgns;
      std::vector<int> others;
      for (int c = 1; c <= ch.grid.cell_count(); ++c)
        if (!std::binary_search(targets.begin(), targets.end(), c)) others.push_back(c);
      for (int i = 0; i < row.correct; ++i) click_cell(ch, targets[static_cast<std::size_t>(i)], server);
      for (int i = 0; i < row.wrong; ++i) click_cell(ch, others[static_cast<std::size_t>(i)], server);
      auto out = verify_click(ch, policy, verify);
      if (out.missed != row.missed || out.wrong != row.wrong)
        return {false, fmt("%s: scripted pattern gave missed=%d wrong=%d", row.name.c_str(), out.missed, out.wrong)};
      k += out.passed;
    }
    auto [lo, hi] = clopper_pearson(k, trials);
    bool in = row.rate >= lo && row.rate <= hi;
    ok = ok && in;
    detail += fmt("%s%s %d/500 [%.3f,%.3f]%s", detail.empty() ? "" : "; ", row.name.c_str(), k, lo, hi,
                  in ? "" : " MISS");
  }
  return {ok, detail};
}

Result rounds_distribution() {
  EvalConfig c = eval_preset("default");
  c.sessions = 10000;
  c.seed = 3;
  auto r = run_eval(c);
  int challenged = r.sessions - r.no_challenge;
  double p1 = static_cast<double>(r.rounds_histogram[1]) / challenged;
  double p2 = static_cast<double>(r.rounds_histogram[2]) / challenged;
  bool ok = std::abs(p1 - 0.8081) <= 0.02 && std::abs(p2 - 0.1684) <= 0.02;
  return {ok, fmt("10000 low-risk sessions (%d challenged): P(1)=%.4f (0.8081+-0.02), P(2)=%.4f (0.1684+-0.02)",
                  challenged, p1, p2)};
}

Result pgn_count_distribution() {
  std::map<std::size_t, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    ++counts[generate_challenge(kLowRisk, CategoryDistribution::selection_default(),
                                derive_seed(4, "pgn", static_cast<std::uint64_t>(i)), {}, ChallengeKind::selection)
                 .ground_truth_pgns.size()];
  double f2 = counts[2] / double(n), f3 = counts[3] / double(n), f4 = counts[4] / double(n);
  bool ok = std::abs(f2 - 0.0572) <= 0.02 && std::abs(f3 - 0.4259) <= 0.02 && std::abs(f4 - 0.3215) <= 0.02;
  return {ok, fmt("10000 challenges: 2 cells %.4f (0.0572), 3 cells %.4f (0.4259), 4 cells %.4f (0.3215), tol 0.02",
                  f2, f3, f4)};
}

Result noise_estimator() {
  auto t0 = std::chrono::steady_clock::now();
  Image flat(400, 400, Rgb{128, 128, 128});
  std::vector<double> means;
  bool ok = true;
  std::string detail;
  for (double sigma : {5.0, 10.0, 20.0}) {
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 64; ++seed) sum += estimate_noise_sigma(add_gaussian_noise(flat, sigma, seed));
    double mean = sum / 64;
    bool in = std::abs(mean - sigma) <= std::max(1.0, 0.15 * sigma);
    ok = ok && in;
    means.push_back(mean);
    detail += fmt("sigma %.0f -> %.3f%s; ", sigma, mean, in ? "" : " OUT");
  }
  bool monotone = means[0] < means[1] && means[1] < means[2];
  double s = seconds_since(t0);
  return {ok && monotone && s < 20.0, detail + fmt("monotone %s, %.2f s (limit 20 s)", monotone ? "yes" : "NO", s)};
}

// Builds a corpus of exactly 203 scene objects from generated challenges and
// counts how many the preset detects (same label, IoU >= 0.5) at sigma 12.
int detected_in_corpus(const DetectorConfig& det, std::uint64_t corpus_seed) {
  int objects = 0, detected = 0;
  PerturbationRecord noisy;
  noisy.total_sigma = 12.0;
  for (std::uint64_t i = 0; objects < 203; ++i) {
    auto ch = generate_challenge(kLowRisk, CategoryDistribution::selection_default(), derive_seed(corpus_seed, "c", i),
                                 {}, ChallengeKind::selection);
    Scene scene = ch.scene;
    if (objects + static_cast<int>(scene.objects.size()) > 203)
      scene.objects.resize(static_cast<std::size_t>(203 - objects));
    objects += static_cast<int>(scene.objects.size());
    auto dets = oracle_detect(scene, noisy, det, derive_seed(corpus_seed, "d", i));
    std::vector<bool> used(dets.size(), false);
    for (const auto& obj : scene.objects)
      for (std::size_t j = 0; j < dets.size(); ++j)
        if (!used[j] && dets[j].label == obj.label && iou(dets[j].box, obj.box) >= 0.5) {
          used[j] = true;
          ++detected;
          break;
        }
  }
  return detected;
}

Result detector_presets() {
  const std::vector<std::pair<std::string, int>> presets = {{"base", 114}, {"augmented", 149}, {"adv", 167}};
  const int corpora = 200;
  bool ok = true;
  std::string detail;
  for (const auto& [name, target] : presets) {
    auto cfg = detector_preset(name);
    double sum = 0;
    int first = 0;
    for (int c = 0; c < corpora; ++c) {
      int d = detected_in_corpus(cfg, derive_seed(6, "corpus", static_cast<std::uint64_t>(c)));
      if (c == 0) first = d;
      sum += d;
    }
    double mean = sum / corpora;
    bool in = std::abs(mean - target) <= 8.0;
    ok = ok && in;
    detail += fmt("%s%s mean %.1f of 203 (target %d+-8, first corpus %d)", detail.empty() ? "" : "; ", name.c_str(),
                  mean, target, first);
  }
  return {ok, detail};
}

Result rate_limiter() {
  RateLimitConfig cfg;
  IpState st{"198.51.100.7", IpClass::regular};
  Rng rng(9);
  std::array<int, 3> refused{};
  int blocks = 0, bad_durations = 0;
  for (int day = 0; day < 3; ++day)
    for (int i = 0; i < 1000; ++i) {
      double now = day * kSecondsPerDay + i * (kSecondsPerDay / 1000.0);
      auto d = rate_limit_check(st, now, cfg, rng);
      if (!d.allowed) ++refused[static_cast<std::size_t>(day)];
      if (d.new_block) {
        ++blocks;
        double minutes = (*d.until - now) / 60.0;
        if (minutes < 36.0 || minutes > 95.0) ++bad_durations;
      }
    }
  bool days_ok = std::all_of(refused.begin(), refused.end(), [](int r) { return r >= 180; });

  IpState tor{"203.0.113.9", IpClass::tor};
  const int n = 3000;
  int tor_blocked = 0;
  for (int i = 0; i < n; ++i) tor_blocked += !rate_limit_check(tor, i * (3 * kSecondsPerDay / n), cfg, rng).allowed;
  auto [lo, hi] = clopper_pearson(tor_blocked, n);
  bool tor_ok = lo <= 0.30 && 0.30 <= hi;
  return {days_ok && bad_durations == 0 && blocks > 0 && tor_ok,
          fmt("refused per day %d/%d/%d (>=180), %d blocks, %d outside [36,95] min; tor %.4f blocked, CI [%.4f,%.4f] "
              "vs 0.30",
              refused[0], refused[1], refused[2], blocks, bad_durations, tor_blocked / double(n), lo, hi)};
}

Result timing_model() {
  OracleDetector perfect(detector_preset("perfect"));
  TimingConfig timing;
  auto solve_many = [&](ChallengeKind kind) {
    std::vector<double> t;
    for (int i = 0; i < 10000; ++i) {
      auto seed = derive_seed(10, std::string(to_string(kind)), static_cast<std::uint64_t>(i));
      auto ch = generate_challenge(kLowRisk, CategoryDistribution::selection_default(), derive_seed(seed, "challenge"),
                                   {}, kind);
      SolveStreams s{derive_seed(seed, "detector"), Rng(derive_seed(seed, "server")),
                     Rng(derive_seed(seed, "verification"))};
      auto tr = solve(ch, perfect, kLowRisk.flexibility, s);
      t.push_back(simulate_timing(tr, timing, derive_seed(seed, "timing")));
    }
    return timing_stats(t);
  };
  auto sel = solve_many(ChallengeKind::selection);
  auto clk = solve_many(ChallengeKind::click);
  const auto& p = sel.percentiles;  // 1, 5, 50, 95, 99
  bool monotone = p[0].second < p[1].second && p[1].second < p[3].second && p[3].second < p[4].second;
  bool sel_ok = sel.mean >= 16.0 && sel.mean <= 22.0;
  bool clk_ok = clk.mean >= 38.0 && clk.mean <= 50.0;
  return {sel_ok && clk_ok && monotone,
          fmt("selection mean %.2f s in [16,22]; percentiles 1/5/95/99 = %.2f/%.2f/%.2f/%.2f %s; click mean %.2f s in "
              "[38,50]",
              sel.mean, p[0].second, p[1].second, p[3].second, p[4].second, monotone ? "monotone" : "NOT monotone",
              clk.mean)};
}

Result determinism() {
  auto base = std::filesystem::temp_directory_path() / ("cgl_accept_" + std::to_string(::getpid()));
  std::filesystem::remove_all(base);
  EvalConfig c = eval_preset("paper-analog");
  c.sessions = 1000;
  c.seed = 77;
  c.jobs = 2;
  c.out = (base / "a").string();
  run_eval(c);
  c.out = (base / "b").string();
  run_eval(c);
  auto a = read_text_file(base / "a" / "report.json");
  auto b = read_text_file(base / "b" / "report.json");
  std::filesystem::remove_all(base);
  return {a == b && !a.empty(), fmt("two runs, seed 77: report.json %zu bytes, %s", a.size(),
                                    a == b ? "byte-identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  run("mapping-oracle-equivalence", mapping_oracle_equivalence);
  run("corner-mode-containment", corner_containment);
  run("perfect-detector-end-to-end", perfect_detector_end_to_end);
  run("click-flexibility-table", table5_reproduction);
  run("rounds-distribution", rounds_distribution);
  run("pgn-count-distribution", pgn_count_distribution);
  run("noise-estimator", noise_estimator);
  run("detector-presets", detector_presets);
  run("rate-limiter", rate_limiter);
  run("timing-model", timing_model);
  run("determinism", determinism);
  std::printf("%s: %d failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
