#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgl/detector.hpp"
#include "cgl/risk.hpp"
#include "cgl/solver.hpp"

namespace cgl {

struct EvalConfig {
  std::string preset;  // name of the preset this config started from, if any
  int sessions = 1000;
  std::uint64_t seed = 1;

  std::string client = "low_risk";  // low_risk | webdriver | tor | custom
  ClientSignals signals = ClientSignals::low_risk();
  SecurityPref security_pref = SecurityPref::medium;

  // Preset name, detector JSON file, or "plugin:<command line>".
  std::string detector = "perfect";
  std::optional<double> r0;         // oracle detectors only
  std::optional<double> sigma_loc;  // oracle detectors only
  std::optional<double> threshold;

  // "auto" takes the flexibility of the risk-derived difficulty profile.
  std::string policy = "auto";

  int rows = 4;
  int cols = 4;
  int click_size = 4;
  TimingConfig timing;
  SolverOptions solver;

  std::string out;  // empty: no files
  int jobs = 1;
  bool traces = false;

  // Band the success rate is expected to land in, reported alongside it.
  std::optional<std::array<double, 2>> target_band;

  void validate() const;  // throws ConfigError
};

// "default", "perfect", "paper-analog". Throws ConfigError otherwise.
EvalConfig eval_preset(std::string_view name);
std::vector<std::string> eval_preset_names();

// One key of the flat config format. Keys match the long CLI flags
// ("sessions", "detector", "per-click-s", ...). Throws ConfigError.
void set_eval_option(EvalConfig& config, std::string_view key, std::string_view value);
std::vector<std::string> eval_option_keys();

using ConfigPairs = std::vector<std::pair<std::string, std::string>>;

// "key = value" lines, '#' comments, blank lines ignored. Throws ConfigError.
ConfigPairs read_config_pairs(std::string_view text);
// Applies the last "preset" first, then every other key in order.
EvalConfig apply_eval_options(const ConfigPairs& pairs, EvalConfig base = {});
EvalConfig parse_eval_config(std::string_view text, EvalConfig base = {});

std::string eval_config_to_json(const EvalConfig& config);

struct KindStats {
  int challenges = 0;
  int passed = 0;
  double mean_duration_s = 0;
};

struct CategoryStats {
  std::string label;
  int frequency = 0;
  int passed = 0;
  double success_rate() const { return frequency ? static_cast<double>(passed) / frequency : 0.0; }
};

struct TimingStats {
  int samples = 0;
  double mean = 0, median = 0, min = 0, max = 0;
  std::vector<std::pair<int, double>> percentiles;  // (1, 5, 50, 95, 99)
};

struct EvalReport {
  std::string config_json;  // resolved config, as eval_config_to_json

  int sessions = 0;
  int passed = 0;
  int failed = 0;
  int no_challenge = 0;
  double success_rate = 0;  // passed / (passed + failed)

  int challenges = 0;  // rounds played, reloads not counted
  int challenges_passed = 0;
  int detector_errors = 0;
  std::map<std::string, KindStats> per_kind;
  std::vector<CategoryStats> per_category;  // most frequent first

  // index = rounds the server asked for, 0 = passed without a challenge
  std::array<int, kMaxRounds + 1> rounds_histogram{};
  std::map<int, int> pgns_histogram;  // ground-truth size of each selection round

  TimingStats timing;  // per challenged session: sum of its solve durations

  std::optional<std::array<double, 2>> target_band;
  bool in_band() const {
    return target_band && success_rate >= (*target_band)[0] && success_rate <= (*target_band)[1];
  }
};

// Linear interpolation between closest ranks. Empty input gives zeros.
TimingStats timing_stats(std::vector<double> seconds);

using DetectorFactory = std::function<std::unique_ptr<Detector>()>;

// Resolves the detector reference of `config`. Plugins are spawned once here
// so a broken command fails before any session runs.
DetectorFactory make_detector_factory(const EvalConfig& config);

// Runs every session and aggregates. Deterministic per config.seed for any
// number of jobs. Writes report files and traces when config.out is set.
EvalReport run_eval(const EvalConfig& config);
EvalReport run_eval(const EvalConfig& config, const DetectorFactory& factory);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);  // throws ParseError
std::string summary_csv(const EvalReport& report);
std::string timing_csv(const EvalReport& report);

// report.json, summary.csv and timing.csv under `dir`, each written to a
// temporary file and renamed. Throws IoError.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace cgl
