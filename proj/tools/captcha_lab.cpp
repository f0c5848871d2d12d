#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cgl/error.hpp"
#include "cgl/eval.hpp"
#include "cgl/instruction.hpp"
#include "cgl/json_io.hpp"
#include "cgl/plugin_host.hpp"

using namespace cgl;
namespace fs = std::filesystem;

namespace {

// Flags shared by gen, solve and eval map one to one onto config keys.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;  // key -> raw flag text
  std::vector<std::string> order;

  void add(CLI::App& app, const std::vector<std::string>& keys) {
    app.add_option("--config", config_file, "flat key = value config file")->check(CLI::ExistingFile);
    for (const auto& k : keys) {
      auto* opt = app.add_option("--" + k, values[k]);
      opt->each([this, k](const std::string&) { order.push_back(k); });
    }
  }

  EvalConfig resolve(EvalConfig base = {}) const {
    ConfigPairs pairs;
    if (!config_file.empty()) pairs = read_config_pairs(read_text_file(config_file));
    for (const auto& k : order) pairs.emplace_back(k, values.at(k));
    return apply_eval_options(pairs, std::move(base));
  }
};

FlexibilityPolicy policy_for(const EvalConfig& cfg, const DifficultyProfile& diff) {
  return cfg.policy == "auto" ? diff.flexibility : resolve_policy(cfg.policy);
}

GeneratorConfig generator_for(const EvalConfig& cfg) {
  GeneratorConfig g;
  g.selection_rows = cfg.rows;
  g.selection_cols = cfg.cols;
  g.click_size = cfg.click_size;
  g.validate();
  return g;
}

std::optional<ChallengeKind> kind_flag(const std::string& kind) {
  if (kind == "auto") return std::nullopt;
  return challenge_kind_from_string(kind);
}

int cmd_gen(const ConfigFlags& flags, int count, const std::string& kind) {
  auto cfg = flags.resolve();
  if (cfg.out.empty()) throw ConfigError("gen needs --out");
  auto diff = difficulty_from_risk(risk_score(cfg.signals), cfg.security_pref);
  auto gen = generator_for(cfg);
  fs::create_directories(cfg.out);
  for (int i = 0; i < count; ++i) {
    auto ch = generate_challenge(diff, CategoryDistribution::selection_default(),
                                 derive_seed(cfg.seed, "corpus", static_cast<std::uint64_t>(i)), gen, kind_flag(kind));
    char stem[32];
    std::snprintf(stem, sizeof stem, "challenge-%04d", i);
    write_text_file_atomic(fs::path(cfg.out) / (std::string(stem) + ".json"), challenge_to_json(ch));
    write_png(fs::path(cfg.out) / (std::string(stem) + ".png"), ch.render());
    std::printf("%s\t%s\t%s\t%zu\n", stem, std::string(to_string(ch.kind)).c_str(), ch.target_label.c_str(),
                ch.ground_truth_pgns.size());
  }
  return 0;
}

int cmd_solve(const ConfigFlags& flags, const std::string& challenge_file, const std::string& kind) {
  auto cfg = flags.resolve();
  auto diff = difficulty_from_risk(risk_score(cfg.signals), cfg.security_pref);
  auto gen = generator_for(cfg);
  Challenge ch = challenge_file.empty()
                     ? generate_challenge(diff, CategoryDistribution::selection_default(), cfg.seed, gen, kind_flag(kind))
                     : challenge_from_json(read_text_file(challenge_file));
  auto detector = make_detector_factory(cfg)();
  SolveStreams streams{derive_seed(cfg.seed, "detector"), Rng(derive_seed(cfg.seed, "server")),
                       Rng(derive_seed(cfg.seed, "verification"))};
  ReloadFn reload = [&](int k) {
    return generate_challenge(diff, CategoryDistribution::selection_default(),
                              derive_seed(ch.seed, "reload", static_cast<std::uint64_t>(k)), gen,
                              ChallengeKind::selection);
  };
  std::fprintf(stderr, "%s\n", instruction_text(ch).c_str());
  auto trace = solve(ch, *detector, policy_for(cfg, diff), streams, cfg.solver, reload);
  simulate_timing(trace, cfg.timing, derive_seed(cfg.seed, "timing"));
  std::cout << trace_to_jsonl(trace);
  return 0;
}

int cmd_eval(const ConfigFlags& flags) {
  auto cfg = flags.resolve();
  auto report = run_eval(cfg);
  std::printf("sessions %d  passed %d  failed %d  no_challenge %d  success_rate %.4f\n", report.sessions,
              report.passed, report.failed, report.no_challenge, report.success_rate);
  std::printf("timing mean %.2f s  median %.2f s\n", report.timing.mean, report.timing.median);
  if (report.target_band)
    std::printf("target band [%.2f, %.2f]: %s (model fit, not a reproduction)\n", (*report.target_band)[0],
                (*report.target_band)[1], report.in_band() ? "inside" : "outside");
  if (!cfg.out.empty()) std::printf("wrote %s\n", cfg.out.c_str());
  return 0;
}

struct PerturbFlags {
  std::vector<std::string> images;
  std::string out;
  std::uint64_t seed = 1;
  double p_noise = 1.0;
  double noise_lo = 0.0;
  double noise_hi = 51.0;
  double p_blur = 0.0;
  double p_brightness_contrast = 0.0;
  bool all_ops = false;
};

int cmd_perturb(const PerturbFlags& f) {
  PerturbationConfig pc = f.all_ops ? PerturbationConfig::all_ops() : PerturbationConfig{};
  if (!f.all_ops) {
    pc.p_noise = f.p_noise;
    pc.noise_sigma = {f.noise_lo, f.noise_hi};
    pc.noise_lo_exclusive = f.noise_lo < f.noise_hi;  // a fixed sigma needs the closed range
    pc.p_blur = f.p_blur;
    pc.p_brightness_contrast = f.p_brightness_contrast;
  }
  pc.validate();
  if (!f.out.empty()) fs::create_directories(f.out);
  for (std::size_t i = 0; i < f.images.size(); ++i) {
    fs::path in = f.images[i];
    fs::path dst = f.out.empty() ? in.parent_path() / (in.stem().string() + ".perturbed.png") : fs::path(f.out) / in.filename();
    auto [img, record] = augment_pipeline(read_png(in), pc, derive_seed(f.seed, "perturb", i));
    write_png(dst, img);
    write_text_file_atomic(dst.string() + ".perturb.json", perturbation_to_json(record));
    std::printf("%s\tsigma=%.3f\t%zu ops\n", dst.string().c_str(), record.total_sigma, record.ops.size());
  }
  return 0;
}

int cmd_estimate_noise(const std::vector<std::string>& files, double threshold) {
  for (const auto& f : files) {
    double s = estimate_noise_sigma(read_png(f));
    std::printf("%s\t%.4f\t%s\n", f.c_str(), s, classify_perturbed(s, threshold) ? "perturbed" : "clean");
  }
  return 0;
}

int cmd_report(const std::string& input, std::string out) {
  fs::path src = input;
  if (fs::is_directory(src)) src /= "report.json";
  auto report = report_from_json(read_text_file(src));
  if (out.empty()) out = src.parent_path().string();
  if (out.empty()) out = ".";
  fs::create_directories(out);
  write_report(report, out);
  std::cout << summary_csv(report) << timing_csv(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid image CAPTCHA laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "captcha-lab 0.1.0");

  const std::vector<std::string> solve_keys = {"preset",  "seed",        "client",     "security-pref", "detector",
                                               "r0",      "sigma-loc",   "threshold",  "policy",        "grid",
                                               "click-size", "mode",     "max-reloads", "max-loops",
                                               "full-image-redetect", "inference-s", "per-click-s", "wait-scale"};

  auto* gen = app.add_subcommand("gen", "emit a challenge corpus (JSON + PNG per challenge)");
  ConfigFlags gen_flags;
  gen_flags.add(*gen, {"seed", "client", "security-pref", "grid", "click-size", "out"});
  int gen_count = 10;
  std::string gen_kind = "auto";
  gen->add_option("--count", gen_count, "number of challenges")->check(CLI::PositiveNumber);
  gen->add_option("--kind", gen_kind, "auto, selection or click")->check(CLI::IsMember({"auto", "selection", "click"}));

  auto* solve = app.add_subcommand("solve", "solve one challenge and print its trace as JSON lines");
  ConfigFlags solve_flags;
  solve_flags.add(*solve, solve_keys);
  std::string solve_file, solve_kind = "auto";
  solve->add_option("--challenge", solve_file, "challenge JSON written by gen")->check(CLI::ExistingFile);
  solve->add_option("--kind", solve_kind, "auto, selection or click")->check(CLI::IsMember({"auto", "selection", "click"}));

  auto* eval = app.add_subcommand("eval", "run an evaluation and write report.json, summary.csv, timing.csv");
  ConfigFlags eval_flags;
  eval_flags.add(*eval, eval_option_keys());

  auto* perturb = app.add_subcommand("perturb", "apply the perturbation pipeline to PNG images");
  PerturbFlags pf;
  perturb->add_option("images", pf.images)->required()->check(CLI::ExistingFile);
  perturb->add_option("--out", pf.out, "output directory (default: <stem>.perturbed.png next to each input)");
  perturb->add_option("--seed", pf.seed);
  perturb->add_option("--p-noise", pf.p_noise);
  perturb->add_option("--noise-min", pf.noise_lo);
  perturb->add_option("--noise-max", pf.noise_hi);
  perturb->add_option("--p-blur", pf.p_blur);
  perturb->add_option("--p-brightness-contrast", pf.p_brightness_contrast);
  perturb->add_flag("--all-ops", pf.all_ops, "every op fires with the default ranges");

  auto* noise = app.add_subcommand("estimate-noise", "print the estimated noise sigma of PNG images");
  std::vector<std::string> noise_files;
  double noise_threshold = 10.0;
  noise->add_option("images", noise_files)->required()->check(CLI::ExistingFile);
  noise->add_option("--threshold", noise_threshold, "sigma above which an image counts as perturbed");

  auto* report = app.add_subcommand("report", "re-render the CSV files of a saved report");
  std::string report_in, report_out;
  report->add_option("report", report_in, "report.json or the directory holding it")->required();
  report->add_option("--out", report_out, "output directory (default: next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen(gen_flags, gen_count, gen_kind);
    if (*solve) return cmd_solve(solve_flags, solve_file, solve_kind);
    if (*eval) return cmd_eval(eval_flags);
    if (*perturb) return cmd_perturb(pf);
    if (*noise) return cmd_estimate_noise(noise_files, noise_threshold);
    if (*report) return cmd_report(report_in, report_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "captcha-lab: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "captcha-lab: %s\n", e.what());
    return 2;
  }
  return 1;
}
