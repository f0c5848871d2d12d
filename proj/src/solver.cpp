#include "cgl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cgl/error.hpp"
#include "cgl/instruction.hpp"

namespace cgl {

using nlohmann::ordered_json;

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::load:
      return "load";
    case ActionKind::detect:
      return "detect";
    case ActionKind::click:
      return "click";
    case ActionKind::wait:
      return "wait";
    case ActionKind::reload:
      return "reload";
    case ActionKind::submit:
      return "submit";
  }
  return "load";
}

ActionKind action_kind_from_string(std::string_view s) {
  for (ActionKind k : {ActionKind::load, ActionKind::detect, ActionKind::click, ActionKind::wait,
                       ActionKind::reload, ActionKind::submit})
    if (to_string(k) == s) return k;
  throw ParseError("unknown trace action: " + std::string(s));
}

namespace {

std::set<int> potential_cells(const std::vector<Detection>& dets, const Challenge& ch, const std::string& target,
                              double threshold, const MappingMode& mode) {
  std::set<int> cells;
  for (const GridMapping& m : map_detections_to_grids(dets, ch.grid, target, threshold, mode))
    cells.insert(m.pgns.begin(), m.pgns.end());
  return cells;
}

// Calls the detector, recording the action and result. Returns nullopt and
// sets trace.error if the detector throws.
std::optional<std::vector<Detection>> run_detector(Detector& det, const Challenge& ch, SolveStreams& streams,
                                                   SolveTrace& trace) {
  trace.actions.push_back({ActionKind::detect});
  const auto call = static_cast<std::uint64_t>(trace.detections.size());
  try {
    auto dets = det.detect(ch, derive_seed(streams.detector_seed, "detect", call));
    trace.detections.push_back(dets);
    return dets;
  } catch (const Error& e) {
    trace.detections.emplace_back();
    trace.error = e.what();
    return std::nullopt;
  }
}

void fail_without_submit(SolveTrace& trace, const Challenge& ch, SolveStreams& streams) {
  streams.verify.uniform();  // keep the acceptance stream aligned with a normal submit
  trace.actions.push_back({ActionKind::submit});
  trace.outcome = VerifyOutcome{false, static_cast<int>(ch.ground_truth_pgns.size()), 0};
}

}  // namespace

SolveTrace solve_selection(const Challenge& first, Detector& detector, const FlexibilityPolicy& policy,
                           SolveStreams& streams, const SolverOptions& options, const ReloadFn& reload) {
  if (first.kind != ChallengeKind::selection) throw StateError("solve_selection on a click challenge");
  if (options.max_reloads < 0) throw ArgumentError("max_reloads must be non-negative");

  SolveTrace trace;
  trace.kind = ChallengeKind::selection;
  trace.actions.push_back({ActionKind::load});

  Challenge current = first;
  std::set<int> selected;
  for (;;) {
    trace.challenge_id = current.id;
    trace.target_label = parse_instruction(instruction_text(current)).target_label;
    auto dets = run_detector(detector, current, streams, trace);
    if (!dets) {
      fail_without_submit(trace, current, streams);
      return trace;
    }
    selected = potential_cells(*dets, current, trace.target_label, detector.threshold(), options.mode);
    if (!selected.empty() || !reload || trace.reloads >= options.max_reloads) break;
    ++trace.reloads;
    trace.actions.push_back({ActionKind::reload});
    current = reload(trace.reloads);
    if (current.kind != ChallengeKind::selection) throw StateError("reload produced a click challenge");
  }

  for (int cell : selected) trace.actions.push_back({ActionKind::click, cell});
  trace.submitted.assign(selected.begin(), selected.end());
  trace.actions.push_back({ActionKind::submit});
  trace.loops = 1;
  trace.outcome = verify_selection(current, selected, policy, streams.verify);
  return trace;
}

SolveTrace solve_click(Challenge ch, Detector& detector, const FlexibilityPolicy& policy, SolveStreams& streams,
                       const SolverOptions& options) {
  if (ch.kind != ChallengeKind::click) throw StateError("solve_click on a selection challenge");
  if (options.max_loops < 1) throw ArgumentError("max_loops must be positive");

  SolveTrace trace;
  trace.kind = ChallengeKind::click;
  trace.challenge_id = ch.id;
  trace.target_label = parse_instruction(instruction_text(ch)).target_label;
  trace.actions.push_back({ActionKind::load});

  std::optional<std::set<int>> regenerated;
  while (trace.loops < options.max_loops) {
    auto dets = run_detector(detector, ch, streams, trace);
    if (!dets) {
      fail_without_submit(trace, ch, streams);
      return trace;
    }
    std::set<int> cells = potential_cells(*dets, ch, trace.target_label, detector.threshold(), options.mode);
    if (!options.full_image_redetect && regenerated) {
      std::set<int> kept;
      std::set_intersection(cells.begin(), cells.end(), regenerated->begin(), regenerated->end(),
                            std::inserter(kept, kept.end()));
      cells = std::move(kept);
    }
    if (cells.empty()) break;

    ++trace.loops;
    const std::size_t log_start = ch.regen_log.size();
    for (int cell : cells) {
      trace.actions.push_back({ActionKind::click, cell});
      trace.submitted.push_back(cell);
      click_cell(ch, cell, streams.server);
    }
    double slowest = 0;
    for (std::size_t i = log_start; i < ch.regen_log.size(); ++i) slowest = std::max(slowest, ch.regen_log[i].latency_s);
    trace.actions.push_back({ActionKind::wait, 0, slowest});
    regenerated = std::move(cells);
  }

  trace.actions.push_back({ActionKind::submit});
  trace.outcome = verify_click(ch, policy, streams.verify);
  return trace;
}

SolveTrace solve(const Challenge& ch, Detector& detector, const FlexibilityPolicy& policy, SolveStreams& streams,
                 const SolverOptions& options, const ReloadFn& reload) {
  if (ch.kind == ChallengeKind::click) return solve_click(ch, detector, policy, streams, options);
  return solve_selection(ch, detector, policy, streams, options, reload);
}

void TimingConfig::validate() const {
  if (!(inference_s > 0) || !(inference_sd >= 0)) throw ConfigError("inference time must be positive");
  if (!(per_click_s > 0) || !(click_jitter >= 0 && click_jitter < 1))
    throw ConfigError("click time must be positive with jitter in [0, 1)");
  if (!(load_s.lo > 0 && load_s.lo <= load_s.hi)) throw ConfigError("load range must satisfy 0 < lo <= hi");
  if (!(wait_scale > 0)) throw ConfigError("wait_scale must be positive");
}

double simulate_timing(SolveTrace& trace, const TimingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  double t = 0;
  for (TraceAction& a : trace.actions) {
    a.t = t;
    switch (a.kind) {
      case ActionKind::load:
      case ActionKind::reload:
        t += rng.uniform(cfg.load_s.lo, cfg.load_s.hi);
        break;
      case ActionKind::detect:
        t += std::max(0.1, rng.normal(cfg.inference_s, cfg.inference_sd));
        break;
      case ActionKind::click:
        t += cfg.per_click_s * (1.0 + rng.uniform(-cfg.click_jitter, cfg.click_jitter));
        break;
      case ActionKind::wait:
        t += std::max(1e-3, a.latency_s * cfg.wait_scale);
        break;
      case ActionKind::submit:
        break;
    }
  }
  trace.duration_s = t;
  return t;
}

namespace {

ordered_json detection_json(const Detection& d) {
  return ordered_json{{"label", d.label},
                      {"confidence", d.confidence},
                      {"box", {d.box.x_min(), d.box.y_min(), d.box.x_max(), d.box.y_max()}}};
}

Detection detection_from_json(const ordered_json& j) {
  const auto& b = j.at("box");
  if (!b.is_array() || b.size() != 4) throw ParseError("detection box must have four numbers");
  return Detection::make(j.at("label").get<std::string>(), j.at("confidence").get<double>(),
                         BoundingBox(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()));
}

}  // namespace

std::string trace_to_jsonl(const SolveTrace& trace) {
  std::string out;
  ordered_json head{{"challenge_id", trace.challenge_id},
                    {"kind", to_string(trace.kind)},
                    {"target", trace.target_label},
                    {"loops", trace.loops},
                    {"reloads", trace.reloads}};
  out += head.dump() + '\n';
  std::size_t detect_index = 0;
  for (const TraceAction& a : trace.actions) {
    ordered_json line{{"t", a.t}, {"action", to_string(a.kind)}};
    if (a.kind == ActionKind::click) line["cell"] = a.cell;
    if (a.kind == ActionKind::wait) line["latency_s"] = a.latency_s;
    if (a.kind == ActionKind::detect) {
      ordered_json dets = ordered_json::array();
      if (detect_index < trace.detections.size())
        for (const Detection& d : trace.detections[detect_index]) dets.push_back(detection_json(d));
      ++detect_index;
      line["detections"] = std::move(dets);
    }
    out += line.dump() + '\n';
  }
  ordered_json result{{"passed", trace.outcome.passed},
                      {"missed", trace.outcome.missed},
                      {"wrong", trace.outcome.wrong},
                      {"submitted", trace.submitted},
                      {"duration_s", trace.duration_s}};
  if (trace.error) result["error"] = *trace.error;
  out += result.dump() + '\n';
  return out;
}

SolveTrace trace_from_jsonl(std::string_view text) {
  std::vector<ordered_json> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  try {
    while (std::getline(in, line))
      if (!line.empty()) lines.push_back(ordered_json::parse(line));
    if (lines.size() < 2) throw ParseError("trace needs a header and a result line");

    SolveTrace t;
    const auto& head = lines.front();
    t.challenge_id = head.at("challenge_id").get<std::string>();
    t.kind = challenge_kind_from_string(head.at("kind").get<std::string>());
    t.target_label = head.at("target").get<std::string>();
    t.loops = head.at("loops").get<int>();
    t.reloads = head.at("reloads").get<int>();
    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
      const auto& j = lines[i];
      TraceAction a;
      a.kind = action_kind_from_string(j.at("action").get<std::string>());
      a.t = j.at("t").get<double>();
      if (a.kind == ActionKind::click) a.cell = j.at("cell").get<int>();
      if (a.kind == ActionKind::wait) a.latency_s = j.at("latency_s").get<double>();
      if (a.kind == ActionKind::detect) {
        std::vector<Detection> dets;
        for (const auto& d : j.at("detections")) dets.push_back(detection_from_json(d));
        t.detections.push_back(std::move(dets));
      }
      t.actions.push_back(a);
    }
    const auto& res = lines.back();
    t.outcome = VerifyOutcome{res.at("passed").get<bool>(), res.at("missed").get<int>(), res.at("wrong").get<int>()};
    t.submitted = res.at("submitted").get<std::vector<int>>();
    t.duration_s = res.at("duration_s").get<double>();
    if (res.contains("error")) t.error = res.at("error").get<std::string>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed trace: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("malformed trace: ") + e.what());
  }
}

}  // namespace cgl
