#include "cgl/json_io.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cgl/error.hpp"

namespace cgl {

using nlohmann::ordered_json;

namespace {

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json parse(std::string_view text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

// Runs `f`, turning JSON access errors into ParseError.
template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("unexpected JSON shape: ") + e.what());
  }
}

std::string_view op_name(PerturbationOp::Kind k) {
  switch (k) {
    case PerturbationOp::Kind::brightness_contrast:
      return "brightness_contrast";
    case PerturbationOp::Kind::gaussian_noise:
      return "gaussian_noise";
    case PerturbationOp::Kind::gaussian_blur:
      return "gaussian_blur";
    case PerturbationOp::Kind::median_blur:
      return "median_blur";
    case PerturbationOp::Kind::average_blur:
      return "average_blur";
  }
  return "gaussian_noise";
}

PerturbationOp::Kind op_kind(std::string_view s) {
  for (auto k : {PerturbationOp::Kind::brightness_contrast, PerturbationOp::Kind::gaussian_noise,
                 PerturbationOp::Kind::gaussian_blur, PerturbationOp::Kind::median_blur,
                 PerturbationOp::Kind::average_blur})
    if (op_name(k) == s) return k;
  throw ParseError("unknown perturbation op: " + std::string(s));
}

ordered_json perturbation_json(const PerturbationRecord& r) {
  ordered_json ops = ordered_json::array();
  for (const PerturbationOp& op : r.ops) {
    ordered_json o{{"kind", op_name(op.kind)}};
    switch (op.kind) {
      case PerturbationOp::Kind::brightness_contrast:
        o["brightness"] = op.brightness;
        o["contrast"] = op.contrast;
        break;
      case PerturbationOp::Kind::gaussian_noise:
        o["sigma"] = op.sigma;
        o["noise_seed"] = op.noise_seed;
        break;
      case PerturbationOp::Kind::gaussian_blur:
        o["sigma"] = op.sigma;
        break;
      case PerturbationOp::Kind::median_blur:
      case PerturbationOp::Kind::average_blur:
        o["k"] = op.k;
        break;
    }
    ops.push_back(std::move(o));
  }
  return ordered_json{{"ops", std::move(ops)}, {"total_sigma", r.total_sigma}};
}

PerturbationRecord perturbation_of(const ordered_json& j) {
  PerturbationRecord r;
  for (const auto& o : j.at("ops")) {
    PerturbationOp op;
    op.kind = op_kind(o.at("kind").get<std::string>());
    switch (op.kind) {
      case PerturbationOp::Kind::brightness_contrast:
        op.brightness = o.at("brightness").get<double>();
        op.contrast = o.at("contrast").get<double>();
        break;
      case PerturbationOp::Kind::gaussian_noise:
        op.sigma = o.at("sigma").get<double>();
        op.noise_seed = o.at("noise_seed").get<std::uint64_t>();
        break;
      case PerturbationOp::Kind::gaussian_blur:
        op.sigma = o.at("sigma").get<double>();
        break;
      case PerturbationOp::Kind::median_blur:
      case PerturbationOp::Kind::average_blur:
        op.k = o.at("k").get<int>();
        break;
    }
    r.ops.push_back(op);
  }
  r.total_sigma = j.at("total_sigma").get<double>();
  return r;
}

ordered_json table_json(const AcceptTable& t) {
  ordered_json arr = ordered_json::array();
  for (const auto& [key, p] : t) arr.push_back({{"missed", key.first}, {"wrong", key.second}, {"accept", p}});
  return arr;
}

AcceptTable table_of(const ordered_json& arr) {
  AcceptTable t;
  for (const auto& e : arr) t[{e.at("missed").get<int>(), e.at("wrong").get<int>()}] = e.at("accept").get<double>();
  return t;
}

bool has_json_suffix(std::string_view ref) { return ref.size() > 5 && ref.substr(ref.size() - 5) == ".json"; }

}  // namespace

std::string perturbation_to_json(const PerturbationRecord& r) { return dump(perturbation_json(r)); }

PerturbationRecord perturbation_from_json(std::string_view text) {
  auto j = parse(text);
  return guarded([&] { return perturbation_of(j); });
}

std::string policy_to_json(const FlexibilityPolicy& p) {
  return dump(ordered_json{{"name", p.name}, {"selection", table_json(p.selection)}, {"click", table_json(p.click)}});
}

FlexibilityPolicy policy_from_json(std::string_view text) {
  auto j = parse(text);
  FlexibilityPolicy p = guarded([&] {
    return FlexibilityPolicy{j.at("name").get<std::string>(), table_of(j.at("selection")), table_of(j.at("click"))};
  });
  p.normalize();
  return p;
}

std::string flexibility_rows_to_json(const std::vector<ClickFlexibilityRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows)
    arr.push_back(
        {{"name", r.name}, {"correct", r.correct}, {"wrong", r.wrong}, {"missed", r.missed}, {"rate", r.rate}});
  return dump(ordered_json{{"rows", std::move(arr)}});
}

std::vector<ClickFlexibilityRow> flexibility_rows_from_json(std::string_view text) {
  auto j = parse(text);
  auto rows = guarded([&] {
    std::vector<ClickFlexibilityRow> out;
    for (const auto& r : j.at("rows"))
      out.push_back({r.at("name").get<std::string>(), r.at("correct").get<int>(), r.at("wrong").get<int>(),
                     r.at("missed").get<int>(), r.at("rate").get<double>()});
    return out;
  });
  for (const auto& r : rows)
    if (!(r.rate >= 0 && r.rate <= 1) || r.correct < 0 || r.wrong < 0 || r.missed < 0)
      throw ConfigError("flexibility row '" + r.name + "' out of range");
  return rows;
}

std::string detector_config_to_json(const DetectorConfig& c) {
  ordered_json per = ordered_json::object();
  for (const auto& [label, r] : c.r0_per_category) per[label] = r;
  return dump(ordered_json{{"name", c.name},
                           {"threshold", c.threshold},
                           {"r0", c.r0},
                           {"r0_per_category", std::move(per)},
                           {"fp_rate", c.fp_rate},
                           {"sigma_loc", c.sigma_loc},
                           {"sigma0", c.sigma0}});
}

DetectorConfig detector_config_from_json(std::string_view text) {
  auto j = parse(text);
  DetectorConfig c = guarded([&] {
    DetectorConfig d;
    d.name = j.at("name").get<std::string>();
    d.threshold = j.value("threshold", d.threshold);
    d.r0 = j.value("r0", d.r0);
    if (j.contains("r0_per_category"))
      for (const auto& [label, r] : j.at("r0_per_category").items()) d.r0_per_category[label] = r.get<double>();
    d.fp_rate = j.value("fp_rate", d.fp_rate);
    d.sigma_loc = j.value("sigma_loc", d.sigma_loc);
    d.sigma0 = j.value("sigma0", d.sigma0);
    return d;
  });
  c.validate();
  return c;
}

std::string challenge_to_json(const Challenge& ch) {
  ordered_json objects = ordered_json::array();
  for (const SceneObject& o : ch.scene.objects)
    objects.push_back(
        {{"label", o.label}, {"box", {o.box.x_min(), o.box.y_min(), o.box.x_max(), o.box.y_max()}}, {"tile", o.tile}});
  ordered_json j{{"id", ch.id},
                 {"kind", to_string(ch.kind)},
                 {"target", ch.target_label},
                 {"seed", ch.seed},
                 {"grid",
                  {{"rows", ch.grid.rows()},
                   {"cols", ch.grid.cols()},
                   {"width", ch.grid.width()},
                   {"height", ch.grid.height()}}},
                 {"ground_truth_pgns", ch.ground_truth_pgns},
                 {"perturbation", perturbation_json(ch.perturbation)},
                 {"scene", {{"width", ch.scene.width}, {"height", ch.scene.height}, {"objects", std::move(objects)}}}};
  if (ch.kind == ChallengeKind::click) {
    j["dynamics"] = {{"p_regen", ch.dynamics.p_regen},
                     {"decay", ch.dynamics.decay},
                     {"p_distractor", ch.dynamics.p_distractor},
                     {"latency_s", {ch.dynamics.latency_s.lo, ch.dynamics.latency_s.hi}}};
    j["regen_counts"] = ch.regen_counts;
    j["correct_clicks"] = ch.correct_clicks;
    j["wrong_clicks"] = ch.wrong_clicks;
  }
  return dump(j);
}

Challenge challenge_from_json(std::string_view text) {
  auto j = parse(text);
  Challenge ch = guarded([&] {
    Challenge c;
    c.id = j.at("id").get<std::string>();
    c.kind = challenge_kind_from_string(j.at("kind").get<std::string>());
    c.target_label = j.at("target").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& g = j.at("grid");
    c.grid = GridSpec(g.at("rows").get<int>(), g.at("cols").get<int>(), g.at("width").get<double>(),
                      g.at("height").get<double>());
    c.ground_truth_pgns = j.at("ground_truth_pgns").get<std::vector<int>>();
    c.perturbation = perturbation_of(j.at("perturbation"));
    const auto& s = j.at("scene");
    c.scene.width = s.at("width").get<int>();
    c.scene.height = s.at("height").get<int>();
    for (const auto& o : s.at("objects")) {
      const auto& b = o.at("box");
      c.scene.objects.push_back(make_object(o.at("label").get<std::string>(),
                                            BoundingBox(b.at(0).get<double>(), b.at(1).get<double>(),
                                                        b.at(2).get<double>(), b.at(3).get<double>()),
                                            o.value("tile", 0)));
    }
    if (c.kind == ChallengeKind::click) {
      const auto& d = j.at("dynamics");
      c.dynamics.p_regen = d.at("p_regen").get<double>();
      c.dynamics.decay = d.at("decay").get<double>();
      c.dynamics.p_distractor = d.at("p_distractor").get<double>();
      c.dynamics.latency_s = {d.at("latency_s").at(0).get<double>(), d.at("latency_s").at(1).get<double>()};
      c.regen_counts = j.at("regen_counts").get<std::vector<int>>();
      c.correct_clicks = j.at("correct_clicks").get<int>();
      c.wrong_clicks = j.at("wrong_clicks").get<int>();
    }
    return c;
  });
  if (ch.ground_truth_pgns != ground_truth_for(ch.scene, ch.grid, ch.target_label))
    throw ConfigError("ground_truth_pgns do not match the scene");
  if (ch.kind == ChallengeKind::click && ch.regen_counts.size() != static_cast<std::size_t>(ch.grid.cell_count()))
    throw ParseError("regen_counts must have one entry per cell");
  return ch;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view text) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("short write to " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

FlexibilityPolicy resolve_policy(std::string_view ref) {
  std::string_view file = ref, row;
  if (auto colon = ref.rfind(".json:"); colon != std::string_view::npos) {
    file = ref.substr(0, colon + 5);
    row = ref.substr(colon + 6);
  }
  if (!has_json_suffix(file)) return builtin_policy(ref);
  std::string text;
  try {
    text = read_text_file(std::string(file));
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  auto j = parse(text);
  if (j.contains("rows")) {
    if (row.empty()) throw ConfigError("rows file needs a ':<row name>' suffix: " + std::string(ref));
    for (const auto& r : flexibility_rows_from_json(text))
      if (r.name == row) return click_row_policy(r);
    throw ConfigError("no row '" + std::string(row) + "' in " + std::string(file));
  }
  if (!row.empty()) throw ConfigError("policy file has no rows: " + std::string(file));
  return policy_from_json(text);
}

DetectorConfig resolve_detector_config(std::string_view ref) {
  if (!has_json_suffix(ref)) return detector_preset(ref);
  try {
    return detector_config_from_json(read_text_file(std::string(ref)));
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace cgl
