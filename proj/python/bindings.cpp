#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cgl/error.hpp"
#include "cgl/eval.hpp"
#include "cgl/geometry.hpp"
#include "cgl/imaging.hpp"
#include "cgl/instruction.hpp"
#include "cgl/json_io.hpp"
#include "cgl/mapping_oracle.hpp"
#include "cgl/solver.hpp"

namespace py = pybind11;
using namespace cgl;

namespace {

using Box = std::tuple<double, double, double, double>;

BoundingBox to_box(const Box& b) { return BoundingBox(std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)); }

std::vector<std::uint8_t> bytes_of(const py::bytes& b) {
  std::string s = b;
  return {s.begin(), s.end()};
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

Challenge make_challenge(std::uint64_t seed, const std::string& client, const std::string& security_pref,
                         const std::optional<std::string>& kind, const std::string& grid) {
  EvalConfig cfg;
  set_eval_option(cfg, "client", client);
  set_eval_option(cfg, "security-pref", security_pref);
  set_eval_option(cfg, "grid", grid);
  GeneratorConfig gen;
  gen.selection_rows = cfg.rows;
  gen.selection_cols = cfg.cols;
  auto diff = difficulty_from_risk(risk_score(cfg.signals), cfg.security_pref);
  std::optional<ChallengeKind> k;
  if (kind) k = challenge_kind_from_string(*kind);
  return generate_challenge(diff, CategoryDistribution::selection_default(), seed, gen, k);
}

std::string solve_challenge(const Challenge& ch, const std::string& detector, const std::string& policy,
                            std::uint64_t seed) {
  EvalConfig cfg;
  cfg.detector = detector;
  auto det = make_detector_factory(cfg)();
  SolveStreams streams{derive_seed(seed, "detector"), Rng(derive_seed(seed, "server")),
                       Rng(derive_seed(seed, "verification"))};
  auto trace = solve(ch, *det, resolve_policy(policy), streams);
  simulate_timing(trace, TimingConfig{}, derive_seed(seed, "timing"));
  return trace_to_jsonl(trace);
}

std::string eval_json(const std::map<std::string, std::string>& options) {
  ConfigPairs pairs(options.begin(), options.end());
  return report_to_json(run_eval(apply_eval_options(pairs)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grid image CAPTCHA laboratory core";

  auto base = py::register_exception<Error>(m, "LabError", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<StateError>(m, "StateError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<GenerationError>(m, "GenerationError", base);
  py::register_exception<IoError>(m, "IoError", base);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<int, int, double, double>(), py::arg("rows"), py::arg("cols"), py::arg("width") = 400.0,
           py::arg("height") = 400.0)
      .def_property_readonly("rows", &GridSpec::rows)
      .def_property_readonly("cols", &GridSpec::cols)
      .def_property_readonly("width", &GridSpec::width)
      .def_property_readonly("height", &GridSpec::height)
      .def_property_readonly("cell_count", &GridSpec::cell_count)
      .def("cells",
           [](const GridSpec& g) {
             std::vector<std::pair<int, Box>> out;
             for (const auto& c : grid_cells(g)) out.push_back({c.index, Box{c.x_min, c.y_min, c.x_max, c.y_max}});
             return out;
           })
      .def("__repr__", [](const GridSpec& g) {
        return "GridSpec(" + std::to_string(g.rows()) + ", " + std::to_string(g.cols()) + ")";
      });

  m.def(
      "box_to_pgns",
      [](const Box& box, const GridSpec& grid, const std::string& mode) {
        return box_to_pgns(to_box(box), grid, MappingMode::parse(mode));
      },
      py::arg("box"), py::arg("grid"), py::arg("mode") = "intersection",
      "Cells a (x_min, y_min, x_max, y_max) box maps to, ascending.");

  m.def(
      "mapping_oracle",
      [](const Box& box, const GridSpec& grid, double step) { return mapping_oracle(to_box(box), grid, step); },
      py::arg("box"), py::arg("grid"), py::arg("step") = 1.0);

  m.def(
      "map_detections",
      [](const std::vector<std::tuple<std::string, double, Box>>& dets, const GridSpec& grid,
         const std::string& target, double threshold, const std::string& mode) {
        std::vector<Detection> in;
        for (const auto& [label, conf, box] : dets) in.push_back(Detection::make(label, conf, to_box(box)));
        std::vector<std::tuple<std::string, double, std::vector<int>>> out;
        for (const auto& g : map_detections_to_grids(in, grid, target, threshold, MappingMode::parse(mode)))
          out.emplace_back(g.label, g.confidence, g.pgns);
        return out;
      },
      py::arg("detections"), py::arg("grid"), py::arg("target"), py::arg("threshold") = 0.2,
      py::arg("mode") = "intersection", "(label, confidence, box) triples -> (label, confidence, pgns) triples.");

  m.def(
      "estimate_noise_sigma", [](const py::bytes& png) { return estimate_noise_sigma(decode_png(bytes_of(png))); },
      py::arg("png"));

  m.def(
      "add_gaussian_noise",
      [](const py::bytes& png, double sigma, std::uint64_t seed) {
        return to_bytes(encode_png(add_gaussian_noise(decode_png(bytes_of(png)), sigma, seed)));
      },
      py::arg("png"), py::arg("sigma"), py::arg("seed"));

  m.def("parse_instruction", [](const std::string& text) {
    auto ins = parse_instruction(text);
    return py::make_tuple(ins.target_label, std::string(to_string(ins.kind_hint)));
  });

  py::class_<Challenge>(m, "Challenge")
      .def_readonly("id", &Challenge::id)
      .def_property_readonly("kind", [](const Challenge& c) { return std::string(to_string(c.kind)); })
      .def_readonly("target_label", &Challenge::target_label)
      .def_readonly("ground_truth_pgns", &Challenge::ground_truth_pgns)
      .def_readonly("seed", &Challenge::seed)
      .def_readonly("grid", &Challenge::grid)
      .def_property_readonly("noise_sigma", [](const Challenge& c) { return c.perturbation.total_sigma; })
      .def_property_readonly("instruction", [](const Challenge& c) { return instruction_text(c); })
      .def("render_png", [](const Challenge& c) { return to_bytes(encode_png(c.render())); })
      .def("to_json", [](const Challenge& c) { return challenge_to_json(c); })
      .def_static("from_json", [](const std::string& text) { return challenge_from_json(text); });

  m.def("generate_challenge", &make_challenge, py::arg("seed"), py::arg("client") = "low_risk",
        py::arg("security_pref") = "medium", py::arg("kind") = py::none(), py::arg("grid") = "4x4");

  m.def("solve", &solve_challenge, py::arg("challenge"), py::arg("detector") = "perfect",
        py::arg("policy") = "strict", py::arg("seed") = 0, "Solve one challenge; returns the trace as JSON lines.");

  m.def("run_eval", &eval_json, py::arg("options"), py::call_guard<py::gil_scoped_release>(),
        "Run an evaluation from flat config options; returns report.json text.");

  m.def("detector_preset", [](const std::string& name) { return detector_config_to_json(detector_preset(name)); });
  m.def("eval_option_keys", &eval_option_keys);
  m.def("eval_preset_names", &eval_preset_names);
}
