import json

import pytest

import captcha_grid_lab as lab


def test_grid_and_mapping():
    g = lab.GridSpec(4, 4)
    assert g.cell_count == 16
    assert g.cells()[5] == (6, (100.0, 100.0, 200.0, 200.0))
    assert lab.box_to_pgns((50, 50, 250, 150), g) == [1, 2, 3, 5, 6, 7]
    assert lab.box_to_pgns((10, 10, 390, 40), g, "corner") == [1, 4]
    assert lab.mapping_oracle((50, 50, 250, 150), g) == {1, 2, 3, 5, 6, 7}


def test_map_detections_filters_label_and_threshold():
    g = lab.GridSpec(4, 4)
    dets = [("bus", 0.9, (0, 0, 50, 50)), ("car", 0.9, (0, 0, 50, 50)), ("bus", 0.1, (300, 300, 350, 350))]
    assert lab.map_detections(dets, g, "bus") == [("bus", 0.9, [1])]


def test_challenge_round_trip_and_solve():
    ch = lab.generate_challenge(7, kind="selection")
    assert ch.kind == "selection"
    assert ch.ground_truth_pgns == sorted(ch.ground_truth_pgns)
    again = lab.Challenge.from_json(ch.to_json())
    assert again.id == ch.id and again.ground_truth_pgns == ch.ground_truth_pgns
    assert ch.render_png().startswith(b"\x89PNG")
    assert lab.parse_instruction(ch.instruction)[0] == ch.target_label

    trace = lab.solve(ch)
    assert trace[0]["challenge_id"] == ch.id
    assert trace[-1]["passed"] is True


def test_noise_estimate_tracks_sigma():
    ch = lab.generate_challenge(3, kind="selection", client="low_risk")
    noisy = lab.add_gaussian_noise(ch.render_png(), 20.0, 1)
    assert abs(lab.estimate_noise_sigma(noisy) - 20.0) < 4.0


def test_run_eval_perfect_and_deterministic():
    a = lab.run_eval(preset="perfect", sessions=100, seed=5)
    assert a["success_rate"] == 1.0
    t = a["totals"]
    assert t["passed"] + t["failed"] + t["no_challenge"] == t["sessions"] == 100
    assert lab.run_eval(preset="perfect", sessions=100, seed=5) == a


def test_errors_map_to_python_exceptions():
    with pytest.raises(lab.ConfigError):
        lab.run_eval(detector="no-such-detector", sessions=1)
    with pytest.raises(lab.ConfigError):
        lab.box_to_pgns((0, 0, 1, 1), lab.GridSpec(2, 2), "diagonal")
    with pytest.raises(lab.ParseError):
        lab.Challenge.from_json("{")
    assert issubclass(lab.ConfigError, lab.LabError)


def test_presets_are_exposed():
    assert lab.detector_preset("augmented")["r0"] == 1.0
    assert "paper-analog" in lab.eval_preset_names()
    assert "detector" in lab.eval_option_keys()
