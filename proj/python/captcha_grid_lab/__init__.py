"""Grid image CAPTCHA laboratory: challenge simulator, solver and evaluation harness."""

import json

from . import _core
from ._core import (
    ArgumentError,
    Challenge,
    ConfigError,
    GenerationError,
    GridSpec,
    IoError,
    LabError,
    ParseError,
    StateError,
    add_gaussian_noise,
    box_to_pgns,
    estimate_noise_sigma,
    eval_option_keys,
    eval_preset_names,
    generate_challenge,
    map_detections,
    mapping_oracle,
    parse_instruction,
)

__all__ = [
    "ArgumentError",
    "Challenge",
    "ConfigError",
    "GenerationError",
    "GridSpec",
    "IoError",
    "LabError",
    "ParseError",
    "StateError",
    "add_gaussian_noise",
    "box_to_pgns",
    "detector_preset",
    "estimate_noise_sigma",
    "eval_option_keys",
    "eval_preset_names",
    "generate_challenge",
    "map_detections",
    "mapping_oracle",
    "parse_instruction",
    "run_eval",
    "solve",
]


def solve(challenge, detector="perfect", policy="strict", seed=0):
    """Solve one challenge. Returns the trace as a list of JSON objects."""
    text = _core.solve(challenge, detector, policy, seed)
    return [json.loads(line) for line in text.splitlines()]


def run_eval(**options):
    """Run an evaluation. Keyword names are config keys with '_' for '-'.

    >>> report = run_eval(preset="perfect", sessions=50)
    >>> report["success_rate"]
    1.0
    """
    flat = {}
    for key, value in options.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        flat[key.replace("_", "-")] = str(value)
    return json.loads(_core.run_eval(flat))


def detector_preset(name):
    return json.loads(_core.detector_preset(name))
