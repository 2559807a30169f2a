"""Run configuration: one JSON document with one object per module, validated
on load, with dotted-path overrides for sweeps and experiments."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .controller import MpcConfig, NominalFeedback
from .errors import ConfigError
from .estimator import EstimatorConfig, PenaltyConfig
from .model import BearingScenario, NoiseSpec, bearing_model
from .simulation import LyapunovConfig, SimulationSetup, MODE_ACTIVE, MODE_NOMINAL

DEFAULT_CONFIG = {
    "scenario": {
        "p_true": [5.0, 8.0],
        "delta": 0.1,
        "x0": [5.0, 10.0],
        "p_hat_init": [3.0, 10.0],
    },
    "noise": {"nu": 0.03, "seed": 0},
    "window": {"length": 10},
    "estimator": {
        "iters_per_step": 10,
        "damping": 1e-8,
        "full_solve_tol": 1e-9,
        "full_solve_max_iters": 100,
        "multistart_count": 5,
        "jitter_radius": 0.5,
        "multistart_seed": 12345,
        "min_curvature": 0.2,
    },
    "feedback": {"gain": 1.0, "r_sat": 1.0, "u_max": 2.0},
    "mpc": {"delta_prime": 1.0, "mu": 0.5, "ring_samples": 64, "refine_iters": 20},
    "penalty": {"kind": "zero"},
    "lyapunov": {"lam": 1.0},
    "run": {
        "steps": 300,
        "mode": MODE_ACTIVE,
        "oracle": False,
        "burn_in": 100,
        "out_dir": "out",
    },
}


def reference_config() -> dict:
    """The bearing-only experiment parameter set used throughout the docs."""
    return copy.deepcopy(DEFAULT_CONFIG)


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown field {here!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"field {here!r} must be an object")
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


def apply_overrides(cfg: dict, overrides: List[str]) -> dict:
    """Apply CLI overrides of the form dotted.path=json_value."""
    out = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form path=value")
        path, raw = item.split("=", 1)
        keys = path.split(".")
        node = out
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                raise ConfigError(f"unknown field {path!r}")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigError(f"unknown field {path!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings (e.g. mode names) need no quoting
        node[keys[-1]] = value
    return out


def config_hash(cfg: dict) -> str:
    """Hash of the configuration minus the noise seed, so every run of a seed
    sweep shares the same hash."""
    stripped = copy.deepcopy(cfg)
    stripped.get("noise", {}).pop("seed", None)
    canonical = json.dumps(stripped, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; raw holds the normalized JSON document."""

    raw: dict

    @property
    def steps(self) -> int:
        return int(self.raw["run"]["steps"])

    @property
    def mode(self) -> str:
        return self.raw["run"]["mode"]

    @property
    def oracle(self) -> bool:
        return bool(self.raw["run"]["oracle"])

    @property
    def out_dir(self) -> str:
        return self.raw["run"]["out_dir"]

    @property
    def seed(self) -> int:
        return int(self.raw["noise"]["seed"])

    def hash(self) -> str:
        return config_hash(self.raw)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    def with_updates(self, **sections) -> "RunConfig":
        return parse_config(_merge(self.raw, sections))

    def to_setup(self) -> SimulationSetup:
        raw = self.raw
        scenario = BearingScenario(
            p_true=np.array(raw["scenario"]["p_true"], dtype=float),
            delta=float(raw["scenario"]["delta"]),
            x0=np.array(raw["scenario"]["x0"], dtype=float),
        )
        model = bearing_model(scenario, input_set_radius=float(raw["feedback"]["u_max"]))
        pen_raw = raw["penalty"]
        if pen_raw["kind"] == "zero":
            penalty = PenaltyConfig()
        else:
            penalty = PenaltyConfig(
                kind="box",
                lo=np.array(pen_raw["lo"], dtype=float),
                hi=np.array(pen_raw["hi"], dtype=float),
                weight=float(pen_raw.get("weight", 1.0)),
            )
        return SimulationSetup(
            scenario=scenario,
            model=model,
            window_length=int(raw["window"]["length"]),
            noise=NoiseSpec(nu=float(raw["noise"]["nu"]), seed=int(raw["noise"]["seed"])),
            estimator=EstimatorConfig(**raw["estimator"]),
            mpc=MpcConfig(
                delta_prime=float(raw["mpc"]["delta_prime"]),
                mu=float(raw["mpc"]["mu"]),
                ring_samples=int(raw["mpc"]["ring_samples"]),
                refine_iters=int(raw["mpc"]["refine_iters"]),
            ),
            feedback=NominalFeedback(
                gain=float(raw["feedback"]["gain"]),
                r_sat=float(raw["feedback"]["r_sat"]),
                u_max=float(raw["feedback"]["u_max"]),
                delta=float(raw["scenario"]["delta"]),
            ),
            p_hat_init=np.array(raw["scenario"]["p_hat_init"], dtype=float),
            penalty=penalty,
            lyapunov=LyapunovConfig(lam=float(raw["lyapunov"]["lam"])),
            burn_in=int(raw["run"]["burn_in"]),
        )


def parse_config(cfg: dict) -> RunConfig:
    """Validate a configuration document; unknown fields and out-of-range
    values raise ConfigError naming the offending field."""
    merged = _merge(DEFAULT_CONFIG, cfg)

    def check(cond, field, why):
        if not cond:
            raise ConfigError(f"field {field!r}: {why}")

    check(0.0 < merged["mpc"]["mu"] < 1.0, "mpc.mu", "must satisfy 0 < mu < 1")
    check(merged["mpc"]["delta_prime"] > 0, "mpc.delta_prime", "must be positive")
    check(
        merged["scenario"]["delta"] * merged["feedback"]["gain"] < 1.0,
        "feedback.gain",
        "delta * gain must be < 1",
    )
    check(merged["window"]["length"] >= 2, "window.length", "must be >= 2")
    check(merged["noise"]["nu"] >= 0.0, "noise.nu", "must be non-negative")
    check(merged["noise"]["seed"] >= 0, "noise.seed", "must be non-negative")
    check(merged["run"]["steps"] > merged["window"]["length"], "run.steps",
          "must exceed the window length")
    check(merged["run"]["mode"] in (MODE_ACTIVE, MODE_NOMINAL), "run.mode",
          f"must be {MODE_ACTIVE!r} or {MODE_NOMINAL!r}")
    check(
        merged["feedback"]["u_max"] > merged["feedback"]["gain"] * merged["feedback"]["r_sat"],
        "feedback.u_max",
        "must exceed gain * r_sat",
    )
    rc = RunConfig(raw=merged)
    try:
        rc.to_setup()
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return rc


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(doc)
