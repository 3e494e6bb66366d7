"""Experiment configuration: YAML file + dotted CLI overrides over defaults.

The resolved configuration is a plain nested dict (kept for provenance
embedding in every output file); typed accessors build the domain objects
and raise ConfigError with the offending field path.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import yaml

from .codec import RateTable, load_rate_table, synthesize_rate_table
from .domain import CameraRig, Popularity, load_popularity, load_rig, make_popularity
from .models import BallScheduleParams, SceneModel


class ConfigError(ValueError):
    """Invalid experiment configuration; the message carries the field path."""


DEFAULTS: dict = {
    "seed": 2024,
    "out_dir": "results",
    "rig": {
        "n_views": 450,
        "baseline": 1.0,
        "pose_file": None,
    },
    "rates": {
        "file": None,
        "mode": "random",
        "q_label": "QP25",
        "mean_i": 80000.0,
        "mean_p": 16000.0,
        "spread": 0.3,
        "c_i": 80000.0,
        "c_p": 16000.0,
        "seed": 1,
    },
    "popularity": {
        "kind": "uniform",
        "mean_frac": None,
        "std_frac": None,
        "file": None,
    },
    "schedule": {
        "frame_rate": 30.0,
        "tau_max": 1.0,
        "duration": 90.0,
    },
    "scene": {
        "width": 640.0,
        "height": 480.0,
        "focal": 615.0,
        "z_min": 1.0,
        "z_max": 10.0,
        "d_inp": 100.0,
        "d_rec": 1.0,
    },
    "sweeps": {
        "mu": [0.05],
        "delta": [5.0, 10.0, 20.0],
        "f_e": [90],
        "t_s": [None],
    },
    "methods": ["NBPA", "NBPU", "Baseline", "Baseline-NB"],
    "solver": {
        "width_cap": None,
    },
    "simulate": {
        "path_count": 100,
        "allocator": "s0",
        "memory_aware": False,
        "sample_count": None,
        "virtual_shift": None,
        "emit_traces": True,
    },
    "alpha": {
        "path_count": 500,
        "n_views": 1000,
        "n_segments": 8,
        "delta": 20.0,
        "t_star_grid": [0.0, 1.0, 2.0, 4.0, 8.0],
    },
    "oracle": {
        "instances": 200,
        "n_views_min": 2,
        "n_views_max": 12,
        "mu_grid": [0.0, 0.05, 0.5],
        "g_grid": [0.0, 0.5, 1.0],
    },
}

METHODS = ("NBPA", "NBPU", "Baseline", "Baseline-NB")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"{here}: unknown configuration key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{here}: expected a mapping")
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


def _apply_override(raw: dict, dotted: str) -> None:
    if "=" not in dotted:
        raise ConfigError(f"override {dotted!r} must look like key.path=value")
    key, _, text = dotted.partition("=")
    value = yaml.safe_load(text)
    node = raw
    parts = key.strip().split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"{key}: unknown configuration key")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"{key}: unknown configuration key")
    node[parts[-1]] = value


@dataclass
class ExperimentConfig:
    """Resolved experiment configuration with typed accessors."""

    raw: dict

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out_dir(self) -> str:
        return str(self.raw["out_dir"])

    @property
    def n_views(self) -> int:
        return int(self.raw["rig"]["n_views"])

    @property
    def methods(self) -> list[str]:
        methods = self.raw["methods"]
        for m in methods:
            if m not in METHODS:
                raise ConfigError(f"methods: unknown method {m!r} (choose from {METHODS})")
        return list(methods)

    @property
    def width_cap(self):
        cap = self.raw["solver"]["width_cap"]
        return None if cap is None else int(cap)

    def sweep(self, name: str) -> list:
        values = self.raw["sweeps"][name]
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweeps.{name}: must be a non-empty list")
        return values

    def rig(self) -> CameraRig:
        spec = self.raw["rig"]
        if spec["pose_file"]:
            return load_rig(spec["pose_file"], n_views=self.n_views)
        try:
            return CameraRig.linear(self.n_views, float(spec["baseline"]))
        except ValueError as exc:
            raise ConfigError(f"rig: {exc}") from exc

    def table(self) -> RateTable:
        spec = self.raw["rates"]
        if spec["file"]:
            return load_rate_table(spec["file"], n_views=self.n_views,
                                   q_label=spec["q_label"])
        try:
            if spec["mode"] == "constant":
                params = (float(spec["c_i"]), float(spec["c_p"]))
            else:
                params = (float(spec["mean_i"]), float(spec["mean_p"]),
                          float(spec["spread"]))
            return synthesize_rate_table(self.n_views, spec["mode"], params,
                                         seed=int(spec["seed"]),
                                         q_label=spec["q_label"])
        except ValueError as exc:
            raise ConfigError(f"rates: {exc}") from exc

    def popularity(self, n_views: int | None = None) -> Popularity:
        spec = self.raw["popularity"]
        n = self.n_views if n_views is None else n_views
        if spec["file"]:
            pop = load_popularity(spec["file"])
            if pop.n_views != n:
                raise ConfigError(f"popularity.file: has {pop.n_views} views, rig has {n}")
            return pop
        try:
            return make_popularity(spec["kind"], n, mean_frac=spec["mean_frac"],
                                   std_frac=spec["std_frac"])
        except ValueError as exc:
            raise ConfigError(f"popularity: {exc}") from exc

    def scene(self) -> SceneModel:
        spec = self.raw["scene"]
        try:
            return SceneModel(width=float(spec["width"]), height=float(spec["height"]),
                              focal=float(spec["focal"]), z_min=float(spec["z_min"]),
                              z_max=float(spec["z_max"]), d_inp=float(spec["d_inp"]),
                              d_rec=float(spec["d_rec"]))
        except ValueError as exc:
            raise ConfigError(f"scene: {exc}") from exc

    def schedule(self, delta: float, f_e: int | None = None) -> BallScheduleParams:
        spec = self.raw["schedule"]
        try:
            return BallScheduleParams(
                frame_rate=float(spec["frame_rate"]),
                request_interval=int(f_e if f_e is not None else self.sweep("f_e")[0]),
                tau_max=float(spec["tau_max"]),
                delta=float(delta),
                duration=float(spec["duration"]))
        except ValueError as exc:
            raise ConfigError(f"schedule: {exc}") from exc

    def provenance(self) -> dict:
        return {"config": self.raw, "master_seed": self.seed}

    def provenance_comment(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return f"# seed: {self.seed}\n# config: {blob}\n"


def load_config(path=None, overrides=(), seed=None, out_dir=None) -> ExperimentConfig:
    """Defaults, overlaid with the YAML file, then dotted key=value overrides."""
    raw = copy.deepcopy(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        raw = _merge(raw, data)
    for item in overrides:
        _apply_override(raw, item)
    if seed is not None:
        raw["seed"] = int(seed)
    if out_dir is not None:
        raw["out_dir"] = str(out_dir)
    return ExperimentConfig(raw)
