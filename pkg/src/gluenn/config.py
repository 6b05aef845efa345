"""Experiment configuration files (TOML) and their validation.

A config names one experiment and may override any field of that
experiment's defaults. Unknown keys are rejected; every validation error
carries the dotted path of the offending field.
"""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Dict, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .loss import DEFAULT_WEIGHTS, LossWeights
from .network import ACTIVATIONS, TRANSFORMS, ArchSpec, TrunkSpec
from .problems import (
    EXPERIMENT_NAMES,
    IMAG_LABELS,
    REAL_LABELS,
    ChemicalParams,
    InflationParams,
    TunnelingParams,
    make_experiment,
)
from .sampling import SPACINGS, SampleSpec
from .training import TrainConfig

OUTPUT_ROOT_ENV = "GLUENN_OUT"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class OracleConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12


@dataclass(frozen=True)
class EvaluationConfig:
    points: int = 400
    spacing: str = "linear"


@dataclass(frozen=True)
class MatchingConfig:
    point: Optional[float] = None
    spread: float = 0.2
    sweep_points: int = 21
    mode: str = "oracle"


@dataclass(frozen=True)
class OutputConfig:
    dir: str = ""
    partner_dir: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    physics: object
    arch: ArchSpec
    samples: Dict[str, SampleSpec]
    weights: LossWeights
    training: TrainConfig
    oracle: OracleConfig = field(default_factory=OracleConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    matching: MatchingConfig = field(default_factory=MatchingConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    source: Optional[str] = None

    def make_experiment(self):
        return make_experiment(self.experiment, self.physics)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, training=replace(self.training, seed=int(seed)))

    def output_dir(self, override=None) -> Path:
        if override is not None:
            return Path(override)
        root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
        return root / (self.output.dir or self.experiment)

    def partner_output_dir(self, out_dir: Path) -> Optional[Path]:
        if not self.output.partner_dir:
            return None
        return (Path(out_dir) / self.output.partner_dir).resolve()

    def to_dict(self) -> dict:
        def plain(dc):
            return {f.name: _plain(getattr(dc, f.name)) for f in fields(dc)}

        return {
            "experiment": self.experiment,
            "physics": plain(self.physics),
            "architecture": self.arch.to_dict(),
            "samples": {
                k: {"intervals": [list(iv) for iv in s.intervals], "count": s.count, "spacing": s.spacing}
                for k, s in self.samples.items()
            },
            "weights": plain(self.weights),
            "training": plain(self.training),
            "oracle": plain(self.oracle),
            "evaluation": plain(self.evaluation),
            "matching": plain(self.matching),
            "output": plain(self.output),
        }


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


PHYSICS_TYPES = {
    "chemical": ChemicalParams,
    "inflation": InflationParams,
    "tunneling_real": TunnelingParams,
    "tunneling_imag": TunnelingParams,
}


def _trunks(labels, hidden):
    return tuple(TrunkSpec(lab, hidden) for lab in labels)


def default_config(experiment: str) -> ExperimentConfig:
    """Built-in defaults for one experiment (sampling sets, weights and widths)."""
    if experiment == "chemical":
        return ExperimentConfig(
            experiment=experiment,
            physics=ChemicalParams(),
            arch=ArchSpec((100, 100), 100, _trunks(("c1_1", "c2_1"), (100,)), "log_scaled", 1.0),
            samples={
                "alpha": SampleSpec("alpha", ((1.0, 1.9),), 28, "logarithmic"),
                "beta": SampleSpec("beta", ((7.8, 31.0),), 60, "logarithmic"),
            },
            weights=DEFAULT_WEIGHTS["chemical"],
            training=TrainConfig(),
            oracle=OracleConfig(1e-10, 1e-16),
            evaluation=EvaluationConfig(400, "logarithmic"),
            matching=MatchingConfig(point=7.8),
        )
    if experiment == "inflation":
        return ExperimentConfig(
            experiment=experiment,
            physics=InflationParams(),
            arch=ArchSpec((1, 4, 4, 4, 50), 50, _trunks(("c1_1", "c2_1", "c2_2"), (50,)), "log_scaled", 0.1),
            samples={
                "alpha": SampleSpec("alpha", ((0.1, 1.0),), 10, "linear"),
                "beta": SampleSpec("beta", ((1.0, 124.0),), 650, "logarithmic"),
                "gamma": SampleSpec("gamma", ((23.0, 500.0),), 382, "logarithmic"),
            },
            weights=DEFAULT_WEIGHTS["inflation"],
            training=TrainConfig(),
            evaluation=EvaluationConfig(1000, "logarithmic"),
            matching=MatchingConfig(point=20.0),
        )
    if experiment in ("tunneling_real", "tunneling_imag"):
        real = experiment == "tunneling_real"
        labels = REAL_LABELS if real else IMAG_LABELS
        gamma = (-4.08, 4.03) if real else (-3.06, 5.04)
        delta = ((-13.14, -5.09), (4.03, 13.14)) if real else ((-13.14, -5.09), (5.04, 13.14))
        return ExperimentConfig(
            experiment=experiment,
            physics=TunnelingParams(),
            arch=ArchSpec((100, 100, 100), 100, _trunks(labels, (100,)), "scaled", 13.14),
            samples={
                "alpha": SampleSpec("alpha", ((6.05, 13.14),), 140, "linear"),
                "beta": SampleSpec("beta", ((-13.14, 11.62),), 490, "linear"),
                "gamma": SampleSpec("gamma", (gamma,), 160, "linear"),
                "delta": SampleSpec("delta", delta, 340 if real else 320, "linear"),
            },
            weights=DEFAULT_WEIGHTS[experiment],
            training=TrainConfig(),
            evaluation=EvaluationConfig(527, "linear"),
            matching=MatchingConfig(point=-5.0),
            output=OutputConfig(partner_dir="../tunneling_imag" if real else "../tunneling_real"),
        )
    raise ConfigError("experiment", f"unknown experiment {experiment!r}; expected one of {list(EXPERIMENT_NAMES)}")


# parsing -------------------------------------------------------------------

def _check_keys(table: dict, allowed, path: str) -> None:
    if not isinstance(table, dict):
        raise ConfigError(path, "expected a table")
    for key in table:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(where, "unknown key")


def _override(dc, table: dict, path: str, checks: Optional[dict] = None):
    """Replace dataclass fields from ``table``; each check maps value -> error message or None."""
    names = [f.name for f in fields(dc)]
    _check_keys(table, names, path)
    updates = {}
    for key, value in table.items():
        current = getattr(dc, key)
        if isinstance(current, tuple) and isinstance(value, list):
            value = tuple(value)
        if isinstance(current, float) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if current is not None and not isinstance(value, type(current)):
            raise ConfigError(f"{path}.{key}", f"expected {type(current).__name__}, got {type(value).__name__}")
        msg = (checks or {}).get(key, lambda v: None)(value)
        if msg:
            raise ConfigError(f"{path}.{key}", msg)
        updates[key] = value
    try:
        return replace(dc, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _positive(v):
    return None if v > 0 else "must be positive"


def _nonneg(v):
    return None if v >= 0 else "must be nonnegative"


def _one_of(options):
    return lambda v: None if v in options else f"must be one of {list(options)}"


def _parse_arch(table: dict, base: ArchSpec, path: str) -> ArchSpec:
    keys = ("head_layers", "head_output_width", "trunks", "input_transform", "x_ref", "activation")
    _check_keys(table, keys, path)
    d = base.to_dict()
    for key, value in table.items():
        d[key] = value
    for i, w in enumerate(d["head_layers"]):
        if not isinstance(w, int) or w <= 0:
            raise ConfigError(f"{path}.head_layers[{i}]", "widths must be positive integers")
    if not isinstance(d["head_output_width"], int) or d["head_output_width"] <= 0:
        raise ConfigError(f"{path}.head_output_width", "must be a positive integer")
    if d["input_transform"] not in TRANSFORMS:
        raise ConfigError(f"{path}.input_transform", f"must be one of {list(TRANSFORMS)}")
    if d["activation"] not in ACTIVATIONS:
        raise ConfigError(f"{path}.activation", f"must be one of {list(ACTIVATIONS)}")
    if not isinstance(d["x_ref"], (int, float)) or not d["x_ref"] > 0:
        raise ConfigError(f"{path}.x_ref", "must be positive")
    trunks = []
    for i, t in enumerate(d["trunks"]):
        tp = f"{path}.trunks[{i}]"
        _check_keys(t, ("label", "hidden"), tp)
        if "label" not in t:
            raise ConfigError(f"{tp}.label", "missing")
        hidden = t.get("hidden", [])
        if any(not isinstance(w, int) or w <= 0 for w in hidden):
            raise ConfigError(f"{tp}.hidden", "widths must be positive integers")
        trunks.append(TrunkSpec(t["label"], hidden))
    labels = [t.label for t in trunks]
    if sorted(labels) != sorted(base.labels):
        raise ConfigError(f"{path}.trunks", f"labels {labels} must be {list(base.labels)}")
    try:
        return ArchSpec(
            head_layers=d["head_layers"],
            head_output_width=d["head_output_width"],
            trunks=tuple(trunks),
            input_transform=d["input_transform"],
            x_ref=float(d["x_ref"]),
            activation=d["activation"],
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_samples(table: dict, base: Dict[str, SampleSpec], path: str) -> Dict[str, SampleSpec]:
    _check_keys(table, base.keys(), path)
    out = dict(base)
    for label, spec in table.items():
        sp = f"{path}.{label}"
        _check_keys(spec, ("intervals", "count", "spacing"), sp)
        cur = base[label]
        intervals = spec.get("intervals", [list(iv) for iv in cur.intervals])
        for i, iv in enumerate(intervals):
            if not isinstance(iv, list) or len(iv) != 2 or not iv[1] > iv[0]:
                raise ConfigError(f"{sp}.intervals[{i}]", "expected [lo, hi] with hi > lo")
        count = spec.get("count", cur.count)
        if not isinstance(count, int) or count < 2 * len(intervals):
            raise ConfigError(f"{sp}.count", "need at least two points per interval")
        spacing = spec.get("spacing", cur.spacing)
        if spacing not in SPACINGS:
            raise ConfigError(f"{sp}.spacing", f"must be one of {list(SPACINGS)}")
        if spacing == "logarithmic" and any(iv[0] <= 0 for iv in intervals):
            raise ConfigError(f"{sp}.intervals", "logarithmic spacing needs positive bounds")
        out[label] = SampleSpec(label, tuple(tuple(iv) for iv in intervals), count, spacing)
    return out


TOP_KEYS = ("experiment", "physics", "architecture", "samples", "weights", "training", "oracle", "evaluation", "matching", "output")

TRAIN_CHECKS = {
    "max_steps": _nonneg,
    "learning_rate": _positive,
    "lr_decay": lambda v: None if 0 < v <= 1 else "must lie in (0, 1]",
    "optimizer": _one_of(("adam", "sgd")),
    "seed": _nonneg,
    "log_every": _positive,
    "convergence_window": _positive,
    "convergence_threshold": _nonneg,
    "beta1": lambda v: None if 0 <= v < 1 else "must lie in [0, 1)",
    "beta2": lambda v: None if 0 <= v < 1 else "must lie in [0, 1)",
    "eps": _positive,
    "sweep_steps": _nonneg,
}


def config_from_dict(raw: dict, source: Optional[str] = None) -> ExperimentConfig:
    raw = copy.deepcopy(raw)
    _check_keys(raw, TOP_KEYS, "")
    if "experiment" not in raw:
        raise ConfigError("experiment", "missing")
    name = raw["experiment"]
    if name not in EXPERIMENT_NAMES:
        raise ConfigError("experiment", f"must be one of {list(EXPERIMENT_NAMES)}")
    cfg = default_config(name)

    physics = _override(cfg.physics, raw.get("physics", {}), "physics")
    weights = _override(cfg.weights, raw.get("weights", {}), "weights", {k: _nonneg for k in ("lambda_a", "lambda_b", "lambda_c", "lambda_d")})
    training = _override(cfg.training, raw.get("training", {}), "training", TRAIN_CHECKS)
    oracle = _override(cfg.oracle, raw.get("oracle", {}), "oracle", {"rel_tol": _positive, "abs_tol": _positive})
    evaluation = _override(
        cfg.evaluation, raw.get("evaluation", {}), "evaluation",
        {"points": lambda v: None if v >= 2 else "must be at least 2", "spacing": _one_of(SPACINGS)},
    )
    matching = _override(
        cfg.matching, raw.get("matching", {}), "matching",
        {"spread": _nonneg, "sweep_points": _positive, "mode": _one_of(("oracle", "exponential"))},
    )
    output = _override(cfg.output, raw.get("output", {}), "output")
    arch = _parse_arch(raw.get("architecture", {}), cfg.arch, "architecture")
    samples = _parse_samples(raw.get("samples", {}), cfg.samples, "samples")
    return ExperimentConfig(
        experiment=name,
        physics=physics,
        arch=arch,
        samples=samples,
        weights=weights,
        training=training,
        oracle=oracle,
        evaluation=evaluation,
        matching=matching,
        output=output,
        source=source,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"not valid TOML ({exc})") from exc
    return config_from_dict(raw, source=str(path))


def bundled_config_path(name: str) -> Path:
    ref = resources.files("gluenn") / "configs" / f"{name}.toml"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return Path(str(ref))


def resolve_config(spec: str) -> ExperimentConfig:
    """A file path, or the name of a bundled config."""
    p = Path(spec)
    if p.is_file():
        return load_config(p)
    if p.suffix == "" and spec in EXPERIMENT_NAMES:
        return load_config(bundled_config_path(spec))
    raise FileNotFoundError(f"config {spec} not found")
