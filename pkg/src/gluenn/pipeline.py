"""Experiment stages writing artifacts into one output directory.

Each stage reads what earlier stages left behind, so the stages can run
as separate processes over the same directory.
"""
from __future__ import annotations

import datetime
import json
import logging
import platform
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .autodiff import kernels
from .config import ExperimentConfig, default_config, load_config
from .network import load_checkpoint, save_checkpoint
from .oracles import (
    chemical_target,
    inflation_amplitude,
    inflation_match_curve,
    match_c0_chemical,
    match_c1_inflation,
    match_c1_tunneling,
    oracle_chemical,
    oracle_inflation,
    oracle_tunneling,
    tunneling_target,
)
from .report import (
    MissingArtifact,
    compare_methods,
    evaluation_grid,
    physics_summary,
    relative_l2,
    report_contributions,
    tunneling_scattering,
    write_json,
    write_table_csv,
)
from .sampling import generate_samples, write_samples_csv
from .training import evaluate, train

log = logging.getLogger(__name__)

ARTIFACTS = ("samples.csv", "history.csv", "checkpoint.json", "evaluation.csv", "oracle.csv", "matching.json", "summary.json")


def _oracle_bundle(cfg: ExperimentConfig):
    """(solution, target function, observables) for the configured experiment."""
    tol = dict(rel_tol=cfg.oracle.rel_tol, abs_tol=cfg.oracle.abs_tol)
    p = cfg.physics
    if cfg.experiment == "chemical":
        sol = oracle_chemical(p, p.domain, **tol)
        return sol, chemical_target(sol), {"final_yield": float(sol(p.domain[1])[0])}
    if cfg.experiment == "inflation":
        sol = oracle_inflation(p, p.domain, **tol)
        target = lambda a: inflation_amplitude(sol, a)
        return sol, target, {"amplitude_end": float(target(p.domain[1])[0])}
    sol, scat = oracle_tunneling(p, p.domain, **tol)
    part = "real" if cfg.experiment == "tunneling_real" else "imag"
    return sol, tunneling_target(sol, part), scat.to_dict()


def _grid(cfg: ExperimentConfig) -> np.ndarray:
    return evaluation_grid(cfg.physics.domain, cfg.evaluation.points, cfg.evaluation.spacing)


def _oracle_columns(cfg: ExperimentConfig, sol, grid) -> dict:
    s = sol(grid)
    if cfg.experiment == "chemical":
        return {"x": grid, "y": s[:, 0], "dy": sol.derivative(grid)[:, 0]}
    cols = {"x": grid, "re": s[:, 0], "im": s[:, 1], "d_re": s[:, 2], "d_im": s[:, 3]}
    if cfg.experiment == "inflation":
        cols["amplitude"] = np.hypot(s[:, 0], s[:, 1])
    return cols


def write_metadata(out_dir: Path, cfg: ExperimentConfig, stage: str) -> None:
    """Run details that are allowed to change between runs live here, not in the payloads."""
    path = out_dir / "metadata.json"
    meta = json.loads(path.read_text()) if path.is_file() else {}
    meta.update(
        {
            "gluenn_version": __version__,
            "kernel_backend": kernels.BACKEND,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "config_source": cfg.source,
        }
    )
    meta.setdefault("stages", {})[stage] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    write_json(path, meta)


def stage_oracle(cfg: ExperimentConfig, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    sol, _, obs = _oracle_bundle(cfg)
    write_table_csv(out_dir / "oracle.csv", _oracle_columns(cfg, sol, _grid(cfg)))
    write_json(out_dir / "oracle.json", {"experiment": cfg.experiment, "observables": obs, "tolerances": {"rel_tol": cfg.oracle.rel_tol, "abs_tol": cfg.oracle.abs_tol}, "steps": sol.meta.get("steps")})
    write_metadata(out_dir, cfg, "oracle")
    return obs


def stage_train(cfg: ExperimentConfig, out_dir: Path, progress=None):
    out_dir.mkdir(parents=True, exist_ok=True)
    _, target, _ = _oracle_bundle(cfg)
    sets = {k: generate_samples(s) for k, s in cfg.samples.items()}
    write_samples_csv(out_dir / "samples.csv", sets.values())
    params, hist = train(cfg.training, cfg.arch, cfg.make_experiment(), sets, cfg.weights, target, progress=progress)
    hist.to_csv(out_dir / "history.csv")
    save_checkpoint(out_dir / "checkpoint.json", params)
    write_json(
        out_dir / "training.json",
        {
            "seed": cfg.training.seed,
            "steps": hist.steps[-1] if hist.steps else 0,
            "stopped": hist.stopped,
            "best_total": hist.best[-1] if hist.best else None,
        },
    )
    write_metadata(out_dir, cfg, "train")
    return params, hist


def stage_match(cfg: ExperimentConfig, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    m = cfg.matching
    p = cfg.physics
    if cfg.experiment == "chemical":
        res = match_c0_chemical(m.point, m.spread, m.sweep_points)
    elif cfg.experiment == "inflation":
        res = match_c1_inflation(m.point, p, p.domain[0], p.domain[1], m.spread, m.sweep_points)
    else:
        res = match_c1_tunneling(m.point, p, m.mode, m.spread, m.sweep_points, cfg.oracle.rel_tol, cfg.oracle.abs_tol)
    payload = {"experiment": cfg.experiment, **res.to_dict()}
    write_json(out_dir / "matching.json", payload)
    write_metadata(out_dir, cfg, "match")
    return res


def _require(path: Path) -> Path:
    if not path.is_file():
        raise MissingArtifact(f"missing artifact {path}")
    return path


def stage_report(cfg: ExperimentConfig, out_dir: Path) -> dict:
    experiment = cfg.make_experiment()
    params = load_checkpoint(_require(out_dir / "checkpoint.json"), cfg.arch)
    matching = json.loads(_require(out_dir / "matching.json").read_text())
    sol, target, oracle_obs = _oracle_bundle(cfg)
    grid = _grid(cfg)

    table = evaluate(params, cfg.arch, experiment, grid)
    table["target"] = target(grid)
    shares = report_contributions(params, cfg.arch, experiment, grid)
    table.update({k: v for k, v in shares.items() if k != "x"})
    write_table_csv(out_dir / "evaluation.csv", table)

    extra = {}
    p = cfg.physics
    if cfg.experiment == "chemical":
        c2 = evaluate(params, cfg.arch, experiment, np.array([p.domain[1]]))["c2_1"][0]
        gluenn = {"final_yield": float(np.exp(c2))}
        summary = physics_summary(cfg.experiment, oracle_obs, gluenn, matching["central"], matching["band"])
    elif cfg.experiment == "inflation":
        h = target(grid)
        curve = inflation_match_curve(matching["matching_points"][0], p, p.domain[0])
        gl = {"relative_l2_error": relative_l2(table["y"], h), "amplitude_end": float(table["y"][-1])}
        mt = {"relative_l2_error": relative_l2(curve(grid), h), **matching["central"]}
        late = grid > 200
        early = grid < 0.3
        extra["patch_dominance"] = {
            "c1_1_share_max_late": float(np.max(np.abs(shares["share_c1_1"][late]))),
            "c2_share_max_early": float(np.max(np.abs(shares["share_c2_1"][early] + shares["share_c2_2"][early]))),
        }
        summary = physics_summary(cfg.experiment, oracle_obs, gl, mt, matching["band"], extra)
    else:
        gluenn = None
        partner_dir = cfg.partner_output_dir(out_dir)
        partner_ckpt = partner_dir / "checkpoint.json" if partner_dir else None
        if partner_ckpt is not None and partner_ckpt.is_file():
            partner_cfg = _partner_config(cfg)
            partner = load_checkpoint(partner_ckpt, partner_cfg.arch)
            partner_exp = partner_cfg.make_experiment()
            if cfg.experiment == "tunneling_real":
                scat = tunneling_scattering(params, partner, experiment, partner_exp)
            else:
                scat = tunneling_scattering(partner, params, partner_exp, experiment)
            gluenn = scat.to_dict()
        else:
            extra["note"] = "partner checkpoint not found; scattering needs both components"
        summary = physics_summary(cfg.experiment, oracle_obs, gluenn, matching["central"], matching["band"], extra)
    write_json(out_dir / "summary.json", summary)
    write_metadata(out_dir, cfg, "report")
    return summary


def _partner_config(cfg: ExperimentConfig) -> ExperimentConfig:
    """Partner component config: a sibling file named after it, or the defaults."""
    other = "tunneling_imag" if cfg.experiment == "tunneling_real" else "tunneling_real"
    if cfg.source:
        sibling = Path(cfg.source).with_name(f"{other}.toml")
        if sibling.is_file():
            return load_config(sibling)
    return default_config(other)


def stage_compare(out_dir: Path) -> dict:
    table = compare_methods(out_dir)
    write_json(out_dir / "comparison.json", table)
    return table


def run_experiment(cfg: ExperimentConfig, out_dir: Path, progress=None) -> dict:
    stage_oracle(cfg, out_dir)
    stage_train(cfg, out_dir, progress)
    stage_match(cfg, out_dir)
    summary = stage_report(cfg, out_dir)
    stage_compare(out_dir)
    return summary
