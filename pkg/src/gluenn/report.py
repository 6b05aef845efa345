"""Observables, normalized term contributions and method comparison tables."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .network import ArchSpec, NetworkParams, forward_jets
from .oracles import ScatteringSummary, extract_scattering
from .problems import Experiment
from .training import evaluate


class MissingArtifact(FileNotFoundError):
    pass


def evaluation_grid(domain, points: int, spacing: str) -> np.ndarray:
    lo, hi = domain
    return np.geomspace(lo, hi, points) if spacing == "logarithmic" else np.linspace(lo, hi, points)


def relative_error(value: float, reference: float) -> float:
    return (value - reference) / reference


def relative_l2(values, reference) -> float:
    values, reference = np.asarray(values), np.asarray(reference)
    return float(np.sqrt(np.sum((values - reference) ** 2) / np.sum(reference**2)))


def report_contributions(params: NetworkParams, arch: ArchSpec, experiment: Experiment, grid) -> Dict[str, np.ndarray]:
    """Per-point share of each ansatz piece.

    Chemical and inflation terms are divided by y, so the shares sum to 1.
    For a tunneling component the oscillatory pair enters through the
    length of its coefficient vector and the exponential pair through the
    absolute sizes of the growing and decaying terms; both are divided by
    their sum.
    """
    x = np.asarray(grid, dtype=np.float64)
    table = evaluate(params, arch, experiment, x)
    out = {"x": x}
    if experiment.name in ("chemical", "inflation"):
        for lab in experiment.labels:
            out[f"share_{lab}"] = table[f"term_{lab}"] / table["y"]
        return out
    kappa = experiment.params.kappa
    l1, l2, l3, l4 = experiment.labels
    osc = np.hypot(table[l1], table[l2])
    exp_part = np.abs(table[l3]) * np.exp(kappa * x) + np.abs(table[l4]) * np.exp(-kappa * x)
    norm = osc + exp_part
    out["share_oscillatory"] = osc / norm
    out["share_exponential"] = exp_part / norm
    return out


def validity_patches(experiment: Experiment) -> Dict[str, list]:
    """Where each coefficient's patch form is meant to hold: label -> [(lo, hi, anchor)].

    ``anchor`` says which end of the interval is the far end of the patch
    ("lo", "hi"), or "center" for patches enclosed by other patches.
    """
    p = experiment.params
    if experiment.name == "chemical":
        x_m = 7.8
        lo, hi = p.domain
        return {"c1_1": [(lo, x_m, "lo")], "c2_1": [(x_m, hi, "hi")]}
    if experiment.name == "inflation":
        lo, hi = p.domain
        a_m = p.a_transition
        return {"c1_1": [(lo, a_m, "lo")], "c2_1": [(a_m, hi, "hi")], "c2_2": [(a_m, hi, "hi")]}
    lo, hi = p.domain
    half = 0.5 * p.d
    l1, l2, l3, l4 = experiment.labels
    outer = [(lo, -half, "lo"), (half, hi, "hi")]
    inner = [(-half, half, "center")]
    return {l1: outer, l2: outer, l3: inner, l4: inner}


def _outer_slice(lo: float, hi: float, anchor: str, log: bool, fraction: float, n: int) -> np.ndarray:
    if log:
        u0, u1 = np.log(lo), np.log(hi)
    else:
        u0, u1 = lo, hi
    width = fraction * (u1 - u0)
    if anchor == "lo":
        a, b = u0, u0 + width
    elif anchor == "hi":
        a, b = u1 - width, u1
    else:
        mid = 0.5 * (u0 + u1)
        a, b = mid - 0.5 * width, mid + 0.5 * width
    u = np.linspace(a, b, n)
    return np.exp(u) if log else u


def plateau_metrics(
    params: NetworkParams, arch: ArchSpec, experiment: Experiment, fraction: float = 0.1, n: int = 50
) -> Dict[str, float]:
    """Largest |lever * dc/dx| / (|c| + 1) on the far end of each coefficient's patch.

    The lever arm is x itself where the patch reaches the domain boundary
    and the patch half-width for enclosed patches.
    """
    log = arch.input_transform == "log_scaled"
    out = {}
    for lab, pieces in validity_patches(experiment).items():
        worst = 0.0
        for lo, hi, anchor in pieces:
            x = _outer_slice(lo, hi, anchor, log, fraction, n)
            c = forward_jets(params, arch, x)[lab]
            lever = np.abs(x) if anchor != "center" else 0.5 * (hi - lo)
            worst = max(worst, float(np.max(np.abs(lever * c.d1) / (np.abs(c.value) + 1.0))))
        out[lab] = worst
    return out


def far_field_pairs(params: NetworkParams, arch: ArchSpec, experiment: Experiment):
    """(cos, sin) coefficient pairs at the two domain ends."""
    lo, hi = experiment.params.domain
    coeffs = forward_jets(params, arch, np.array([lo, hi]))
    l1, l2 = experiment.labels[:2]
    c1, c2 = coeffs[l1].value, coeffs[l2].value
    return (float(c1[0]), float(c2[0])), (float(c1[1]), float(c2[1]))


def tunneling_scattering(real: NetworkParams, imag: NetworkParams, real_exp: Experiment, imag_exp: Experiment) -> ScatteringSummary:
    (lr, rr) = far_field_pairs(real, real.arch, real_exp)
    (li, ri) = far_field_pairs(imag, imag.arch, imag_exp)
    return extract_scattering(lr, li, rr, ri)


def _method_row(values: dict, oracle: dict, band: Optional[dict] = None) -> dict:
    row = dict(values)
    for key, v in values.items():
        if key in oracle and oracle[key] != 0:
            row[f"relative_error_{key}"] = relative_error(v, oracle[key])
    if band:
        row["band"] = {k: list(v) for k, v in band.items()}
    return row


def physics_summary(experiment: str, oracle: dict, gluenn: Optional[dict], matching: Optional[dict], matching_band: Optional[dict] = None, extra: Optional[dict] = None) -> dict:
    """Observables per method; relative errors are derived from the stored values."""
    methods = {"oracle": dict(oracle)}
    if gluenn is not None:
        methods["gluenn"] = _method_row(gluenn, oracle)
    if matching is not None:
        methods["matching"] = _method_row(matching, oracle, matching_band)
    out = {"experiment": experiment, "methods": methods}
    if extra:
        out.update(extra)
    return out


def compare_methods(out_dir) -> dict:
    """Method comparison table built from summary.json and matching.json."""
    out_dir = Path(out_dir)
    payload = {}
    for name in ("summary.json", "matching.json"):
        path = out_dir / name
        if not path.is_file():
            raise MissingArtifact(f"missing artifact {path}")
        payload[name] = json.loads(path.read_text())
    summary = payload["summary.json"]
    methods = summary["methods"]
    exp = summary["experiment"]
    verdicts = {}
    if exp == "chemical":
        lo, hi = methods["matching"]["band"]["final_yield"]
        ratio = hi / lo
        verdicts["matching_band_ratio"] = ratio
        verdicts["matching"] = "unstable" if ratio > 10 else "stable"
        if "gluenn" in methods:
            err = abs(methods["gluenn"]["relative_error_final_yield"])
            verdicts["gluenn"] = "robust" if err < 0.1 else "inaccurate"
    elif exp == "inflation":
        if "gluenn" in methods:
            g = methods["gluenn"]["relative_l2_error"]
            m = methods["matching"]["relative_l2_error"]
            verdicts["gluenn_beats_matching"] = bool(g < m)
    else:
        if "gluenn" in methods:
            o = methods["oracle"]["T2"]
            verdicts["gluenn_T2_closer_than_matching"] = bool(
                abs(methods["gluenn"]["T2"] - o) < abs(methods["matching"]["T2"] - o)
            )
    return {"experiment": exp, "methods": methods, "verdicts": verdicts}


def write_table_csv(path, table: Dict[str, np.ndarray]) -> None:
    keys = list(table)
    cols = [np.asarray(table[k], dtype=np.float64) for k in keys]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in zip(*cols):
            w.writerow([f"{v:.17g}" for v in row])


def read_table_csv(path) -> Dict[str, np.ndarray]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=np.float64)
    return {k: body[:, i] for i, k in enumerate(header)}


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
