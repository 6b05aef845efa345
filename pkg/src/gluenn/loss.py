"""Composite GlueNN loss: data mismatch + normalized residual + out-of-patch penalties."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from .autodiff import Jet, Tape, Var
from .network import ArchSpec, NetworkParams, forward_jets
from .problems import Experiment
from .sampling import SampleSet

PATCH_WEIGHT = {"gamma": "lambda_c", "delta": "lambda_d"}


class NonFiniteLoss(FloatingPointError):
    pass


@dataclass(frozen=True)
class LossWeights:
    lambda_a: float = 1.0
    lambda_b: float = 1.0
    lambda_c: float = 0.0
    lambda_d: float = 0.0

    def __post_init__(self):
        for name in ("lambda_a", "lambda_b", "lambda_c", "lambda_d"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")

    def scaled(self, **factors) -> "LossWeights":
        d = {k: getattr(self, k) * factors.get(k, 1.0) for k in ("lambda_a", "lambda_b", "lambda_c", "lambda_d")}
        return LossWeights(**d)


DEFAULT_WEIGHTS = {
    "chemical": LossWeights(1600.0, 700.0),
    "inflation": LossWeights(800.0, 0.50, 0.0032),
    "tunneling_real": LossWeights(1.0, 3.0, 0.25, 0.25),
    "tunneling_imag": LossWeights(1.0, 3.0, 0.25, 0.25),
}


@dataclass
class LossBreakdown:
    """Loss terms; entries are tape nodes while recording, floats afterwards."""

    total: Union[float, Var]
    data: Union[float, Var]
    residual: Union[float, Var]
    patch: List[Union[float, Var]] = field(default_factory=list)

    def floats(self) -> "LossBreakdown":
        f = lambda v: float(v.value) if isinstance(v, Var) else float(v)
        return LossBreakdown(f(self.total), f(self.data), f(self.residual), [f(p) for p in self.patch])


def _raw(v):
    return v.value if isinstance(v, Var) else v


def _check(values, xs, where: str) -> None:
    v = np.asarray(_raw(values))
    bad = ~np.isfinite(v)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteLoss(f"non-finite {where} at x = {float(xs[i])!r}")


class LossProblem:
    """Precomputed collocation data for one experiment.

    Residual points go through the network with input derivatives; all
    other points share one value-only pass. Each term then picks its own
    points out of those unions.
    """

    def __init__(
        self,
        experiment: Experiment,
        arch: ArchSpec,
        sets: Dict[str, SampleSet],
        weights: LossWeights,
        truth: Union[Callable, np.ndarray],
    ):
        missing = [s for s in experiment.required_sets if s not in sets]
        if missing:
            raise KeyError(f"experiment {experiment.name} needs sample sets {missing}")
        if set(arch.labels) != set(experiment.labels):
            raise ValueError(f"trunk labels {arch.labels} do not match ansatz slots {experiment.labels}")
        self.experiment = experiment
        self.arch = arch
        self.weights = weights
        self.sets = {k: sets[k] for k in experiment.required_sets}
        self.deriv_points = self.sets["beta"].points
        rest = [k for k in self.sets if k != "beta"]
        allpts = np.concatenate([self.sets[k].points for k in rest])
        self.value_points, inverse = np.unique(allpts, return_inverse=True)
        self.index = {}
        pos = 0
        for k in rest:
            n = len(self.sets[k].points)
            self.index[k] = inverse[pos : pos + n]
            pos += n
        xa = self.sets["alpha"].points
        if len(xa) == 0:
            raise ValueError("the data set is empty")
        self.target = np.asarray(truth(xa) if callable(truth) else truth, dtype=np.float64)
        if self.target.shape != xa.shape:
            raise ValueError("target values do not cover the data set")

    @property
    def data_span(self):
        xa = self.sets["alpha"].points
        return float(xa.min()), float(xa.max())

    @property
    def span(self):
        pts = np.concatenate([s.points for s in self.sets.values()])
        return float(pts.min()), float(pts.max())

    def restricted(self, lo: float, hi: float) -> "LossProblem":
        """The same loss with every collocation set cut to [lo, hi]; the data set stays whole."""
        sets = {}
        for k, s in self.sets.items():
            if k == "alpha":
                sets[k] = s
            else:
                keep = s.points[(s.points >= lo) & (s.points <= hi)]
                sets[k] = replace(s, count=len(keep), points=keep)
        return LossProblem(self.experiment, self.arch, sets, self.weights, self.target)

    def record(self, params: Union[NetworkParams, np.ndarray], tape: Optional[Tape] = None) -> LossBreakdown:
        flat = params.flat if isinstance(params, NetworkParams) else np.asarray(params, dtype=np.float64)
        tape = tape or Tape()
        tape.param(flat)
        with_derivs = forward_jets(flat, self.arch, self.deriv_points, tape, order=2) if len(self.deriv_points) else None
        values = forward_jets(flat, self.arch, self.value_points, tape, order=0)
        exp, w = self.experiment, self.weights

        def at(label):
            x = self.sets[label].points
            if label == "beta":
                return exp.ansatz(with_derivs, x), x
            idx = self.index[label]
            sub = {k: Jet(j.value[idx], 0.0, 0.0) for k, j in values.items()}
            return exp.ansatz(sub, x), x

        av, xa = at("alpha")
        diff = av.y.value - self.target
        _check(diff, xa, "data mismatch")
        data = (diff * diff).sum() * (w.lambda_a / len(xa))

        # empty collocation sets (possible in a restricted problem) contribute zero
        residual = 0.0
        if len(self.deriv_points):
            av, xb = at("beta")
            r = exp.residual(av, xb)
            if exp.normalizer is not None:
                r = r / exp.normalizer(av)
            _check(r, xb, "residual")
            residual = (r * r).sum() * (w.lambda_b / len(xb))

        patches = []
        for set_label, term_labels in exp.patch_terms:
            if len(self.sets[set_label].points) == 0:
                patches.append(0.0)
                continue
            av, xp = at(set_label)
            part = av.terms[term_labels[0]].value
            for lab in term_labels[1:]:
                part = part + av.terms[lab].value
            _check(part, xp, f"patch term on {set_label}")
            lam = getattr(w, PATCH_WEIGHT[set_label])
            patches.append((part * part).sum() * (lam / len(xp)))

        total = data + residual
        for p in patches:
            total = total + p
        if not np.isfinite(_raw(total)):
            raise NonFiniteLoss("non-finite total loss")
        return LossBreakdown(total, data, residual, patches)


def composite_loss(
    params,
    arch: ArchSpec,
    experiment: Experiment,
    sets: Dict[str, SampleSet],
    weights: LossWeights,
    truth,
    tape: Optional[Tape] = None,
) -> LossBreakdown:
    """Record the full loss on a tape; ``grad_params(result.total, params)`` differentiates it."""
    return LossProblem(experiment, arch, sets, weights, truth).record(params, tape)
