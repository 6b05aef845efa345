"""Deterministic full-batch training and model evaluation."""
from __future__ import annotations

import csv
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from .autodiff import grad_params
from .loss import LossBreakdown, LossProblem, LossWeights
from .network import ArchSpec, NetworkParams, build_network, forward_jets
from .problems import Experiment
from .sampling import SampleSet

log = logging.getLogger(__name__)


class TrainingDivergence(FloatingPointError):
    def __init__(self, step: int, breakdown: Optional[LossBreakdown], reason: str):
        self.step = step
        self.breakdown = breakdown
        super().__init__(f"training diverged at step {step}: {reason}")


@dataclass(frozen=True)
class TrainConfig:
    max_steps: int = 100_000
    learning_rate: float = 1e-3
    lr_decay: float = 0.9999
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    log_every: int = 100
    convergence_window: int = 5000
    convergence_threshold: float = 1e-4
    sweep_steps: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.max_steps < 0 or self.log_every < 1:
            raise ValueError("max_steps must be >= 0 and log_every >= 1")
        if self.sweep_steps < 0:
            raise ValueError("sweep_steps must be >= 0")


class Adam:
    def __init__(self, n: int, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray, lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        self.m *= b1
        self.m += (1.0 - b1) * grad
        self.v *= b2
        self.v += (1.0 - b2) * (grad * grad)
        mhat = self.m / (1.0 - b1**self.t)
        vhat = self.v / (1.0 - b2**self.t)
        params -= lr * mhat / (np.sqrt(vhat) + self.eps)


class SGD:
    def __init__(self, n: int, **_):
        pass

    def step(self, params: np.ndarray, grad: np.ndarray, lr: float) -> None:
        params -= lr * grad


@dataclass
class TrainHistory:
    steps: List[int] = field(default_factory=list)
    breakdowns: List[LossBreakdown] = field(default_factory=list)
    lrs: List[float] = field(default_factory=list)
    best: List[float] = field(default_factory=list)
    stopped: str = ""

    def append(self, step: int, bd: LossBreakdown, lr: float, best: float) -> None:
        self.steps.append(step)
        self.breakdowns.append(bd)
        self.lrs.append(lr)
        self.best.append(best)

    def totals(self) -> np.ndarray:
        return np.array([b.total for b in self.breakdowns])

    def to_csv(self, path) -> None:
        n_patch = max((len(b.patch) for b in self.breakdowns), default=0)
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "total", "data", "residual"] + [f"patch{i}" for i in range(n_patch)] + ["lr", "best_total"])
            for s, b, lr, best in zip(self.steps, self.breakdowns, self.lrs, self.best):
                row = [s, b.total, b.data, b.residual, *b.patch, lr, best]
                w.writerow([str(s)] + [f"{v:.17g}" for v in row[1:]])


class CollocationSweep:
    """Collocation points switched on outward from the data set.

    Over ``steps`` steps the active window grows linearly from the span of
    the data points to the span of all points, in 100 increments. Before
    it is complete each step sees a restricted copy of the loss, so the
    solution is carried outward from where the data pins it down.
    """

    increments = 100

    def __init__(self, problem: LossProblem, steps: int):
        self.problem = problem
        self.steps = steps
        self.data_lo, self.data_hi = problem.data_span
        self.lo, self.hi = problem.span
        self._level = None
        self._current = problem

    def done(self, step: int) -> bool:
        return step >= self.steps

    def at(self, step: int) -> LossProblem:
        if self.done(step):
            return self.problem
        level = step * self.increments // self.steps
        if level != self._level:
            f = level / self.increments
            lo = self.data_lo - f * (self.data_lo - self.lo)
            hi = self.data_hi + f * (self.hi - self.data_hi)
            self._current = self.problem.restricted(lo, hi)
            self._level = level
        return self._current


def train_problem(
    config: TrainConfig,
    problem: LossProblem,
    init: Optional[NetworkParams] = None,
    callback: Optional[Callable[[int, LossBreakdown], None]] = None,
):
    """Minimize a prepared loss; returns (best parameters, history).

    With ``config.sweep_steps > 0`` the collocation sets are switched on
    gradually (see :class:`CollocationSweep`). Losses on a partial window
    are not comparable with the full loss, so best-parameter tracking and
    the convergence window start once the sweep is over.
    """
    params = (init or build_network(problem.arch, config.seed)).copy()
    theta = params.flat
    opt_cls = Adam if config.optimizer == "adam" else SGD
    opt = opt_cls(theta.size, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    hist = TrainHistory()
    best_val, best_theta = np.inf, theta.copy()
    window = deque(maxlen=config.convergence_window + 1)
    lr = config.learning_rate
    sweep = CollocationSweep(problem, config.sweep_steps) if config.sweep_steps > 0 else None

    for step in range(config.max_steps + 1):
        full = sweep is None or sweep.done(step)
        current = problem if sweep is None else sweep.at(step)
        try:
            rec = current.record(theta)
        except FloatingPointError as exc:
            raise TrainingDivergence(step, None, str(exc)) from exc
        bd = rec.floats()
        if full and bd.total < best_val:
            best_val, best_theta = bd.total, theta.copy()
        if step % config.log_every == 0 or step == config.max_steps:
            hist.append(step, bd, lr, best_val)
            if callback is not None:
                callback(step, bd)
        if step == config.max_steps:
            hist.stopped = "max_steps"
            break
        if full:
            window.append(best_val)
            if len(window) == window.maxlen and window[0] > 0:
                if (window[0] - best_val) / window[0] < config.convergence_threshold:
                    if hist.steps[-1] != step:
                        hist.append(step, bd, lr, best_val)
                    hist.stopped = "converged"
                    break
        g = grad_params(rec.total, theta)
        if not np.all(np.isfinite(g)):
            raise TrainingDivergence(step, bd, "non-finite gradient")
        opt.step(theta, g, lr)
        lr *= config.lr_decay
    if not np.isfinite(best_val):
        best_theta = theta.copy()  # the run ended inside the sweep
    return NetworkParams(problem.arch, best_theta), hist


def train(
    config: TrainConfig,
    arch: ArchSpec,
    experiment: Experiment,
    sets: Dict[str, SampleSet],
    weights: LossWeights,
    truth,
    init: Optional[NetworkParams] = None,
    progress: Optional[Callable[[int, LossBreakdown], None]] = None,
):
    problem = LossProblem(experiment, arch, sets, weights, truth)
    return train_problem(config, problem, init, progress)


def evaluate(params: NetworkParams, arch: ArchSpec, experiment: Experiment, grid) -> Dict[str, np.ndarray]:
    """Per-point diagnostics: y, derivatives, terms, coefficients, residual."""
    x = np.asarray(grid, dtype=np.float64)
    coeffs = forward_jets(params, arch, x)
    av = experiment.ansatz(coeffs, x)
    table = {"x": x, "y": np.asarray(av.y.value), "dy": np.asarray(av.y.d1), "d2y": np.asarray(av.y.d2)}
    for lab, t in av.terms.items():
        table[f"term_{lab}"] = np.asarray(t.value)
    for lab in experiment.labels:
        c = coeffs[lab]
        table[lab] = np.asarray(c.value)
        table[f"d{lab}"] = np.asarray(c.d1)
        table[f"dd{lab}"] = np.asarray(c.d2)
    table["residual"] = np.asarray(experiment.residual(av, x))
    return table
