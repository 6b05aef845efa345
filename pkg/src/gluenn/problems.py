"""Benchmark problems: differential operators, patch forms and ansatz assembly.

Residual functions accept plain arrays or tape nodes for the solution
values and plain arrays for the independent variable. Ansatz functions
take a coefficient bundle (label -> :class:`Jet`) and return an
:class:`AnsatzValue` whose ``y`` is the left-to-right sum of its terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .autodiff import Jet, Var


class AnsatzOverflow(FloatingPointError):
    pass


@dataclass(frozen=True)
class ChemicalParams:
    eta: float = 1.0e4
    domain: Tuple[float, float] = (1.0, 31.0)

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class InflationParams:
    H: float = 150.0
    k: float = 2.0
    m: float = 0.10
    a_star: float = 0.10
    domain: Tuple[float, float] = (0.1, 500.0)

    @property
    def a_transition(self) -> float:
        return self.k / self.m


@dataclass(frozen=True)
class TunnelingParams:
    sigma: float = 0.5
    d: float = 10.0
    V0: float = 4.1
    k: float = 2.0
    m: float = 0.5
    hbar: float = 1.0
    epsilon_reg: float = 1.0
    domain: Tuple[float, float] = (-13.14, 13.14)

    def __post_init__(self):
        if not self.energy < self.V0:
            raise ValueError("tunneling setup needs E < V0")

    @property
    def energy(self) -> float:
        return self.hbar**2 * self.k**2 / (2.0 * self.m)

    @property
    def kappa(self) -> float:
        return float(np.sqrt(2.0 * self.m * (self.V0 - self.energy)) / self.hbar)


@dataclass
class AnsatzValue:
    """Ansatz y with derivatives plus its labelled additive terms."""

    y: Jet
    terms: Dict[str, Jet] = field(default_factory=dict)

    @property
    def dy(self):
        return self.y.d1

    @property
    def d2y(self):
        return self.y.d2


def _raw(v):
    return v.value if isinstance(v, Var) else v


def _sum_terms(terms: Dict[str, Jet]) -> Jet:
    it = iter(terms.values())
    total = next(it)
    for t in it:
        total = total + t
    return total


def _guarded_exp(c: Jet, label: str) -> Jet:
    out = c.exp()
    if not np.all(np.isfinite(_raw(out.value))):
        raise AnsatzOverflow(f"exp overflow in coefficient {label}")
    return out


# chemical freeze-out ------------------------------------------------------

def equilibrium_yield(x):
    x = np.asarray(x, dtype=np.float64)
    return 0.145 * x**1.5 * np.exp(-x)


def equilibrium_yield_slope(x):
    return equilibrium_yield(x) * (1.5 / np.asarray(x, dtype=np.float64) - 1.0)


def freeze_out_residual(y, dy, x, p: ChemicalParams):
    x = np.asarray(x, dtype=np.float64)
    yeq = equilibrium_yield(x)
    return dy + (p.eta / (x * x)) * (y * y - yeq * yeq)


def chemical_ansatz(c: Dict[str, Jet], x) -> AnsatzValue:
    xj = Jet.seed(x)
    shape = xj**1.5 * (-xj).exp()
    terms = {
        "c1_1": _guarded_exp(c["c1_1"], "c1_1") * shape,
        "c2_1": _guarded_exp(c["c2_1"], "c2_1"),
    }
    return AnsatzValue(_sum_terms(terms), terms)


# inflationary vector mode -------------------------------------------------

def mode_brace(a, p: InflationParams):
    a = np.asarray(a, dtype=np.float64)
    k2, m2, H2 = p.k**2, p.m**2, p.H**2
    a2 = a * a
    q = k2 + m2 * a2
    return k2 / (H2 * a2 * a2) + m2 / (H2 * a2) - (k2 / q) * (2.0 / a2 - 3.0 * m2 / q)


def vector_mode_residual(X, dX, d2X, a, p: InflationParams):
    a = np.asarray(a, dtype=np.float64)
    return d2X + (2.0 / a) * dX + mode_brace(a, p) * X


def inflation_ansatz(c: Dict[str, Jet], a, p: InflationParams) -> AnsatzValue:
    aj = Jet.seed(a)
    terms = {
        "c1_1": _guarded_exp(c["c1_1"], "c1_1") * (aj / p.a_star),
        "c2_1": _guarded_exp(c["c2_1"], "c2_1"),
        "c2_2": _guarded_exp(c["c2_2"], "c2_2") * (p.a_star / aj),
    }
    return AnsatzValue(_sum_terms(terms), terms)


# quantum tunnelling ---------------------------------------------------------

def barrier_potential(x, p: TunnelingParams):
    x = np.asarray(x, dtype=np.float64)
    half = 0.5 * p.d
    return p.V0 * (expit((x + half) / p.sigma) + expit(-(x - half) / p.sigma) - 1.0)


def schrodinger_residual(psi, d2psi, x, p: TunnelingParams):
    x = np.asarray(x, dtype=np.float64)
    return (-(p.hbar**2) / (2.0 * p.m)) * d2psi + (barrier_potential(x, p) - p.energy) * psi


REAL_LABELS = ("c1_1", "c1_2", "c2_1", "c2_2")
IMAG_LABELS = ("c3_1", "c3_2", "c4_1", "c4_2")


def tunneling_basis(x, p: TunnelingParams) -> Tuple[Jet, Jet, Jet, Jet]:
    """cos kx, sin kx, e^{kappa x}, e^{-kappa x} as jets in x."""
    xj = Jet.seed(x)
    kx = xj * p.k
    kap = xj * p.kappa
    return kx.cos(), kx.sin(), kap.exp(), (-kap).exp()


def tunneling_ansatz(c: Dict[str, Jet], x, p: TunnelingParams, labels: Optional[Sequence[str]] = None) -> AnsatzValue:
    """One real component of psi; coefficients are signed (not exponentiated)."""
    if labels is None:
        labels = REAL_LABELS if "c1_1" in c else IMAG_LABELS
    basis = tunneling_basis(x, p)
    grow = _raw(basis[2].value)
    if not np.all(np.isfinite(grow)):
        raise AnsatzOverflow("exp(kappa x) overflow in tunnelling basis")
    terms = {lab: c[lab] * b for lab, b in zip(labels, basis)}
    return AnsatzValue(_sum_terms(terms), terms)


# experiment registry ----------------------------------------------------------

@dataclass
class Experiment:
    """Everything the loss needs to know about one benchmark."""

    name: str
    params: object
    labels: tuple
    ansatz: Callable
    residual: Callable
    normalizer: Optional[Callable]
    patch_terms: tuple
    required_sets: tuple

    def residual_of(self, av: AnsatzValue, x):
        return self.residual(av, x)


def make_experiment(name: str, params=None) -> Experiment:
    if name == "chemical":
        p = params or ChemicalParams()
        return Experiment(
            name=name,
            params=p,
            labels=("c1_1", "c2_1"),
            ansatz=lambda c, x: chemical_ansatz(c, x),
            residual=lambda av, x: freeze_out_residual(av.y.value, av.dy, x, p),
            normalizer=lambda av: av.y.value,
            patch_terms=(),
            required_sets=("alpha", "beta"),
        )
    if name == "inflation":
        p = params or InflationParams()
        return Experiment(
            name=name,
            params=p,
            labels=("c1_1", "c2_1", "c2_2"),
            ansatz=lambda c, a: inflation_ansatz(c, a, p),
            residual=lambda av, a: vector_mode_residual(av.y.value, av.dy, av.d2y, a, p),
            normalizer=None,
            patch_terms=(("gamma", ("c1_1",)),),
            required_sets=("alpha", "beta", "gamma"),
        )
    if name in ("tunneling_real", "tunneling_imag"):
        p = params or TunnelingParams()
        labels = REAL_LABELS if name == "tunneling_real" else IMAG_LABELS
        return Experiment(
            name=name,
            params=p,
            labels=labels,
            ansatz=lambda c, x: tunneling_ansatz(c, x, p, labels),
            residual=lambda av, x: schrodinger_residual(av.y.value, av.d2y, x, p),
            normalizer=lambda av: abs(av.y.value) + p.epsilon_reg,
            patch_terms=(("gamma", labels[:2]), ("delta", labels[2:])),
            required_sets=("alpha", "beta", "gamma", "delta"),
        )
    raise ValueError(f"unknown experiment {name!r}")


EXPERIMENT_NAMES = ("chemical", "inflation", "tunneling_real", "tunneling_imag")
