"""Ground-truth integrators, classical matching baselines and scattering observables."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .problems import (
    ChemicalParams,
    InflationParams,
    TunnelingParams,
    barrier_potential,
    equilibrium_yield,
    mode_brace,
)


class IntegrationError(RuntimeError):
    pass


class StiffnessError(IntegrationError):
    def __init__(self, msg: str):
        super().__init__(f"{msg}; the problem looks stiff, retry with method='stiff'")


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


# Dormand-Prince continuous extension (order 4)
_D = np.array(
    [
        -12715105075 / 11282082432,
        0.0,
        87487479700 / 32700410799,
        -10690763975 / 1880347072,
        701980252875 / 199316789632,
        -1453857185 / 822651844,
        69997945 / 29380423,
    ]
)


@dataclass
class OracleSolution:
    """Accepted integrator nodes with a dense evaluator.

    ``dense(tq) -> states`` interpolates between nodes; when omitted a cubic
    Hermite interpolant through the nodes and slopes is used. Derivatives
    come from the right-hand side at the interpolated state when ``rhs`` is
    known, so they satisfy the equation as well as the states do.
    """

    t: np.ndarray
    y: np.ndarray  # (n_nodes, dim)
    f: np.ndarray  # dy/dt at the nodes
    rel_tol: float
    abs_tol: float
    meta: dict = field(default_factory=dict)
    dense: Optional[Callable] = field(default=None, repr=False)
    rhs: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.t[0] > self.t[-1]:
            self.t, self.y, self.f = self.t[::-1].copy(), self.y[::-1].copy(), self.f[::-1].copy()

    @property
    def span(self) -> Tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def _locate(self, tq):
        tq = np.atleast_1d(np.asarray(tq, dtype=np.float64))
        lo, hi = self.t[0], self.t[-1]
        if np.any(tq < lo) or np.any(tq > hi):
            raise ValueError(f"dense evaluation outside [{lo}, {hi}]")
        i = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[i + 1] - self.t[i]
        s = (tq - self.t[i]) / h
        return tq, i, h, s

    def _nodes(self, tq, i):
        """Indices of query points sitting exactly on a node, and that node."""
        on_left = tq == self.t[i]
        on_right = tq == self.t[i + 1]
        node = np.where(on_right, i + 1, i)
        return on_left | on_right, node

    def _hermite(self, i, h, s):
        s2, s3 = s * s, s * s * s
        col = lambda a: a[:, None]
        return (
            col(2 * s3 - 3 * s2 + 1) * self.y[i]
            + col((s3 - 2 * s2 + s) * h) * self.f[i]
            + col(-2 * s3 + 3 * s2) * self.y[i + 1]
            + col((s3 - s2) * h) * self.f[i + 1]
        )

    def __call__(self, tq) -> np.ndarray:
        """State at ``tq``; shape (len(tq), dim), or (dim,) for scalar input."""
        scalar = np.ndim(tq) == 0
        tq, i, h, s = self._locate(tq)
        out = self.dense(tq) if self.dense is not None else self._hermite(i, h, s)
        hit, node = self._nodes(tq, i)
        out[hit] = self.y[node[hit]]
        return out[0] if scalar else out

    def derivative(self, tq) -> np.ndarray:
        scalar = np.ndim(tq) == 0
        tq, i, h, s = self._locate(tq)
        if self.rhs is not None:
            states = self(tq)
            out = np.array([np.asarray(self.rhs(t, y), dtype=np.float64) for t, y in zip(tq, states)])
        else:
            s2 = s * s
            col = lambda a: a[:, None]
            out = (
                col((6 * s2 - 6 * s) / h) * self.y[i]
                + col(3 * s2 - 4 * s + 1) * self.f[i]
                + col((-6 * s2 + 6 * s) / h) * self.y[i + 1]
                + col(3 * s2 - 2 * s) * self.f[i + 1]
            )
        hit, node = self._nodes(tq, i)
        out[hit] = self.f[node[hit]]
        return out[0] if scalar else out


class _DopriDense:
    """Piecewise quartic interpolant from the stored per-step coefficients."""

    def __init__(self, starts, steps, coeffs):
        order = np.argsort(np.minimum(starts, starts + steps))
        self.starts = starts[order]
        self.steps = steps[order]
        self.coeffs = coeffs[order]  # (n_steps, 5, dim)
        self.lefts = np.minimum(self.starts, self.starts + self.steps)

    def __call__(self, tq):
        j = np.clip(np.searchsorted(self.lefts, tq, side="right") - 1, 0, len(self.lefts) - 1)
        th = ((tq - self.starts[j]) / self.steps[j])[:, None]
        r = self.coeffs[j]
        one = 1.0 - th
        return r[:, 0] + th * (r[:, 1] + one * (r[:, 2] + th * (r[:, 3] + one * r[:, 4])))


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol, order=5):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = rhs(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def _dopri5(rhs, y0, t0, t1, rtol, atol, max_steps, detect_stiffness):
    direction = 1.0 if t1 >= t0 else -1.0
    t, y = float(t0), np.array(y0, dtype=np.float64)
    f = np.asarray(rhs(t, y), dtype=np.float64)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    starts, steps, coeffs = [], [], []
    span = abs(t1 - t0)
    h = min(_initial_step(rhs, t, y, f, direction, rtol, atol), span)
    k = np.empty((7, y.size))
    n_steps = 0
    n_stiff, n_nonstiff = 0, 0
    while direction * (t1 - t) > 0:
        if n_steps >= max_steps:
            raise StiffnessError(f"step budget of {max_steps} exhausted at t = {t:.6g}")
        h = min(h, abs(t1 - t))
        if h < 16 * np.spacing(abs(t)) + 1e-300:
            raise StiffnessError(f"step size underflow at t = {t:.6g}")
        hs = direction * h
        k[0] = f
        for s in range(1, 7):
            ys_ = y + hs * np.dot(_A[s], k[:s])
            k[s] = rhs(t + _C[s] * hs, ys_)
            if s == 5:
                y_stage6 = ys_
        y_new = ys_  # stage 7 input is the 5th-order solution (FSAL)
        err_vec = hs * np.dot(_E, k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2))
        n_steps += 1
        if err <= 1.0:
            if detect_stiffness:
                num = np.sum((k[6] - k[5]) ** 2)
                den = np.sum((y_new - y_stage6) ** 2)
                if den > 0 and h * np.sqrt(num / den) > 3.25:
                    n_nonstiff = 0
                    n_stiff += 1
                    if n_stiff == 15:
                        raise StiffnessError(f"stiffness detected at t = {t:.6g}")
                else:
                    n_nonstiff += 1
                    if n_nonstiff == 6:
                        n_stiff = 0
            ydiff = y_new - y
            bspl = hs * k[0] - ydiff
            coeffs.append(np.stack([y, ydiff, bspl, ydiff - hs * k[6] - bspl, hs * np.dot(_D, k)]))
            starts.append(t)
            t = t + hs
            if direction * (t - t1) > -1e-15 * max(1.0, abs(t1)):
                t = float(t1)
            steps.append(t - starts[-1])
            y, f = y_new, k[6].copy()
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            fac = 0.9 * err ** -0.2 if err > 0 else 10.0
            h *= min(10.0, max(0.2, fac))
        else:
            h *= max(0.2, 0.9 * err**-0.2)
    dense = _DopriDense(np.array(starts), np.array(steps), np.array(coeffs)) if coeffs else None
    return np.array(ts), np.array(ys), np.array(fs), n_steps, dense


def integrate_ode(
    rhs: Callable,
    y0,
    span: Sequence[float],
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    method: str = "explicit",
    jac: Optional[Callable] = None,
    max_steps: int = 200_000,
    detect_stiffness: bool = True,
) -> OracleSolution:
    """Adaptive integration of y' = rhs(t, y) over ``span``.

    ``method="explicit"`` is Dormand-Prince 5(4) with step rejection and
    stiffness detection; ``method="stiff"`` uses the A-stable Radau IIA
    scheme. Integration may run backwards (span[1] < span[0]).
    """
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    t0, t1 = float(span[0]), float(span[1])
    y0 = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    if method == "explicit":
        ts, ys, fs, n, dense = _dopri5(rhs, y0, t0, t1, rel_tol, abs_tol, max_steps, detect_stiffness)
    elif method == "stiff":
        sol = solve_ivp(rhs, (t0, t1), y0, method="Radau", rtol=rel_tol, atol=abs_tol, jac=jac, dense_output=True)
        if not sol.success:
            raise IntegrationError(f"stiff integration failed: {sol.message}")
        ts, ys = sol.t, sol.y.T
        fs = np.array([np.asarray(rhs(t, y), dtype=np.float64) for t, y in zip(ts, ys)])
        n = len(ts) - 1
        dense = lambda tq, interp=sol.sol: interp(tq).T
    else:
        raise ValueError(f"unknown method {method!r}")
    return OracleSolution(ts, ys, fs, rel_tol, abs_tol, {"method": method, "steps": int(n)}, dense, rhs)


# chemical freeze-out --------------------------------------------------------

def oracle_chemical(
    p: ChemicalParams = ChemicalParams(),
    span: Sequence[float] = (1.0, 31.0),
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-16,
) -> OracleSolution:
    eta = p.eta

    def rhs(x, y):
        yeq = equilibrium_yield(x)
        return -eta / (x * x) * (y * y - yeq * yeq)

    def jac(x, y):
        return np.array([[-2.0 * eta * y[0] / (x * x)]])

    x0 = float(span[0])
    sol = integrate_ode(rhs, [equilibrium_yield(x0)], span, rel_tol, abs_tol, method="stiff", jac=jac)
    sol.meta["experiment"] = "chemical"
    return sol


def chemical_target(sol: OracleSolution) -> Callable:
    return lambda x: sol(np.asarray(x, dtype=np.float64))[..., 0]


# inflationary vector mode -----------------------------------------------------

def hankel1_32(z):
    """H^{(1)}_{3/2}(z) and its z-derivative in closed form."""
    z = np.asarray(z, dtype=np.float64)
    pre = np.sqrt(2.0 / (np.pi * z))
    e = np.exp(1j * z)
    h = -pre * e * (1.0 + 1j / z)
    h12 = -1j * pre * e  # H^{(1)}_{1/2}
    dh = h12 - 1.5 / z * h
    return h, dh


def bessel_half(z):
    """(J_{-1/2}, J_{1/2}) and their z-derivatives in closed form."""
    z = np.asarray(z, dtype=np.float64)
    pre = np.sqrt(2.0 / (np.pi * z))
    c, s = np.cos(z), np.sin(z)
    jm, jp = pre * c, pre * s
    djm = -0.5 * jm / z - pre * s
    djp = -0.5 * jp / z + pre * c
    return jm, jp, djm, djp


def oracle_inflation(
    p: InflationParams = InflationParams(),
    span: Sequence[float] = (0.1, 500.0),
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> OracleSolution:
    """Complex mode as [Re X, Im X, Re X', Im X'], normalized so |X(a0)| = 1."""
    a0 = float(span[0])
    z0 = p.k / (a0 * p.H)
    h0, dh0 = hankel1_32(z0)
    x0 = complex(h0)
    dx0 = complex(dh0) * (-z0 / a0)
    norm = abs(x0)
    x0, dx0 = x0 / norm, dx0 / norm

    def rhs(a, s):
        b = mode_brace(a, p)
        return np.array([s[2], s[3], -2.0 / a * s[2] - b * s[0], -2.0 / a * s[3] - b * s[1]])

    sol = integrate_ode(rhs, [x0.real, x0.imag, dx0.real, dx0.imag], span, rel_tol, abs_tol)
    sol.meta.update(experiment="inflation", gauge="|X(a0)| = 1", hankel_norm=norm)
    return sol


def inflation_amplitude(sol: OracleSolution, a) -> np.ndarray:
    s = sol(np.atleast_1d(a))
    return np.hypot(s[:, 0], s[:, 1])


# quantum tunnelling --------------------------------------------------------

@dataclass(frozen=True)
class ScatteringSummary:
    R2: float
    T2: float

    def to_dict(self) -> dict:
        return {"R2": self.R2, "T2": self.T2}


def plane_wave_amplitudes(psi: complex, dpsi: complex, x: float, k: float) -> Tuple[complex, complex]:
    """Decompose psi = A e^{ikx} + B e^{-ikx} from value and slope at x."""
    A = 0.5 * (psi + dpsi / (1j * k)) * np.exp(-1j * k * x)
    B = 0.5 * (psi - dpsi / (1j * k)) * np.exp(1j * k * x)
    return complex(A), complex(B)


def oracle_tunneling(
    p: TunnelingParams = TunnelingParams(),
    domain: Optional[Sequence[float]] = None,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> Tuple[OracleSolution, ScatteringSummary]:
    """Unit outgoing wave at x_max integrated back to x_min.

    State is [Re psi, Im psi, Re psi', Im psi'].
    """
    x_min, x_max = domain if domain is not None else p.domain
    k = p.k
    c = 2.0 * p.m / p.hbar**2

    def rhs(x, s):
        w = c * (barrier_potential(x, p) - p.energy)
        return np.array([s[2], s[3], w * s[0], w * s[1]])

    psi0 = np.exp(1j * k * x_max)
    dpsi0 = 1j * k * psi0
    sol = integrate_ode(rhs, [psi0.real, psi0.imag, dpsi0.real, dpsi0.imag], (x_max, x_min), rel_tol, abs_tol)
    s = sol(x_min)
    A, B = plane_wave_amplitudes(complex(s[0], s[1]), complex(s[2], s[3]), x_min, k)
    summary = ScatteringSummary(R2=abs(B / A) ** 2, T2=1.0 / abs(A) ** 2)
    sol.meta.update(experiment="tunneling", A_left=[A.real, A.imag], B_left=[B.real, B.imag])
    return sol, summary


def tunneling_target(sol: OracleSolution, part: str) -> Callable:
    col = 0 if part == "real" else 1
    return lambda x: sol(np.asarray(x, dtype=np.float64))[..., col]


# matching baselines ------------------------------------------------------------

@dataclass
class MatchResult:
    coefficients: dict
    matching_points: list
    central: dict
    band: dict
    sweep: List[dict]
    curve: Optional[Callable] = field(default=None, repr=False, compare=False)
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coefficients,
            "matching_points": self.matching_points,
            "central": self.central,
            "band": {k: list(v) for k, v in self.band.items()},
            "sweep": self.sweep,
            "notes": self.notes,
        }


def sweep_points(center: float, spread: float = 0.2, n: int = 21) -> np.ndarray:
    lo, hi = center * (1 - spread), center * (1 + spread)
    return np.linspace(min(lo, hi), max(lo, hi), n)


def _band(sweep: List[dict], key: str) -> Tuple[float, float]:
    vals = [row[key] for row in sweep]
    return (float(min(vals)), float(max(vals)))


def match_c0_chemical(x_m: float = 7.8, spread: float = 0.2, n_sweep: int = 21) -> MatchResult:
    """Equilibrium up to x_m, then frozen at Y_eq(x_m)."""
    if not x_m > 0:
        raise ValueError("matching point must be positive")
    y_inf = float(equilibrium_yield(x_m))
    sweep = [{"x_m": float(xm), "final_yield": float(equilibrium_yield(xm))} for xm in sweep_points(x_m, spread, n_sweep)]

    def curve(x, x_m=x_m):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < x_m, equilibrium_yield(x), equilibrium_yield(x_m))

    return MatchResult(
        coefficients={"Y_inf": y_inf},
        matching_points=[float(x_m)],
        central={"final_yield": y_inf},
        band={"final_yield": _band(sweep, "final_yield")},
        sweep=sweep,
        curve=curve,
    )


def _inflation_c1(a_m: float, p: InflationParams, a0: float):
    z1 = p.k / (a_m * p.H)
    h, dh = hankel1_32(z1)
    norm = abs(complex(hankel1_32(p.k / (a0 * p.H))[0]))
    x1 = complex(h) / norm
    dx1 = complex(dh) * (-z1 / a_m) / norm
    z2 = p.k / (p.m * a_m)
    jm, jp, djm, djp = bessel_half(z2)
    dz = -z2 / a_m
    M = np.array([[jm, jp], [djm * dz, djp * dz]], dtype=np.complex128)
    wronskian = float((jm * djp - jp * djm) * dz)
    if abs(wronskian) < 1e-14:
        raise np.linalg.LinAlgError("singular matching system")
    c21, c22 = np.linalg.solve(M, np.array([x1, dx1]))
    return complex(c21), complex(c22), norm, wronskian


def inflation_patch1(a, p: InflationParams, norm: float):
    a = np.asarray(a, dtype=np.float64)
    z = p.k / (a * p.H)
    h, dh = hankel1_32(z)
    return h / norm, dh * (-z / a) / norm


def inflation_patch2(a, p: InflationParams, c21: complex, c22: complex):
    a = np.asarray(a, dtype=np.float64)
    z = p.k / (p.m * a)
    jm, jp, djm, djp = bessel_half(z)
    dz = -z / a
    return c21 * jm + c22 * jp, (c21 * djm + c22 * djp) * dz


def match_c1_inflation(
    a_m: Optional[float] = None,
    p: InflationParams = InflationParams(),
    a0: float = 0.1,
    a_end: float = 500.0,
    spread: float = 0.2,
    n_sweep: int = 21,
) -> MatchResult:
    """Value-and-slope matching of the vacuum Hankel branch onto J_{-1/2}, J_{1/2}."""
    if a_m is None:
        a_m = p.a_transition
    if not a_m > 0:
        raise ValueError("matching point must be positive")

    def one(am):
        c21, c22, norm, w = _inflation_c1(am, p, a0)
        amp_end = abs(complex(inflation_patch2(a_end, p, c21, c22)[0]))
        return c21, c22, norm, w, amp_end

    c21, c22, norm, w, amp_end = one(a_m)
    sweep = []
    for am in sweep_points(a_m, spread, n_sweep):
        s21, s22, _, _, s_end = one(am)
        sweep.append({"a_m": float(am), "amplitude_end": s_end})

    def curve(a, a_m=a_m, c21=c21, c22=c22):
        a = np.asarray(a, dtype=np.float64)
        left = np.abs(inflation_patch1(np.minimum(a, a_m), p, norm)[0])
        right = np.abs(inflation_patch2(np.maximum(a, a_m), p, c21, c22)[0])
        return np.where(a <= a_m, left, right)

    return MatchResult(
        coefficients={"c2_1": [c21.real, c21.imag], "c2_2": [c22.real, c22.imag], "wronskian": w},
        matching_points=[float(a_m)],
        central={"amplitude_end": amp_end},
        band={"amplitude_end": _band(sweep, "amplitude_end")},
        sweep=sweep,
        curve=curve,
    )


def inflation_match_curve(a_m: float, p: InflationParams, a0: float = 0.1) -> Callable:
    c21, c22, norm, _ = _inflation_c1(a_m, p, a0)

    def curve(a):
        a = np.asarray(a, dtype=np.float64)
        left = np.abs(inflation_patch1(np.minimum(a, a_m), p, norm)[0])
        right = np.abs(inflation_patch2(np.maximum(a, a_m), p, c21, c22)[0])
        return np.where(a <= a_m, left, right)

    return curve


def _exp_pair(x: float, kappa: float) -> np.ndarray:
    """Rows (value, slope) of e^{kappa x}, e^{-kappa x}."""
    ep, em = np.exp(kappa * x), np.exp(-kappa * x)
    return np.array([[ep, em], [kappa * ep, -kappa * em]], dtype=np.complex128)


def _wave_pair(x: float, k: float) -> np.ndarray:
    """Rows (value, slope) of e^{ikx}, e^{-ikx}."""
    ep, em = np.exp(1j * k * x), np.exp(-1j * k * x)
    return np.array([[ep, em], [1j * k * ep, -1j * k * em]], dtype=np.complex128)


def _piecewise_tunneling(x_left: float, x_right: float, p: TunnelingParams):
    """Unit transmitted wave glued C1 to barrier exponentials at x_right, then to waves at x_left."""
    k, kappa = p.k, p.kappa
    out = _wave_pair(x_right, k) @ np.array([1.0, 0.0])
    inner = np.linalg.solve(_exp_pair(x_right, kappa), out)
    at_left = _exp_pair(x_left, kappa) @ inner
    A, B = np.linalg.solve(_wave_pair(x_left, k), at_left)
    jumps = [
        float(np.max(np.abs(_exp_pair(x_right, kappa) @ inner - out))),
        float(np.max(np.abs(_wave_pair(x_left, k) @ np.array([A, B]) - at_left))),
    ]
    return complex(A), complex(B), inner, jumps


def match_c1_tunneling(
    x_left: Optional[float] = None,
    p: TunnelingParams = TunnelingParams(),
    mode: str = "oracle",
    spread: float = 0.2,
    n_sweep: int = 21,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> MatchResult:
    """Plane waves glued with value and slope continuity at ``x_left``.

    ``mode="oracle"`` glues the incident/reflected waves onto the exact
    solution at ``x_left``. ``mode="exponential"`` replaces the exact
    solution by the barrier exponentials, themselves glued to the unit
    transmitted wave at +d/2. The sweep moves only ``x_left``.
    """
    if mode not in ("oracle", "exponential"):
        raise ValueError(f"unknown matching mode {mode!r}")
    if x_left is None:
        x_left = -0.5 * p.d
    x_right = 0.5 * p.d
    sol = oracle_tunneling(p, rel_tol=rel_tol, abs_tol=abs_tol)[0] if mode == "oracle" else None

    def one(xl):
        if mode == "oracle":
            s = sol(xl)
            A, B = plane_wave_amplitudes(complex(s[0], s[1]), complex(s[2], s[3]), xl, p.k)
            jumps = [0.0]
        else:
            A, B, _, jumps = _piecewise_tunneling(xl, x_right, p)
        return A, B, {"R2": abs(B / A) ** 2, "T2": 1.0 / abs(A) ** 2}, jumps

    A, B, central, jumps = one(x_left)
    sweep = []
    for xl in sweep_points(x_left, spread, n_sweep):
        _, _, obs, _ = one(xl)
        sweep.append({"x_left": float(xl), **obs})
    points = [float(x_left)] if mode == "oracle" else [float(x_left), float(x_right)]
    return MatchResult(
        coefficients={"A_left": [A.real, A.imag], "B_left": [B.real, B.imag], "c1_jumps": jumps, "mode": mode},
        matching_points=points,
        central=central,
        band={"R2": _band(sweep, "R2"), "T2": _band(sweep, "T2")},
        sweep=sweep,
        notes="band varies the left matching point only",
    )


class ScatteringError(ValueError):
    pass


def oscillatory_amplitudes(c_cos: complex, c_sin: complex) -> Tuple[complex, complex]:
    """(A, B) with c_cos cos kx + c_sin sin kx = A e^{ikx} + B e^{-ikx}."""
    return 0.5 * (c_cos - 1j * c_sin), 0.5 * (c_cos + 1j * c_sin)


def oscillatory_coefficients(A: complex, B: complex) -> Tuple[complex, complex]:
    """Inverse of :func:`oscillatory_amplitudes`."""
    return A + B, 1j * (A - B)


def extract_scattering(
    left_real: Sequence[float],
    left_imag: Sequence[float],
    right_real: Sequence[float],
    right_imag: Sequence[float],
    contamination_limit: float = 0.01,
) -> ScatteringSummary:
    """R2 and T2 from the (cos, sin) coefficient pairs of the two networks.

    Each argument is the (cos, sin) coefficient pair of the real or the
    imaginary network, taken in the left or the right far field.
    """
    A_l, B_l = oscillatory_amplitudes(complex(left_real[0], left_imag[0]), complex(left_real[1], left_imag[1]))
    A_r, B_r = oscillatory_amplitudes(complex(right_real[0], right_imag[0]), complex(right_real[1], right_imag[1]))
    if A_l == 0 or A_r == 0:
        raise ScatteringError("vanishing incident or transmitted amplitude")
    contamination = abs(B_r / A_r) ** 2
    if contamination >= contamination_limit:
        raise ScatteringError(
            f"right far field carries an incoming wave with |B/A|^2 = {contamination:.3g}; "
            "the outgoing condition was not learned"
        )
    return ScatteringSummary(R2=abs(B_l / A_l) ** 2, T2=abs(A_r / A_l) ** 2)
