"""Exact derivative engine: forward jets in the input, reverse mode in parameters."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from . import kernels
from .jet import DualScalar2, Jet
from .tape import LayoutError, Tape, Var, affine_jet, tanh_jet

__all__ = [
    "DualScalar2",
    "Jet",
    "LayoutError",
    "Tape",
    "Var",
    "affine_jet",
    "tanh_jet",
    "grad_params",
    "finite_diff_check",
    "kernels",
]


def grad_params(loss: Var, params: np.ndarray) -> np.ndarray:
    """Gradient of a recorded scalar with respect to the flat parameters."""
    tape = loss.tape
    if tape.params is None:
        raise LayoutError("loss was not recorded over a parameter leaf")
    params = np.asarray(params)
    if params.shape != tape.params.value.shape:
        raise LayoutError(
            f"parameter vector has {params.size} entries, tape expects {tape.params.value.size}"
        )
    tape.backward(loss)
    grad = tape.param_grad.copy()
    if tape.params.grad is not None:
        grad += tape.params.grad
    return grad


def finite_diff_check(
    f: Callable,
    point,
    h: float = 1e-5,
    grad: Optional[np.ndarray] = None,
) -> float:
    """Max relative error between an analytic gradient and central differences.

    ``f`` maps a parameter vector to a scalar. When ``grad`` is omitted,
    ``f`` is replayed on a tape (it must then accept a :class:`Var`) and
    the analytic gradient is taken from reverse mode.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    p = np.atleast_1d(np.asarray(point, dtype=np.float64)).copy()
    if grad is None:
        tape = Tape()
        out = f(tape.param(p))
        grad = grad_params(out.reshape(()) if out.shape else out, p)
    grad = np.atleast_1d(np.asarray(grad, dtype=np.float64))
    worst = 0.0
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        fd = (_scalar(f(p + e)) - _scalar(f(p - e))) / (2.0 * h)
        err = abs(fd - grad[i]) / (abs(grad[i]) + 1e-12)
        worst = max(worst, err)
    return worst


def _scalar(v) -> float:
    return float(np.sum(getattr(v, "value", v)))
