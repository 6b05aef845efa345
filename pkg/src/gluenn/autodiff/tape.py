"""Reverse-mode taping over numpy arrays.

Every differentiable quantity is a :class:`Var` owned by a :class:`Tape`.
Nodes are appended in creation order, so replaying adjoints is a plain
reverse walk over ``tape.nodes``. Constants are ordinary arrays or floats
and never enter the tape.

The model parameters live in a single flat leaf (``Tape.params``); layers
read their weights through :meth:`Tape.param_slice`, which scatters
adjoints straight into the flat gradient buffer.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels


class LayoutError(ValueError):
    """Raised when a tape and a parameter vector disagree on layout."""


class Tape:
    def __init__(self) -> None:
        self.nodes: list[Var] = []
        self.params: Optional[Var] = None
        self.param_grad: Optional[np.ndarray] = None
        self._done = False

    def param(self, flat: np.ndarray) -> "Var":
        """Register the flat parameter vector as the tape's only leaf."""
        if self.params is not None:
            raise LayoutError("tape already has a parameter leaf")
        flat = np.asarray(flat, dtype=np.float64)
        if flat.ndim != 1:
            raise LayoutError("parameters must be a flat vector")
        leaf = Var(flat, self)
        self.params = leaf
        self.param_grad = np.zeros_like(flat)
        return leaf

    def param_slice(self, start: int, stop: int, shape: Sequence[int]) -> "Var":
        if self.params is None:
            raise LayoutError("no parameter leaf registered")
        if not 0 <= start <= stop <= self.params.value.size:
            raise LayoutError(f"slot [{start}, {stop}) outside parameter vector")
        value = self.params.value[start:stop].reshape(shape)
        pgrad = self.param_grad

        def backward(g):
            pgrad[start:stop] += np.reshape(g, -1)
            return ()

        return Var(value, self, (), backward)

    def backward(self, root: "Var") -> None:
        if root.tape is not self:
            raise LayoutError("loss was recorded on a different tape")
        if np.size(root.value) != 1:
            raise ValueError("backward needs a scalar root")
        if self._done:
            raise RuntimeError("tape already replayed; record the loss again")
        self._done = True
        root.grad = np.ones_like(root.value)
        for node in reversed(self.nodes):
            g = node.grad
            if g is None or node._backward is None:
                continue
            pgrads = node._backward(g)
            for parent, pg in zip(node._parents, pgrads):
                if parent is None or pg is None:
                    continue
                parent.grad = pg if parent.grad is None else parent.grad + pg
            # free intermediate adjoints early; large activations dominate memory
            if node is not root:
                node.grad = None


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    ndim_extra = g.ndim - len(shape)
    if ndim_extra > 0:
        g = g.sum(axis=tuple(range(ndim_extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _value(a):
    return a.value if isinstance(a, Var) else a


def _tape_of(*args) -> Tape:
    for a in args:
        if isinstance(a, Var):
            return a.tape
    raise TypeError("no Var among operands")


class Var:
    """A node on a tape holding a float64 array (or 0-d array)."""

    __slots__ = ("value", "grad", "tape", "_parents", "_backward")
    __array_priority__ = 1000

    def __init__(self, value, tape: Tape, parents: tuple = (), backward: Optional[Callable] = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.tape = tape
        self._parents = parents
        self._backward = backward
        tape.nodes.append(self)

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def __len__(self) -> int:
        return len(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"Var(shape={self.value.shape})"

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def __abs__(self):
        return absolute(self)

    def sum(self, axis=None):
        return vsum(self, axis)

    def mean(self):
        return vsum(self) * (1.0 / self.value.size)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        fn = _UFUNCS.get(ufunc)
        if fn is None:
            return NotImplemented
        return fn(*inputs)


# primitive ops -----------------------------------------------------------

def _binary(a, b, out, ga: Callable, gb: Callable) -> Var:
    tape = _tape_of(a, b)
    sa, sb = np.shape(_value(a)), np.shape(_value(b))
    da, db = isinstance(a, Var), isinstance(b, Var)

    def backward(g):
        return (
            _unbroadcast(ga(g), sa) if da else None,
            _unbroadcast(gb(g), sb) if db else None,
        )

    return Var(out, tape, (a if da else None, b if db else None), backward)


def add(a, b):
    return _binary(a, b, _value(a) + _value(b), lambda g: g, lambda g: g)


def sub(a, b):
    return _binary(a, b, _value(a) - _value(b), lambda g: g, lambda g: -g)


def mul(a, b):
    va, vb = _value(a), _value(b)
    return _binary(a, b, va * vb, lambda g: g * vb, lambda g: g * va)


def div(a, b):
    va, vb = _value(a), _value(b)
    out = va / vb
    return _binary(a, b, out, lambda g: g / vb, lambda g: -g * out / vb)


def _unary(a: Var, out, local: Callable) -> Var:
    def backward(g):
        return (local(g),)

    return Var(out, a.tape, (a,), backward)


def neg(a):
    return _unary(a, -a.value, lambda g: -g)


def exp(a):
    out = np.exp(a.value)
    return _unary(a, out, lambda g: g * out)


def log(a):
    va = a.value
    return _unary(a, np.log(va), lambda g: g / va)


def sin(a):
    va = a.value
    return _unary(a, np.sin(va), lambda g: g * np.cos(va))


def cos(a):
    va = a.value
    return _unary(a, np.cos(va), lambda g: -g * np.sin(va))


def tanh(a):
    out = np.tanh(a.value)
    return _unary(a, out, lambda g: g * (1.0 - out * out))


def sqrt(a):
    out = np.sqrt(a.value)
    return _unary(a, out, lambda g: g * 0.5 / out)


def square(a):
    va = a.value
    return _unary(a, va * va, lambda g: 2.0 * g * va)


def absolute(a):
    va = a.value
    return _unary(a, np.abs(va), lambda g: g * np.sign(va))


def power(a, p):
    if isinstance(p, Var):
        raise TypeError("only constant real exponents are supported")
    va = a.value
    p = float(p)
    return _unary(a, va**p, lambda g: g * p * va ** (p - 1.0))


def matmul(a, b):
    va, vb = _value(a), _value(b)
    if np.ndim(va) != 2 or np.ndim(vb) != 2:
        raise ValueError("matmul is restricted to 2-D operands")
    return _binary(a, b, va @ vb, lambda g: g @ vb.T, lambda g: va.T @ g)


def vsum(a: Var, axis=None):
    shape = a.value.shape
    out = a.value.sum(axis=axis)

    def local(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, shape)

    return _unary(a, out, local)


def reshape(a: Var, shape):
    old = a.value.shape
    return _unary(a, a.value.reshape(shape), lambda g: np.reshape(g, old))


def getitem(a: Var, idx):
    shape = a.value.shape
    fancy = _is_fancy(idx)

    def local(g):
        z = np.zeros(shape)
        if fancy:
            np.add.at(z, idx, g)
        else:
            z[idx] = g
        return z

    return _unary(a, a.value[idx], local)


def _is_fancy(idx) -> bool:
    parts = idx if isinstance(idx, tuple) else (idx,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


# fused network ops ----------------------------------------------------------

def affine_jet(h, w, b):
    """Dense layer acting on a stacked jet ``h`` of shape (3, N, fan_in).

    The weight multiplies all three Taylor components; the bias only shifts
    the value component.
    """
    vh, vw, vb = _value(h), _value(w), _value(b)
    k, n, fi = vh.shape
    out = (vh.reshape(k * n, fi) @ vw).reshape(k, n, vw.shape[1])
    out[0] += vb
    dh, dw, db = (isinstance(x, Var) for x in (h, w, b))
    if not (dh or dw or db):
        return out

    def backward(g):
        g2 = g.reshape(k * n, -1)
        gh = (g2 @ vw.T).reshape(k, n, fi) if dh else None
        gw = vh.reshape(k * n, fi).T @ g2 if dw else None
        gb = g[0].sum(axis=0) if db else None
        return gh, gw, gb

    return Var(out, _tape_of(h, w, b), (h if dh else None, w if dw else None, b if db else None), backward)


def tanh_jet(z):
    """tanh applied to a stacked jet (value, d/dx, d^2/dx^2) along axis 0.

    A leading axis of length 1 means value only.
    """
    vz = _value(z)
    if vz.shape[0] == 1:
        return tanh(z) if isinstance(z, Var) else np.tanh(z)
    out, t, s = kernels.tanh_jet_forward(vz)
    if not isinstance(z, Var):
        return out

    def backward(g):
        return (kernels.tanh_jet_backward(np.ascontiguousarray(g), vz, t, s),)

    return Var(out, z.tape, (z,), backward)


_UFUNCS = {
    np.add: add,
    np.subtract: sub,
    np.multiply: mul,
    np.true_divide: div,
    np.negative: neg,
    np.exp: exp,
    np.log: log,
    np.sin: sin,
    np.cos: cos,
    np.tanh: tanh,
    np.sqrt: sqrt,
    np.square: square,
    np.absolute: absolute,
    np.power: power,
    np.matmul: matmul,
}
