"""Second-order truncated Taylor numbers ("hyper-dual" numbers).

A :class:`Jet` carries (value, d1, d2) = (u, du/dx, d^2u/dx^2) for one scalar
input x. Components may be floats, numpy arrays (one entry per collocation
point) or tape :class:`~gluenn.autodiff.tape.Var` nodes; arithmetic on the
components goes through numpy operators, so a jet built from tape nodes is
itself recorded for reverse mode.
"""
from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("value", "d1", "d2")
    __array_ufunc__ = None

    def __init__(self, value, d1=0.0, d2=0.0):
        self.value = value
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def seed(cls, x):
        """The independent variable itself: d1 = 1, d2 = 0."""
        x = np.asarray(x, dtype=np.float64) if not np.isscalar(x) else float(x)
        return cls(x, np.ones_like(x), np.zeros_like(x))

    @classmethod
    def const(cls, c):
        c = np.asarray(c, dtype=np.float64) if not np.isscalar(c) else float(c)
        return cls(c, np.zeros_like(c), np.zeros_like(c))

    def __iter__(self):
        return iter((self.value, self.d1, self.d2))

    def __repr__(self) -> str:
        return f"Jet({self.value!r}, {self.d1!r}, {self.d2!r})"

    @staticmethod
    def _lift(other) -> "Jet":
        return other if isinstance(other, Jet) else Jet(other, 0.0, 0.0)

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value + other, self.d1, self.d2)
        return Jet(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value - other, self.d1, self.d2)
        return Jet(self.value - other.value, self.d1 - other.d1, self.d2 - other.d2)

    def __rsub__(self, other):
        return Jet(other - self.value, -self.d1, -self.d2)

    def __neg__(self):
        return Jet(-self.value, -self.d1, -self.d2)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value * other, self.d1 * other, self.d2 * other)
        u, v = self, other
        return Jet(
            u.value * v.value,
            u.d1 * v.value + u.value * v.d1,
            u.d2 * v.value + 2.0 * (u.d1 * v.d1) + u.value * v.d2,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            inv = 1.0 / other
            return Jet(self.value * inv, self.d1 * inv, self.d2 * inv)
        u, v = self, other
        w0 = u.value / v.value
        w1 = (u.d1 - w0 * v.d1) / v.value
        w2 = (u.d2 - 2.0 * (w1 * v.d1) - w0 * v.d2) / v.value
        return Jet(w0, w1, w2)

    def __rtruediv__(self, other):
        return Jet._lift(other) / self

    def __pow__(self, p):
        p = float(p)
        u0 = self.value
        f1 = p * u0 ** (p - 1.0)
        f2 = p * (p - 1.0) * u0 ** (p - 2.0)
        return self._chain(u0**p, f1, f2)

    def _chain(self, f0, f1, f2) -> "Jet":
        """Compose with a scalar function given f, f', f'' at the value."""
        a = self.d1
        return Jet(f0, f1 * a, f2 * (a * a) + f1 * self.d2)

    def exp(self):
        e = np.exp(self.value)
        return self._chain(e, e, e)

    def log(self):
        inv = 1.0 / self.value
        return self._chain(np.log(self.value), inv, -(inv * inv))

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._chain(c, -s, -c)

    def tanh(self):
        t = np.tanh(self.value)
        s = 1.0 - t * t
        return self._chain(t, s, -2.0 * (t * s))

    def abs(self):
        sg = np.sign(_raw(self.value))
        return Jet(np.abs(self.value), self.d1 * sg, self.d2 * sg)

    __abs__ = abs


def _raw(v):
    return getattr(v, "value", v)


# the scalar flavour; kept as a name for call sites working point-by-point
DualScalar2 = Jet
