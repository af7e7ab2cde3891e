"""Truncated univariate Taylor arithmetic (jets).

A Jet holds the coefficients of f(x0 + tau) = c[0] + c[1] tau + ... up to a
fixed truncation order, with numpy-array coefficients so whole batches of
points are differentiated at once.  Used to push exact k0-derivatives through
products of packets, cutoff multipliers and substituted momentum arguments;
order 3 covers the deepest delta'-reduction the smearing engine produces.
"""

from __future__ import annotations

import numpy as np

_FACT = (1.0, 1.0, 2.0, 6.0, 24.0)


class Jet:
    """Taylor coefficients c[r] = (d^r f / d tau^r) / r! at tau = 0."""

    __slots__ = ("c", "order")
    __array_ufunc__ = None  # numpy defers binary ops to Jet's own methods

    def __init__(self, coeffs, order=None):
        self.c = [np.asarray(ci) for ci in coeffs]
        self.order = len(self.c) - 1 if order is None else order
        while len(self.c) < self.order + 1:
            self.c.append(np.zeros_like(self.c[0]))

    @classmethod
    def variable(cls, x0, order):
        x0 = np.asarray(x0)
        coeffs = [x0, np.ones_like(x0)] + [np.zeros_like(x0)] * max(0, order - 1)
        return cls(coeffs[: order + 1], order)

    @classmethod
    def const(cls, value, order, like=None):
        value = np.asarray(value)
        if like is not None:
            value = value + np.zeros_like(like)
        return cls([value] + [np.zeros_like(value)] * order, order)

    def derivative(self, r):
        """r-th derivative at the expansion point (not divided by r!)."""
        if r > self.order:
            raise ValueError("jet order too low")
        return self.c[r] * _FACT[r]

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.const(other, self.order, like=self.c[0])

    def __add__(self, other):
        o = self._coerce(other)
        return Jet([a + b for a, b in zip(self.c, o.c)], self.order)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet([a - b for a, b in zip(self.c, o.c)], self.order)

    def __rsub__(self, other):
        o = self._coerce(other)
        return Jet([b - a for a, b in zip(self.c, o.c)], self.order)

    def __neg__(self):
        return Jet([-a for a in self.c], self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet([a * other for a in self.c], self.order)
        n = self.order
        out = []
        for r in range(n + 1):
            acc = self.c[0] * other.c[r]
            for j in range(1, r + 1):
                acc = acc + self.c[j] * other.c[r - j]
            out.append(acc)
        return Jet(out, n)

    __rmul__ = __mul__

    def reciprocal(self):
        n = self.order
        inv0 = 1.0 / self.c[0]
        out = [inv0]
        for r in range(1, n + 1):
            acc = 0.0
            for j in range(1, r + 1):
                acc = acc + self.c[j] * out[r - j]
            out.append(-inv0 * acc)
        return Jet(out, n)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet([a / other for a in self.c], self.order)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if k < 0:
            return self.reciprocal() ** (-k)
        out = Jet.const(1.0, self.order, like=self.c[0])
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def exp(self):
        n = self.order
        e0 = np.exp(self.c[0])
        # exp(c0 + u) = e^{c0} * sum u^k / k!  with u the nilpotent part
        u = Jet([np.zeros_like(self.c[0])] + self.c[1:], n)
        acc = Jet.const(1.0, n, like=self.c[0])
        term = Jet.const(1.0, n, like=self.c[0])
        for k in range(1, n + 1):
            term = term * u * (1.0 / k)
            acc = acc + term
        return acc * e0

    def where(self, mask, other):
        """Branch combination: self where mask, other elsewhere."""
        o = self._coerce(other)
        return Jet([np.where(mask, a, b) for a, b in zip(self.c, o.c)], self.order)


def jet_exp(j):
    return j.exp() if isinstance(j, Jet) else np.exp(j)
