"""Momentum-space wave packets: polynomial x Gaussian x plane-wave phase.

A packet f(k) = poly(k) * exp(-1/2 (k-mu)^T A (k-mu)) * exp(i k.b) with the
Minkowski pairing k.b = k^0 b^0 - k.b_spatial.  The class is closed under
Fourier transform (symmetric (2pi)^{-d/2} convention with the same pairing),
differentiation and multiplication by polynomials, so every smearing integrand
built from packets has exact derivatives.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product as _iproduct

import numpy as np

from ._jets import Jet


class MismatchedGaussian(ValueError):
    """Raised when adding packets whose Gaussian data differ."""


def _mink_sign(i):
    return 1.0 if i == 0 else -1.0


class Poly:
    """Multivariate polynomial with complex coefficients, keyed by multi-index."""

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim, coeffs=None):
        self.dim = dim
        self.coeffs = {}
        if coeffs:
            for a, c in coeffs.items():
                c = complex(c)
                if c != 0:
                    self.coeffs[tuple(a)] = self.coeffs.get(tuple(a), 0.0) + c
        self._clean()

    def _clean(self):
        self.coeffs = {a: c for a, c in self.coeffs.items() if c != 0}
        if not self.coeffs:
            self.coeffs = {}

    @classmethod
    def const(cls, dim, value):
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def coordinate(cls, dim, axis):
        a = [0] * dim
        a[axis] = 1
        return cls(dim, {tuple(a): 1.0})

    def copy(self):
        return Poly(self.dim, dict(self.coeffs))

    @property
    def degree(self):
        return max((sum(a) for a in self.coeffs), default=0)

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.dim, other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0.0) + c
        return Poly(self.dim, out)

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(self.dim, other)
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, Poly):
            out = {}
            for a, c in self.coeffs.items():
                for b, e in other.coeffs.items():
                    key = tuple(x + y for x, y in zip(a, b))
                    out[key] = out.get(key, 0.0) + c * e
            return Poly(self.dim, out)
        return Poly(self.dim, {a: c * other for a, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __pow__(self, n):
        out = Poly.const(self.dim, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def deriv(self, axis):
        out = {}
        for a, c in self.coeffs.items():
            if a[axis] > 0:
                key = tuple(x - (1 if i == axis else 0) for i, x in enumerate(a))
                out[key] = out.get(key, 0.0) + c * a[axis]
        return Poly(self.dim, out)

    def eval(self, pts):
        """Evaluate at pts of shape (..., dim)."""
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for a, c in self.coeffs.items():
            term = np.full(pts.shape[:-1], c, dtype=complex)
            for i, p in enumerate(a):
                if p:
                    term = term * pts[..., i] ** p
            out += term
        return out

    def eval_mixed(self, coords):
        """Evaluate with per-coordinate values; entries may be arrays or Jets."""
        out = None
        for a, c in self.coeffs.items():
            term = c
            for i, p in enumerate(a):
                if p:
                    term = term * coords[i] ** p
            out = term if out is None else out + term
        if out is None:
            like = coords[0]
            zero = like * 0.0
            return zero
        return out

    def to_list(self):
        return sorted(
            [[list(a), c.real, c.imag] for a, c in self.coeffs.items()],
            key=lambda row: row[0],
        )

    @classmethod
    def from_list(cls, dim, rows):
        return cls(dim, {tuple(r[0]): complex(r[1], r[2]) for r in rows})


def minkowski_square_poly(dim, mass=0.0):
    """(k^0)^2 - |k_spatial|^2 - mass^2 as a Poly."""
    out = Poly.const(dim, -(mass**2))
    for i in range(dim):
        e = [0] * dim
        e[i] = 2
        out = out + Poly(dim, {tuple(e): _mink_sign(i)})
    return out


def _gauss_moments(sigma, degrees):
    """Isserlis moments E[u^beta] for u ~ N(0, sigma), all beta <= degrees."""
    memo = {}

    def mom(beta):
        if all(b == 0 for b in beta):
            return 1.0
        if sum(beta) % 2 == 1:
            return 0.0
        key = beta
        if key in memo:
            return memo[key]
        i = next(j for j, b in enumerate(beta) if b > 0)
        gamma = list(beta)
        gamma[i] -= 1
        acc = 0.0
        for j in range(len(beta)):
            if gamma[j] > 0:
                g2 = list(gamma)
                g2[j] -= 1
                acc += sigma[i, j] * gamma[j] * mom(tuple(g2))
        memo[key] = acc
        return acc

    return {b: mom(b) for b in degrees}


@dataclass
class WavePacket:
    """Schwartz test function poly(k) e^{-(k-mu)^T A (k-mu)/2} e^{i k.b}."""

    dim: int
    poly: Poly
    center: np.ndarray
    widths: np.ndarray
    phase_shift: np.ndarray = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.widths = np.asarray(self.widths, dtype=float)
        if self.phase_shift is None:
            self.phase_shift = np.zeros(self.dim)
        self.phase_shift = np.asarray(self.phase_shift, dtype=float)
        if self.widths.shape != (self.dim, self.dim):
            raise ValueError("widths must be a (d, d) matrix")
        if not np.allclose(self.widths, self.widths.T, atol=1e-12):
            raise ValueError("widths must be symmetric")
        if np.linalg.eigvalsh(self.widths).min() <= 0:
            raise ValueError("widths must be positive definite")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def gaussian(cls, center, widths=None, dim=None, phase_shift=None):
        center = np.asarray(center, dtype=float)
        d = len(center) if dim is None else dim
        if widths is None:
            widths = np.eye(d)
        widths = np.asarray(widths, dtype=float)
        if widths.ndim == 0:
            widths = float(widths) * np.eye(d)
        elif widths.ndim == 1:
            widths = np.diag(widths)
        return cls(d, Poly.const(d, 1.0), center, widths, phase_shift)

    # -- evaluation ------------------------------------------------------------

    def eval(self, pts):
        pts = np.asarray(pts, dtype=float)
        diff = pts - self.center
        quad = np.einsum("...i,ij,...j->...", diff, self.widths, diff)
        eta_b = self.phase_shift * np.array([_mink_sign(i) for i in range(self.dim)])
        phase = pts @ eta_b
        return self.poly.eval(pts) * np.exp(-0.5 * quad + 1j * phase)

    def eval_k0jet(self, k0, kvec, order):
        """Evaluate with k^0 a Jet variable; kvec has shape (..., d-1)."""
        kvec = np.asarray(kvec, dtype=float)
        j0 = k0 if isinstance(k0, Jet) else Jet.variable(np.asarray(k0, dtype=float), order)
        coords = [j0] + [kvec[..., i] for i in range(self.dim - 1)]
        quad = None
        for i in range(self.dim):
            di = coords[i] - self.center[i]
            for j in range(self.dim):
                a = self.widths[i, j]
                if a == 0.0:
                    continue
                dj = coords[j] - self.center[j]
                term = (di * dj) * (-0.5 * a)
                quad = term if quad is None else quad + term
        if quad is None:
            quad = Jet.const(0.0, order, like=j0.c[0])
        eta_b = self.phase_shift * np.array([_mink_sign(i) for i in range(self.dim)])
        phase = None
        for i in range(self.dim):
            if eta_b[i] != 0.0:
                term = coords[i] * (1j * eta_b[i])
                phase = term if phase is None else phase + term
        expo = quad if phase is None else quad + phase
        if not isinstance(expo, Jet):
            expo = Jet.const(expo, order, like=j0.c[0])
        return self.poly.eval_mixed(coords) * expo.exp()

    # -- calculus ---------------------------------------------------------------

    def derivative(self, axis):
        """Exact partial derivative; result is again a WavePacket."""
        lin = Poly.const(self.dim, 0.0)
        for j in range(self.dim):
            a = self.widths[axis, j]
            if a:
                lin = lin + (Poly.coordinate(self.dim, j) - Poly.const(self.dim, self.center[j])) * (-a)
        newpoly = self.poly.deriv(axis) + self.poly * lin
        newpoly = newpoly + self.poly * (1j * _mink_sign(axis) * self.phase_shift[axis])
        return WavePacket(self.dim, newpoly, self.center, self.widths, self.phase_shift)

    def conjugate_reflect(self):
        """k -> conj(f(-k)); maps positive- to negative-energy packets."""
        coeffs = {a: np.conj(c) * (-1.0) ** sum(a) for a, c in self.poly.coeffs.items()}
        return WavePacket(self.dim, Poly(self.dim, coeffs), -self.center, self.widths, self.phase_shift)

    def scale(self, factor):
        return WavePacket(self.dim, self.poly * factor, self.center, self.widths, self.phase_shift)

    def multiply_poly(self, poly):
        if not isinstance(poly, Poly):
            poly = Poly.const(self.dim, poly)
        return WavePacket(self.dim, self.poly * poly, self.center, self.widths, self.phase_shift)

    def __add__(self, other):
        if not isinstance(other, WavePacket):
            raise TypeError("can only add WavePacket")
        same = (
            np.array_equal(self.center, other.center)
            and np.array_equal(self.widths, other.widths)
            and np.array_equal(self.phase_shift, other.phase_shift)
        )
        if not same:
            raise MismatchedGaussian("add requires identical (A, mu, b)")
        return WavePacket(self.dim, self.poly + other.poly, self.center, self.widths, self.phase_shift)

    # -- windows ---------------------------------------------------------------

    def sigma(self):
        """Per-axis Gaussian widths sqrt(diag(A^-1))."""
        return np.sqrt(np.diag(np.linalg.inv(self.widths)))

    def window(self, radius):
        s = self.sigma()
        return [(self.center[i] - radius * s[i], self.center[i] + radius * s[i]) for i in range(self.dim)]

    # -- Fourier ---------------------------------------------------------------

    def fourier(self, inverse=False):
        """Exact transform (2pi)^{-d/2} Int e^{-+ i k.x} f(k) dk, Minkowski pairing.

        Forward uses e^{-i k.x}; inverse=True uses e^{+i k.x}.  The result is
        a WavePacket in the dual variable.
        """
        d = self.dim
        s = 1.0 if inverse else -1.0
        eta = np.diag([_mink_sign(i) for i in range(d)])
        ainv = np.linalg.inv(self.widths)
        m_mat = ainv @ eta  # A^-1 eta
        new_widths = eta @ ainv @ eta
        new_center = -s * self.phase_shift
        new_shift = s * self.center

        # polynomial: Q(x) = E_u[ P(mu + i A^-1 eta (b + s x) + u) ], u ~ N(0, A^-1)
        degrees = set()
        for a in self.poly.coeffs:
            for beta in _iproduct(*[range(p + 1) for p in a]):
                degrees.add(beta)
        moments = _gauss_moments(ainv, degrees)

        # m_i(x) = mu_i + i (M b)_i + i s sum_j M_ij x_j  as degree-1 Polys
        mb = m_mat @ self.phase_shift
        lin = []
        for i in range(d):
            p = Poly.const(d, self.center[i] + 1j * mb[i])
            for j in range(d):
                if m_mat[i, j] != 0.0:
                    p = p + Poly.coordinate(d, j) * (1j * s * m_mat[i, j])
            lin.append(p)

        q = Poly.const(d, 0.0)
        for a, c in self.poly.coeffs.items():
            for beta in _iproduct(*[range(p + 1) for p in a]):
                mom = moments[beta]
                if mom == 0.0:
                    continue
                coef = c * mom
                term = Poly.const(d, 1.0)
                for i in range(d):
                    coef *= math.comb(a[i], beta[i])
                    if a[i] - beta[i] > 0:
                        term = term * lin[i] ** (a[i] - beta[i])
                q = q + term * coef
        det = np.linalg.det(self.widths)
        eta_b = self.phase_shift * np.diag(eta)
        pref = det**-0.5 * np.exp(1j * float(self.center @ eta_b))
        return WavePacket(d, q * pref, new_center, new_widths, new_shift)

    # -- serialization -----------------------------------------------------------

    def to_dict(self):
        return {
            "dim": self.dim,
            "poly": self.poly.to_list(),
            "center": list(self.center),
            "widths": [float(x) for x in self.widths.reshape(-1)],
            "phase_shift": list(self.phase_shift),
        }

    @classmethod
    def from_dict(cls, d):
        dim = int(d["dim"])
        return cls(
            dim,
            Poly.from_list(dim, d["poly"]),
            np.array(d["center"], dtype=float),
            np.array(d["widths"], dtype=float).reshape(dim, dim),
            np.array(d["phase_shift"], dtype=float),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def eval_packet(p, k):
    """Pointwise packet value at a single momentum k."""
    return complex(p.eval(np.asarray(k, dtype=float)))


def fourier(p, inverse=False):
    return p.fourier(inverse=inverse)


def packet_add(p, q):
    return p + q


def packet_scale(p, factor):
    return p.scale(factor)


def packet_multiply_poly(p, poly):
    return p.multiply_poly(poly)
