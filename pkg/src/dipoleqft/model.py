"""The Levy-driven dipole model: cumulant data, Euclidean kernels, truncated
Schwinger functions, momentum-space truncated Wightman functions, and the
set-partition assembly of full moments from truncated ones.

Truncated structure: the two-point function is -(c/m^4) delta'^-(k1)
delta(k1+k2); for n >= 3 the n-point function is a sum of n terms, term j
carrying delta'^- on the first j-1 variables, the finite-part double pole on
variable j, delta'^+ on the rest, and one overall conservation delta, with
coefficient (-1)^n ctilde_n, ctilde_n = (2 pi)^{(d(n-2)-2)/2} c_n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import k0 as _k0, k1 as _k1, kv as _kv

from .dist import DistExpr, Term, ShellFactor, smear
from .quad import QuadSpec, SmearValue, integrate_1d


class OriginSingularity(ValueError):
    """Euclidean kernel evaluated at (numerically) coincident points."""


@dataclass
class MomentModel:
    mass: float = 1.0
    dim: int = 2
    c: float = 1.0
    cumulants: dict = None          # order -> c_n (n >= 2); c_2 defaults to c
    generator: dict = None          # optional {'type': 'poisson', 'lambda': .., 'a': ..}
    w2_constant: float = 1.0        # open normalization knob on the printed W2

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.generator is not None:
            g = self.generator
            if g.get("type") != "poisson":
                raise ValueError("only the pure-Poisson generator is built in")
            lam, a = float(g["lambda"]), float(g["a"])
            cums = {n: lam * a**n for n in range(2, 13)}
            if self.cumulants:
                cums.update(self.cumulants)
            self.cumulants = cums
            derived_c = lam * a * a
            if self.c is None:
                self.c = derived_c
            elif not math.isclose(self.c, derived_c, rel_tol=1e-12):
                raise ValueError("c inconsistent with -psi''(0) of the generator")
        if self.cumulants is None:
            self.cumulants = {}
        self.cumulants = {int(n): float(v) for n, v in self.cumulants.items()}
        self.cumulants.setdefault(2, self.c)
        if not math.isclose(self.cumulants[2], self.c, rel_tol=1e-12):
            raise ValueError("c and c_2 disagree (c = -psi''(0) convention)")

    def cumulant(self, n):
        if n not in self.cumulants:
            raise KeyError(f"cumulant c_{n} not supplied")
        return self.cumulants[n]

    def c_tilde(self, n):
        return (2 * np.pi) ** ((self.dim * (n - 2) - 2) / 2) * self.cumulant(n)

    def to_dict(self):
        return {
            "mass": self.mass, "dim": self.dim, "c": self.c,
            "cumulants": {str(k): v for k, v in self.cumulants.items()},
            "generator": self.generator,
            "w2_constant": self.w2_constant,
        }

    @classmethod
    def from_dict(cls, d):
        cums = d.get("cumulants")
        if isinstance(cums, list):
            cums = {i + 2: v for i, v in enumerate(cums)}
        elif isinstance(cums, dict):
            cums = {int(k): v for k, v in cums.items()}
        return cls(
            mass=float(d.get("mass", 1.0)),
            dim=int(d.get("dim", 2)),
            c=float(d.get("c", 1.0)),
            cumulants=cums,
            generator=d.get("generator"),
            w2_constant=float(d.get("w2_constant", 1.0)),
        )

    @classmethod
    def from_json_file(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def poisson_model(lam, a, mass=1.0, dim=2):
    return MomentModel(mass=mass, dim=dim, c=lam * a * a,
                       generator={"type": "poisson", "lambda": lam, "a": a})


# -- set partitions ----------------------------------------------------------------


def set_partitions(n):
    """All partitions of {0..n-1} via restricted-growth strings."""
    if n == 0:
        return [[]]
    out = []
    rgs = [0] * n

    def rec(i, maxval):
        if i == n:
            nblocks = maxval + 1
            blocks = [[] for _ in range(nblocks)]
            for j, b in enumerate(rgs):
                blocks[b].append(j)
            out.append(blocks)
            return
        for b in range(maxval + 2):
            rgs[i] = b
            rec(i + 1, max(maxval, b))

    rgs[0] = 0
    rec(1, 0)
    return out


def set_partitions_by_insertion(n):
    """Independent enumerator: insert element i into each block or a new one."""
    parts = [[[0]]] if n >= 1 else [[]]
    for i in range(1, n):
        nxt = []
        for p in parts:
            for j in range(len(p)):
                q = [list(b) for b in p]
                q[j].append(i)
                nxt.append(q)
            nxt.append([list(b) for b in p] + [[i]])
        parts = nxt
    return parts


def pair_partitions(items):
    """All perfect matchings of a list; empty list has the empty matching."""
    items = list(items)
    if not items:
        return [[]]
    if len(items) % 2 == 1:
        return []
    first, rest = items[0], items[1:]
    out = []
    for i, other in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for sub in pair_partitions(remaining):
            out.append([(first, other)] + sub)
    return out


def bell_number(n):
    return len(set_partitions(n))


# -- Euclidean kernels ----------------------------------------------------------------


def euclid_kernel(order, x, model):
    """(-Laplace + m^2)^{-order}(x) for order 1, 2; general dimension.

    order 1: (2 pi)^{-d/2} m^{d/2-1} |x|^{1-d/2} K_{d/2-1}(m |x|);
    order 2 is its -d/d(m^2) derivative (in d = 2: |x| K_1(m|x|) / (4 pi m)).
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x)) if x.ndim else float(abs(x))
    if r < 1e-12:
        raise OriginSingularity("kernel evaluated at |x| < 1e-12")
    m, d = model.mass, model.dim
    nu = d / 2 - 1
    if order == 1:
        if d == 2:
            return float(_k0(m * r)) / (2 * np.pi)
        return (2 * np.pi) ** (-d / 2) * m**nu * r**(-nu) * float(_kv(nu, m * r))
    if order == 2:
        if d == 2:
            return r * float(_k1(m * r)) / (4 * np.pi * m)
        # -d/dm^2 of order 1: (2 pi)^{-d/2} r^{1-nu} m^{nu-1} K_{nu-1}(m r) / 2
        return (2 * np.pi) ** (-d / 2) * r ** (1 - nu) * m ** (nu - 1) * float(_kv(nu - 1, m * r)) / 2
    raise ValueError("order must be 1 or 2")


def _kernel2_radial(r, model):
    m = model.mass
    r = np.asarray(r, dtype=float)
    safe = np.maximum(r, 1e-12)
    return np.where(r < 1e-12, 1.0 / (4 * np.pi * m**2), safe * _k1(m * safe) / (4 * np.pi * m))


def schwinger_truncated(n, points, model, spec=None):
    """Truncated Euclidean n-point function.

    n = 2 evaluates the closed form (c/m^4) G_2(x - y); n >= 3 (d = 2 only)
    integrates the product of order-2 kernels over the interaction point.
    """
    spec = spec or QuadSpec()
    points = [np.asarray(p, dtype=float) for p in points]
    if n != len(points):
        raise ValueError("point count mismatch")
    if n == 2:
        return SmearValue(model.c / model.mass**4 * euclid_kernel(2, points[0] - points[1], model),
                          0.0, 0)
    if model.dim != 2:
        raise NotImplementedError("n >= 3 Schwinger integrals are desk-scale d = 2 only")
    cn = model.cumulant(n)
    pts = np.stack(points)
    lo = pts.min(axis=0) - 14.0 / model.mass
    hi = pts.max(axis=0) + 14.0 / model.mass
    inner_spec = spec.loosened(0.2)
    state = {"err": 0.0, "nev": 0}

    def inner(x0):
        def f(ys):
            vals = np.ones(len(ys))
            for p in points:
                dx = x0 - p[0]
                dy = ys - p[1]
                vals = vals * _kernel2_radial(np.hypot(dx, dy), model)
            return vals
        sub = integrate_1d(f, lo[1], hi[1], inner_spec, initial=32)
        state["err"] = max(state["err"], sub.err_est)
        state["nev"] += sub.n_evals
        return sub.value

    res = integrate_1d(lambda xs: np.array([inner(x) for x in xs], dtype=complex),
                       lo[0], hi[0], spec, initial=32)
    err = res.err_est + state["err"] * (hi[0] - lo[0])
    return SmearValue(cn * res.value.real, abs(cn) * max(err, spec.abs_tol),
                      res.n_evals + state["nev"], res.converged)


# -- momentum space ----------------------------------------------------------------


def wightman_truncated(n, model):
    """Momentum-space truncated Wightman function as a DistExpr."""
    m = model.mass
    if n == 2:
        return DistExpr(2, [Term(-model.c / m**4 * model.w2_constant,
                                 [ShellFactor("delta_prime", "-", m),
                                  ShellFactor("smooth", None, m)],
                                 conservation=[1, 1])])
    if n < 2:
        raise ValueError("n must be >= 2")
    coeff = (-1) ** n * model.c_tilde(n)
    terms = []
    for j in range(n):
        factors = []
        for l in range(n):
            if l < j:
                factors.append(ShellFactor("delta_prime", "-", m))
            elif l == j:
                factors.append(ShellFactor("fp2", None, m))
            else:
                factors.append(ShellFactor("delta_prime", "+", m))
        terms.append(Term(coeff, factors, conservation=[1] * n))
    return DistExpr(n, terms)


def assemble_moments(n, truncated_evaluator, packets, spec=None):
    """Full n-point moment from truncated ones via sum over set partitions.

    truncated_evaluator(block_packets) -> complex (or SmearValue); singleton
    blocks contribute the one-point function, which vanishes in this model,
    so partitions with singleton blocks drop out.
    """
    total = 0.0 + 0.0j
    err = 0.0
    count = 0
    for partition in set_partitions(n):
        if any(len(b) == 1 for b in partition):
            continue
        prod = 1.0 + 0.0j
        perr = 0.0
        for block in partition:
            v = truncated_evaluator([packets[i] for i in block])
            if isinstance(v, SmearValue):
                perr = abs(prod) * v.err_est + perr * abs(v.value)
                prod *= v.value
            else:
                prod *= complex(v)
                perr *= abs(v)
        total += prod
        err += perr
        count += 1
    return SmearValue(total, err, 0), count
