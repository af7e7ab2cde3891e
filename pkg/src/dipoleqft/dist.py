"""Mass-shell distribution expressions and their smearing against packets.

A DistExpr is a finite sum of terms; each term is a product of per-variable
shell factors -- theta(+-k^0) delta(k^2-m^2), theta(+-k^0) delta'(k^2-m^2),
PV 1/(k^2-m^2), FP 1/(k^2-m^2)^2, or a plain smooth slot -- with an optional
overall momentum-conservation delta(sum_l s_l k_l).

Smearing eliminates one variable through the conservation delta (the PV/FP
variable when present), reduces every delta factor to its shell with Jacobian
1/(2 omega), applies the delta' pairing
    <delta'_sigma, F> = -<delta_sigma, d_0(F / (2 k^0))>
with exact jet derivatives (chain rule through the conservation substitution
included), and hands PV/FP factors to the pole rules in quad.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as _iproduct

import numpy as np

from ._jets import Jet
from .quad import SmearValue, QuadSpec, integrate_1d, pv_simple, fp_double

KINDS = ("delta", "delta_prime", "pv1", "fp2", "smooth")

POLE_MARGIN_FACTOR = 0.05  # times m^2, pre-check for eliminated PV/FP variables


class PoleProximity(ValueError):
    """Singular manifold of an eliminated PV/FP factor meets the support."""


class DimensionMismatch(ValueError):
    """Packet count or dimension inconsistent with the expression."""


@dataclass
class ShellFactor:
    kind: str
    sign: str = None          # '+' | '-' | None
    mass: float = 1.0
    multiplier: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.kind in ("delta", "delta_prime") and self.sign not in ("+", "-"):
            raise ValueError("delta factors need sign '+' or '-'")
        if self.kind in ("pv1", "fp2", "smooth") and self.sign is not None:
            raise ValueError("pole/smooth factors carry no sign")
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    def with_multiplier(self, mu):
        if self.multiplier is None:
            new = mu
        else:
            from .waveop import Multiplier
            new = Multiplier("product", factors=(self.multiplier, mu))
        return ShellFactor(self.kind, self.sign, self.mass, new)

    def to_dict(self):
        d = {"kind": self.kind, "sign": self.sign, "mass": self.mass}
        if self.multiplier is not None:
            d["multiplier"] = self.multiplier.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        mu = None
        if d.get("multiplier"):
            from .waveop import Multiplier
            mu = Multiplier.from_dict(d["multiplier"])
        return cls(d["kind"], d.get("sign"), float(d.get("mass", 1.0)), mu)


@dataclass
class Term:
    coeff: complex
    factors: list
    conservation: list = None   # entries in {-1, 0, +1}, or None

    def to_dict(self):
        return {
            "coeff": [complex(self.coeff).real, complex(self.coeff).imag],
            "factors": [f.to_dict() for f in self.factors],
            "conservation": list(self.conservation) if self.conservation is not None else None,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            complex(d["coeff"][0], d["coeff"][1]),
            [ShellFactor.from_dict(f) for f in d["factors"]],
            list(d["conservation"]) if d.get("conservation") is not None else None,
        )


@dataclass
class DistExpr:
    n_args: int
    terms: list

    def __post_init__(self):
        for t in self.terms:
            if len(t.factors) != self.n_args:
                raise DimensionMismatch("every term needs one factor per argument")
            if t.conservation is not None and len(t.conservation) != self.n_args:
                raise DimensionMismatch("conservation vector length mismatch")

    def scaled(self, c):
        return DistExpr(self.n_args, [Term(t.coeff * c, t.factors, t.conservation) for t in self.terms])

    def __add__(self, other):
        if other.n_args != self.n_args:
            raise DimensionMismatch("adding expressions of different arity")
        return DistExpr(self.n_args, list(self.terms) + list(other.terms))

    def to_dict(self):
        return {"n_args": self.n_args, "terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_args"]), [Term.from_dict(t) for t in d["terms"]])


def single_factor(kind, sign=None, mass=1.0, coeff=1.0, multiplier=None):
    """One-variable expression with a single shell factor."""
    return DistExpr(1, [Term(coeff, [ShellFactor(kind, sign, mass, multiplier)])])


def apply_multiplier(expr, var, mu):
    """Attach (compose) a smooth multiplier on one variable of every term."""
    if not (0 <= var < expr.n_args):
        raise DimensionMismatch("variable index out of range")
    terms = []
    for t in expr.terms:
        fs = list(t.factors)
        fs[var] = fs[var].with_multiplier(mu)
        terms.append(Term(t.coeff, fs, t.conservation))
    return DistExpr(expr.n_args, terms)


# -- smooth per-variable parts ------------------------------------------------------


class SmoothPart:
    """Packet times optional multiplier: the smooth function attached to one
    momentum variable, with exact k^0-jets."""

    def __init__(self, packet, multiplier=None):
        self.packet = packet
        self.multiplier = multiplier
        self.dim = packet.dim

    def val_split(self, k0, kvec):
        k0 = np.asarray(k0, dtype=float)
        kvec = np.asarray(kvec, dtype=float)
        pts = np.concatenate([k0[..., None], kvec], axis=-1)
        out = self.packet.eval(pts)
        if self.multiplier is not None:
            out = out * self.multiplier.value_split(k0, kvec)
        return out

    def jet_split(self, k0, kvec, order):
        j = self.packet.eval_k0jet(k0, kvec, order)
        if self.multiplier is not None:
            j0 = k0 if isinstance(k0, Jet) else Jet.variable(np.asarray(k0, dtype=float), order)
            j = j * self.multiplier.jet_split(j0, kvec, order)
        return j

    def val_full(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = self.packet.eval(pts)
        if self.multiplier is not None:
            out = out * self.multiplier.value(pts)
        return out

    def window(self, radius):
        return self.packet.window(radius)


def _as_part(obj, factor):
    part = obj if isinstance(obj, SmoothPart) else SmoothPart(obj)
    if factor.multiplier is not None:
        if part.multiplier is None:
            part = SmoothPart(part.packet, factor.multiplier)
        else:
            from .waveop import Multiplier
            part = SmoothPart(part.packet, Multiplier("product",
                                                      factors=(part.multiplier, factor.multiplier)))
    return part


# -- shell reduction -----------------------------------------------------------------


def _omega(kvec, mass):
    kvec = np.asarray(kvec, dtype=float)
    return np.sqrt((kvec**2).sum(axis=-1) + mass**2)


def _pq_coefficients(part, sign, mass, kvec, need_derivative):
    """On-shell (P, Q) for one variable: <reduction> = P*G + Q*d_tau G."""
    w = _omega(kvec, mass)
    sgn = 1.0 if sign == "+" else -1.0
    k0 = sgn * w
    if not need_derivative:
        return part.val_split(k0, kvec) / (2.0 * w), None, k0
    j = part.jet_split(k0, kvec, 1)
    s_val = j.c[0]
    s_der = j.derivative(1)
    p = -(1.0 / (2.0 * w)) * (sgn * s_der / (2.0 * w) - s_val / (2.0 * w**2))
    q = -(1.0 / (2.0 * w)) * sgn * s_val / (2.0 * w)
    return p, q, k0


def _nested_vector(f, windows, spec, initial=8):
    """Nested adaptive integration; f takes (N, len(windows)) arrays."""
    n = len(windows)
    if n == 1:
        a, b = windows[0]
        return integrate_1d(lambda x: f(x[:, None]), a, b, spec, initial)
    inner_spec = spec.loosened(0.2)
    state = {"err": 0.0, "nev": 0, "conv": True}

    def outer(xs):
        out = np.empty(len(xs), dtype=complex)
        for i, x0 in enumerate(xs):
            sub = _nested_vector(
                lambda pts, x0=x0: f(np.concatenate([np.full((len(pts), 1), x0), pts], axis=1)),
                windows[1:], inner_spec, initial)
            out[i] = sub.value
            state["err"] = max(state["err"], sub.err_est)
            state["nev"] += sub.n_evals
            state["conv"] = state["conv"] and sub.converged
        return out

    a, b = windows[0]
    res = integrate_1d(outer, a, b, spec, initial)
    err = res.err_est + state["err"] * abs(b - a)
    return SmearValue(res.value, max(err, spec.abs_tol), state["nev"], res.converged and state["conv"])


def _shell_windows(part, d):
    return part.window(None if False else 12.0)[1:]  # spatial axes only


def _smear_shell_product(shell_vars, g_fn, g_order, spec, d, initial=8):
    """Integrate over the product of shell variables' spatial momenta.

    shell_vars: list of dicts {part, kind, sign, mass, c (chain coefficient)}.
    g_fn(k_onshell_list) -> Jet of the coupled slot (order g_order) or None.
    """
    windows = []
    for v in shell_vars:
        windows.extend(v["part"].window(12.0)[1:])
    dp_idx = [i for i, v in enumerate(shell_vars) if v["kind"] == "delta_prime"]

    def integrand(X):
        npts = len(X)
        pvals, qvals, k0s, kvecs = [], [], [], []
        off = 0
        for v in shell_vars:
            kv = X[:, off:off + d - 1]
            off += d - 1
            need = v["kind"] == "delta_prime"
            p, q, k0 = _pq_coefficients(v["part"], v["sign"], v["mass"], kv, need)
            pvals.append(p)
            qvals.append(q)
            k0s.append(k0)
            kvecs.append(kv)
        if g_fn is None:
            out = np.ones(npts, dtype=complex)
            for p in pvals:
                out = out * p
            return out
        gjet = g_fn(k0s, kvecs)
        out = np.zeros(npts, dtype=complex)
        for r in range(len(dp_idx) + 1):
            from itertools import combinations
            for T in combinations(dp_idx, r):
                fac = np.ones(npts, dtype=complex)
                for i, v in enumerate(shell_vars):
                    if i in T:
                        fac = fac * qvals[i] * v["c"]
                    else:
                        fac = fac * pvals[i]
                out = out + fac * gjet.derivative(r)
        return out

    return _nested_vector(integrand, windows, spec, initial)


# -- pole-variable smears (no conservation) ------------------------------------------


def _pole_var_smear(part, kind, mass, spec, initial=8):
    """Integral over R^d of part(k)/(k^2-m^2)^p, PV (p=1) or FP (p=2)."""
    d = part.dim
    win = part.window(12.0)
    spatial = win[1:]
    k0win = win[0]
    inner_spec = spec.loosened(0.2)
    state = {"err": 0.0, "nev": 0, "conv": True}

    def per_k(kvec):
        w = float(_omega(np.asarray(kvec)[None, :], mass)[0])
        a = min(k0win[0], -w - 3.0)
        b = max(k0win[1], w + 3.0)

        def g(u):
            kv = np.broadcast_to(np.asarray(kvec, dtype=float), (len(u), d - 1))
            return part.val_split(u, kv)

        def dg(u):
            kv = np.broadcast_to(np.asarray(kvec, dtype=float), (len(u), d - 1))
            return part.jet_split(u, kv, 1).derivative(1)

        if kind == "pv1":
            vp = pv_simple(g, w, inner_spec, (a, b), dg, initial)
            vm = pv_simple(g, -w, inner_spec, (a, b), dg, initial)
            val = (vp.value - vm.value) / (2.0 * w)
            err = (vp.err_est + vm.err_est) / (2.0 * w)
            nev = vp.n_evals + vm.n_evals
            conv = vp.converged and vm.converged
        else:
            fp_p = fp_double(g, w, inner_spec, (a, b), dg, check=False, initial=initial)
            fp_m = fp_double(g, -w, inner_spec, (a, b), dg, check=False, initial=initial)
            vp = pv_simple(g, w, inner_spec, (a, b), dg, initial)
            vm = pv_simple(g, -w, inner_spec, (a, b), dg, initial)
            val = (fp_p.value + fp_m.value) / (4 * w**2) - (vp.value - vm.value) / (4 * w**3)
            err = (fp_p.err_est + fp_m.err_est) / (4 * w**2) + (vp.err_est + vm.err_est) / (4 * w**3)
            nev = fp_p.n_evals + fp_m.n_evals + vp.n_evals + vm.n_evals
            conv = all(x.converged for x in (fp_p, fp_m, vp, vm))
        state["err"] = max(state["err"], err)
        state["nev"] += nev
        state["conv"] = state["conv"] and conv
        return val

    def outer(pts):
        return np.array([per_k(p) for p in pts], dtype=complex)

    res = _nested_vector(lambda X: outer(X), spatial, spec, initial) if len(spatial) > 1 else None
    if res is None:
        a, b = spatial[0]
        res = integrate_1d(lambda x: outer(x[:, None]), a, b, spec, initial)
    width = np.prod([abs(b - a) for a, b in spatial])
    err = res.err_est + state["err"] * width
    return SmearValue(res.value, max(err, spec.abs_tol), state["nev"] + res.n_evals,
                      res.converged and state["conv"])


def _smooth_var_smear(part, spec, initial=8):
    win = part.window(12.0)
    return _nested_vector(lambda X: part.val_full(X), win, spec, initial)


# -- the public smear -----------------------------------------------------------------


def _single_var_value(factor, part, spec, initial=8):
    d = part.dim
    if factor.kind in ("delta", "delta_prime"):
        sv = [{"part": part, "kind": factor.kind, "sign": factor.sign,
               "mass": factor.mass, "c": 0.0}]
        return _smear_shell_product(sv, None, 0, spec, d, initial)
    if factor.kind in ("pv1", "fp2"):
        return _pole_var_smear(part, factor.kind, factor.mass, spec, initial)
    return _smooth_var_smear(part, spec, initial)


def _choose_eliminated(term):
    pole_vars = [i for i, f in enumerate(term.factors)
                 if f.kind in ("pv1", "fp2") and term.conservation[i] != 0]
    if len(pole_vars) > 1:
        raise NotImplementedError("at most one PV/FP factor per conserved term")
    if pole_vars:
        return pole_vars[0]
    for i in range(len(term.factors) - 1, -1, -1):
        if term.conservation[i] != 0 and term.factors[i].kind == "smooth":
            return i
    raise NotImplementedError("conservation delta must eliminate a PV/FP or smooth variable")


def _pole_margin_check(term, shell_vars, elim, parts, d):
    """Sample the on-shell boxes and verify the eliminated variable stays
    off the singular set by the pole margin."""
    f_e = term.factors[elim]
    if f_e.kind not in ("pv1", "fp2"):
        return
    s = term.conservation
    grids = []
    for i, v in enumerate(shell_vars):
        win = v["part"].window(8.0)[1:]
        axes = [np.linspace(a, b, 5) for a, b in win]
        grids.append(axes)
    margin = POLE_MARGIN_FACTOR * f_e.mass**2
    mesh = [np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
            for axes in grids]
    sizes = [m.shape[0] for m in mesh]
    idx = np.meshgrid(*[np.arange(n) for n in sizes], indexing="ij")
    k0e = 0.0
    kve = 0.0
    for i, v in enumerate(shell_vars):
        kv = mesh[i][idx[i].reshape(-1)]
        w = _omega(kv, v["mass"])
        sgn = 1.0 if v["sign"] == "+" else -1.0
        k0e = k0e + s[v["index"]] * sgn * w
        kve = kve + s[v["index"]] * kv
    k0e = -k0e / s[elim]
    kve = -kve / s[elim]
    u = k0e**2 - (np.asarray(kve)**2).sum(axis=-1) - f_e.mass**2
    if np.abs(u).min() < margin:
        raise PoleProximity(
            f"eliminated {f_e.kind} variable comes within {np.abs(u).min():.3g} "
            f"of the mass shell (margin {margin:.3g})")


def _smear_term(term, parts, spec, d, initial=8):
    if term.conservation is None:
        out = SmearValue(term.coeff, 0.0, 0)
        for f, part in zip(term.factors, parts):
            sub = _single_var_value(f, part, spec, initial)
            val = out.value * sub.value
            err = abs(out.value) * sub.err_est + abs(sub.value) * out.err_est
            out = SmearValue(val, err, out.n_evals + sub.n_evals, out.converged and sub.converged)
        return SmearValue(out.value, max(out.err_est, spec.abs_tol), out.n_evals, out.converged)

    s = term.conservation
    elim = _choose_eliminated(term)
    shell_vars = []
    for i, f in enumerate(term.factors):
        if i == elim:
            continue
        if f.kind in ("delta", "delta_prime"):
            shell_vars.append({"part": parts[i], "kind": f.kind, "sign": f.sign,
                               "mass": f.mass, "index": i,
                               "c": -s[i] / s[elim] if s[i] else 0.0})
        elif f.kind == "smooth" and s[i] == 0:
            raise NotImplementedError("detached smooth variable in conserved term")
        else:
            raise NotImplementedError(
                "conserved terms support shell factors plus one eliminated PV/FP/smooth variable")
    _pole_margin_check(term, shell_vars, elim, parts, d)

    f_e = term.factors[elim]
    part_e = parts[elim]
    n_dp = sum(1 for v in shell_vars if v["kind"] == "delta_prime")
    pole_power = {"pv1": 1, "fp2": 2}.get(f_e.kind, 0)
    m_e2 = f_e.mass**2

    def g_fn(k0s, kvecs):
        k0e = 0.0
        kve = 0.0
        for v, k0, kv in zip(shell_vars, k0s, kvecs):
            i = v["index"]
            if s[i]:
                k0e = k0e + s[i] * k0
                kve = kve + s[i] * kv
        k0e = -k0e / s[elim]
        kve = -kve / s[elim] if not np.isscalar(kve) else np.zeros_like(kvecs[0])
        j0 = Jet.variable(k0e, n_dp)
        g = part_e.jet_split(j0, kve, n_dp)
        if pole_power:
            u = j0 * j0 - ((np.asarray(kve)**2).sum(axis=-1) + m_e2)
            g = g * (u.reciprocal() ** pole_power)
        return g

    res = _smear_shell_product(shell_vars, g_fn, n_dp, spec, d, initial)
    return res * term.coeff


def smear(expr, packets, spec=None, initial=8):
    """Pair a DistExpr with one packet (or SmoothPart) per momentum argument."""
    spec = spec or QuadSpec()
    if len(packets) != expr.n_args:
        raise DimensionMismatch(f"expected {expr.n_args} packets, got {len(packets)}")
    dims = {p.dim for p in packets}
    if len(dims) != 1:
        raise DimensionMismatch("packets must share one dimension")
    d = dims.pop()
    total = SmearValue(0.0, 0.0, 0)
    for term in expr.terms:
        parts = [_as_part(p, f) for p, f in zip(packets, term.factors)]
        total = total + _smear_term(term, parts, spec, d, initial)
    return SmearValue(total.value, max(total.err_est, spec.abs_tol), total.n_evals, total.converged)


def commutator_pairing(expr2, f, g, spec=None):
    """smear(e, f (x) g) - smear(e, g (x) f) for a two-point expression."""
    if expr2.n_args != 2:
        raise DimensionMismatch("commutator pairing needs a two-point expression")
    a = smear(expr2, [f, g], spec)
    b = smear(expr2, [g, f], spec)
    return SmearValue(a.value - b.value, a.err_est + b.err_est,
                      a.n_evals + b.n_evals, a.converged and b.converged)
