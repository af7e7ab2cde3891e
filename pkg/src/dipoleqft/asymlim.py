"""Finite-time values and t -> +infinity limits of the wave-operator
multipliers against single and double mass-shell poles.

The closed-form targets: for the squared denominator the limit of
chi^d_t(a,k)/(k^2-m^2)^2 is

    in:  +i pi (delta'^+ - delta'^-)     loc: FP 1/(k^2-m^2)^2
    out: -i pi (delta'^+ - delta'^-)

and for the single denominator the limit of chi^d_t(a,k)/(k^2-m^2) is

    in:  -i pi (delta^+ - delta^-)       loc: PV 1/(k^2-m^2)
    out: +i pi (delta^+ - delta^-)

The single-pole signs are opposite to what a naive transcription of the
squared-pole table would suggest; the derivative pairing of delta' absorbs
one minus sign.  Both tables are reproduced by stationary-phase analysis of
the multiplier phases and verified numerically by the limit suites here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._jets import Jet
from .dist import DistExpr, Term, ShellFactor, SmoothPart, smear
from .quad import QuadSpec, SmearValue, integrate_1d, pv_simple, fp_double
from .waveop import Cutoff, chi_t

TOL_FINAL = 1e-2       # relative, on the last grid point
MIN_RATIO = 4.0        # deviation decay per doubling of t, on the grid tail


class NonDecaying(ArithmeticError):
    """Deviations from the limit fail to decrease along the grid tail."""


@dataclass
class TGrid:
    values: tuple = (5.0, 10.0, 20.0, 40.0, 80.0)
    extrapolation: str = "ratio-fit"   # 'none' | 'ratio-fit', diagnostic only

    def __post_init__(self):
        vs = tuple(float(v) for v in self.values)
        if len(vs) < 1 or any(b <= a for a, b in zip(vs, vs[1:])):
            raise ValueError("t grid must be strictly increasing and nonempty")
        self.values = vs


def make_target(power, channel, mass=1.0):
    """The limit distribution as a one-variable DistExpr."""
    if channel == "loc":
        return DistExpr(1, [Term(1.0, [ShellFactor("pv1" if power == 1 else "fp2", None, mass)])])
    kind = "delta" if power == 1 else "delta_prime"
    if power == 1:
        pref = -1j * np.pi if channel == "in" else 1j * np.pi
    else:
        pref = 1j * np.pi if channel == "in" else -1j * np.pi
    return DistExpr(1, [
        Term(pref, [ShellFactor(kind, "+", mass)]),
        Term(-pref, [ShellFactor(kind, "-", mass)]),
    ])


@dataclass
class LimitTarget:
    pole_power: int
    channel: str
    mass: float = 1.0
    target_expr: DistExpr = None

    def __post_init__(self):
        if self.pole_power not in (1, 2):
            raise ValueError("pole_power must be 1 or 2")
        if self.channel not in ("in", "loc", "out"):
            raise ValueError("channel must be in/loc/out")
        if self.target_expr is None:
            self.target_expr = make_target(self.pole_power, self.channel, self.mass)


def _band_edges(w, eps):
    return np.sqrt(max(w * w - eps, 1e-12)), np.sqrt(w * w + eps)


def finite_t_value(power, channel, t, packet, spec=None, mass=1.0, cutoff=None):
    """<chi^d_t(channel,.)/(k^2-m^2)^power, f> at finite t (d = 2)."""
    spec = spec or QuadSpec()
    if packet.dim != 2:
        raise ValueError("finite_t_value is desk-scale d = 2 only")
    if channel == "loc":
        expr = DistExpr(1, [Term(1.0, [ShellFactor("pv1" if power == 1 else "fp2", None, mass)])])
        return smear(expr, [packet], spec)
    cutoff = cutoff or Cutoff(mass**2 / 2)
    eps = cutoff.eps
    part = SmoothPart(packet, chi_t(channel, t, mass, cutoff))
    s_corr = 1.0 if channel == "in" else -1.0
    k1win = packet.window(12.0)[1]
    inner_spec = spec.loosened(0.2)
    state = {"err": 0.0, "nev": 0, "conv": True}

    def per_k1(k1):
        w = float(np.sqrt(k1 * k1 + mass**2))
        lo, hi = _band_edges(w, eps)
        init = int(max(8, min(400, abs(t) * (hi - lo) * 1.5)))
        total = 0.0 + 0.0j
        err = 0.0
        for sgn in (1.0, -1.0):
            pole = sgn * w
            band = (sgn * lo, sgn * hi) if sgn > 0 else (sgn * hi, sgn * lo)
            kv = np.array([k1])

            def nval(u):
                return part.val_split(u, np.broadcast_to(kv, (len(u), 1)))

            def njet(u, order):
                return part.jet_split(u, np.broadcast_to(kv, (len(u), 1)), order)

            if power == 1:
                g = lambda u: nval(u) / (u + pole)
                dg = lambda u: (njet(u, 1) / (Jet.variable(u, 1) + pole)).derivative(1)
                r = pv_simple(g, pole, inner_spec, band, dg, initial=init)
                total += r.value
                err += r.err_est
                rc = integrate_1d(lambda u: s_corr * 1j * t * nval(u) / (2 * u),
                                  band[0], band[1], inner_spec, initial=init)
                total += rc.value
                err += rc.err_est
                state["nev"] += r.n_evals + rc.n_evals
                state["conv"] = state["conv"] and r.converged and rc.converged
            else:
                g2 = lambda u: nval(u) / (u + pole) ** 2
                dg2 = lambda u: (njet(u, 1) / ((Jet.variable(u, 1) + pole) ** 2)).derivative(1)
                r = fp_double(g2, pole, inner_spec, band, dg2, check=False, initial=init)
                gc = lambda u: s_corr * 1j * t * nval(u) / (2 * u * (u + pole))
                dgc = lambda u: ((njet(u, 1) * (s_corr * 1j * t)
                                  / (Jet.variable(u, 1) * 2.0)
                                  / (Jet.variable(u, 1) + pole)).derivative(1))
                rc = pv_simple(gc, pole, inner_spec, band, dgc, initial=init)
                total += r.value + rc.value
                err += r.err_est + rc.err_est
                state["nev"] += r.n_evals + rc.n_evals
                state["conv"] = state["conv"] and r.converged and rc.converged
        state["err"] = max(state["err"], err)
        return total

    def outer(xs):
        return np.array([per_k1(x) for x in xs], dtype=complex)

    init_outer = int(max(16, min(96, abs(t))))
    res = integrate_1d(outer, k1win[0], k1win[1], spec, initial=init_outer)
    err = res.err_est + state["err"] * (k1win[1] - k1win[0])
    return SmearValue(res.value, max(err, spec.abs_tol), res.n_evals + state["nev"],
                      res.converged and state["conv"])


def limit_and_compare(target, grid, packet, spec=None, cutoff=None,
                      tol_final=TOL_FINAL, min_ratio=MIN_RATIO, strict=False):
    """Evaluate the finite-t values along the grid and compare to the target.

    Pass iff the deviations decrease along the grid tail, the final doubling
    shrinks them by at least min_ratio, and the final relative deviation is
    within tol_final.  Deviations that sit at the quadrature noise floor at
    every t count as converged (the loc channel is the extreme case).
    """
    spec = spec or QuadSpec()
    if isinstance(target, LimitTarget):
        tgt = target
    else:
        tgt = LimitTarget(*target)
    grid = grid if isinstance(grid, TGrid) else TGrid(tuple(grid))
    ref = smear(tgt.target_expr, [packet], spec)
    scale = max(abs(ref.value), 1e-300)
    values, deviations, errs = [], [], []
    for t in grid.values:
        v = finite_t_value(tgt.pole_power, tgt.channel, t, packet, spec, tgt.mass, cutoff)
        values.append(v)
        deviations.append(abs(v.value - ref.value))
        errs.append(v.err_est + ref.err_est)
    ratios = [deviations[i] / deviations[i + 1] if deviations[i + 1] > 0 else np.inf
              for i in range(len(deviations) - 1)]
    noise_floor = all(d <= 4 * e for d, e in zip(deviations, errs))
    tail = deviations[-3:] if len(deviations) >= 3 else deviations
    monotone_tail = all(a > b for a, b in zip(tail, tail[1:]))
    final_ok = deviations[-1] <= tol_final * scale
    ratio_ok = (ratios[-1] >= min_ratio) if ratios else True
    passed = bool(noise_floor or (monotone_tail and ratio_ok and final_ok))
    extrapolated = None
    if grid.extrapolation == "ratio-fit" and len(values) >= 3 and not noise_floor:
        d1 = values[-2].value - values[-3].value
        d2 = values[-1].value - values[-2].value
        if abs(d1) > 0 and abs(d2) < abs(d1):
            q = d2 / d1
            extrapolated = values[-1].value + d2 * q / (1 - q)
    report = {
        "power": tgt.pole_power,
        "channel": tgt.channel,
        "t_grid": list(grid.values),
        "target": ref.value,
        "target_err": ref.err_est,
        "values": [v.value for v in values],
        "err_ests": [v.err_est for v in values],
        "deviations": deviations,
        "decay_ratios": ratios,
        "noise_floor": noise_floor,
        "monotone_tail": monotone_tail,
        "final_rel_deviation": deviations[-1] / scale,
        "extrapolated": extrapolated,
        "pass": passed,
    }
    if strict and not passed and not monotone_tail:
        raise NonDecaying(f"deviations do not decrease along the tail: {deviations}")
    return report
