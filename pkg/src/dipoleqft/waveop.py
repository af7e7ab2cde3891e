"""Cutoff functions and finite-time wave-operator multipliers.

chi_t carries the Haag-Ruelle phases on the energy-cutoff bumps; chi_d_t adds
the dipole correction [1 +- i t (k^2-m^2)/(2 k^0)] that compensates the linear
t-growth on derivative shells.  Every multiplier evaluates both pointwise and
on k^0-jets, so delta'-reductions get exact derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._jets import Jet

CHANNELS = ("in", "loc", "out")


@dataclass(frozen=True)
class Cutoff:
    """Smooth bump phi: supp in (-eps, eps), identically 1 on [-eps/2, eps/2].

    phi(kappa) = h((eps - |kappa|)/(eps/2)) with h(x) = g(x)/(g(x) + g(1-x)),
    g(x) = exp(-1/x) for x > 0 and 0 otherwise.
    """

    eps: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    def phi(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        x = (self.eps - np.abs(kappa)) / (self.eps / 2)
        out = np.zeros_like(kappa)
        out[x >= 1.0] = 1.0
        mid = (x > 0.0) & (x < 1.0)
        if mid.any():
            xm = x[mid]
            g1 = np.exp(-1.0 / xm)
            g2 = np.exp(-1.0 / (1.0 - xm))
            out[mid] = g1 / (g1 + g2)
        return out

    def phi_jet(self, kappa):
        """phi composed with a Jet argument (branch-wise, exact derivatives)."""
        if not isinstance(kappa, Jet):
            return self.phi(kappa)
        k0 = np.asarray(kappa.c[0], dtype=float)
        order = kappa.order
        sgn = np.where(k0 >= 0.0, 1.0, -1.0)
        abs_j = kappa * sgn
        x = (abs_j * -1.0 + self.eps) * (2.0 / self.eps)
        x0 = np.asarray(x.c[0], dtype=float)
        plateau = x0 >= 1.0
        dead = x0 <= 0.0
        # clip the constant coefficient so the transition formula stays finite
        xc = Jet([np.clip(x0, 1e-9, 1.0 - 1e-9)] + list(x.c[1:]), order)
        g1 = (xc.reciprocal() * -1.0).exp()
        g2 = ((1.0 - xc).reciprocal() * -1.0).exp()
        h = g1 / (g1 + g2)
        one = Jet.const(1.0, order, like=k0)
        zero = Jet.const(0.0, order, like=k0)
        return h.where(~(plateau | dead), one.where(plateau, zero))


@dataclass
class Multiplier:
    """Smooth momentum-space multiplier.

    kinds: 'one', 'poly_u' (polynomial in u = k^2 - m^2 with coeffs u_coeffs),
    'chi_t', 'haag_ruelle' (alias of chi_t), 'chi_d_t', 'product'.
    """

    kind: str
    channel: str = "loc"
    t: float = 0.0
    mass: float = 1.0
    cutoff: Cutoff = None
    u_coeffs: tuple = ()
    factors: tuple = ()

    def __post_init__(self):
        if self.kind not in ("one", "poly_u", "chi_t", "haag_ruelle", "chi_d_t", "product"):
            raise ValueError(f"unknown multiplier kind {self.kind!r}")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.cutoff is None and self.kind in ("chi_t", "haag_ruelle", "chi_d_t"):
            object.__setattr__(self, "cutoff", Cutoff(self.mass**2 / 2))
        if self.cutoff is not None and not (0 < self.cutoff.eps < self.mass**2):
            raise ValueError("cutoff requires 0 < eps < m^2")

    # -- evaluation -------------------------------------------------------------

    def value_split(self, k0, kvec):
        """Value at k = (k0, kvec); k0 (...,), kvec (..., d-1)."""
        k0 = np.asarray(k0, dtype=float)
        kvec = np.atleast_1d(np.asarray(kvec, dtype=float))
        if self.kind == "one":
            return np.ones(k0.shape, dtype=complex)
        w2 = (kvec**2).sum(axis=-1) + self.mass**2
        w = np.sqrt(w2)
        u = (k0 - w) * (k0 + w)  # factored so u == 0.0 exactly on shell
        if self.kind == "poly_u":
            out = np.zeros(k0.shape, dtype=complex)
            for j, c in enumerate(self.u_coeffs):
                out = out + c * u**j
            return out
        if self.kind == "product":
            out = np.ones(k0.shape, dtype=complex)
            for f in self.factors:
                out = out * f.value_split(k0, kvec)
            return out
        if self.channel == "loc":
            return np.ones(k0.shape, dtype=complex)
        ph = self.cutoff.phi(u)
        s_ch = -1.0 if self.channel == "in" else 1.0
        chi = np.where(
            k0 > 0,
            ph * np.exp(1j * s_ch * (k0 - w) * self.t),
            ph * np.exp(1j * s_ch * (k0 + w) * self.t),
        )
        if self.kind in ("chi_t", "haag_ruelle"):
            return chi
        s_corr = 1.0 if self.channel == "in" else -1.0
        safe_k0 = np.where(np.abs(k0) < 1e-12, 1.0, k0)
        corr = 1.0 + s_corr * 1j * self.t * u / (2.0 * safe_k0)
        return np.where(ph > 0, corr * chi, 0.0 * chi)

    def value(self, pts):
        """Value at points of shape (..., d)."""
        pts = np.asarray(pts, dtype=float)
        return self.value_split(pts[..., 0], pts[..., 1:])

    def jet_split(self, k0, kvec, order):
        """Jet in the k^0 direction at (k0, kvec)."""
        kvec = np.atleast_1d(np.asarray(kvec, dtype=float))
        j0 = k0 if isinstance(k0, Jet) else Jet.variable(np.asarray(k0, dtype=float), order)
        base0 = j0.c[0]
        if self.kind == "one":
            return Jet.const(np.ones(base0.shape, dtype=complex), order, like=base0)
        w2 = (kvec**2).sum(axis=-1) + self.mass**2
        w = np.sqrt(w2)
        u = (j0 - w) * (j0 + w)  # factored so the constant term vanishes on shell
        if self.kind == "poly_u":
            out = Jet.const(np.zeros(base0.shape, dtype=complex), order, like=base0)
            for j, c in enumerate(self.u_coeffs):
                out = out + (u**j) * c
            return out
        if self.kind == "product":
            out = Jet.const(np.ones(base0.shape, dtype=complex), order, like=base0)
            for f in self.factors:
                out = out * f.jet_split(j0, kvec, order)
            return out
        if self.channel == "loc":
            return Jet.const(np.ones(base0.shape, dtype=complex), order, like=base0)
        ph = self.cutoff.phi_jet(u)
        s_ch = -1.0 if self.channel == "in" else 1.0
        pos = base0 > 0
        phase_p = ((j0 - w) * (1j * s_ch * self.t)).exp()
        phase_m = ((j0 + w) * (1j * s_ch * self.t)).exp()
        chi = ph * phase_p.where(pos, phase_m)
        if self.kind in ("chi_t", "haag_ruelle"):
            return chi
        s_corr = 1.0 if self.channel == "in" else -1.0
        j0safe = Jet([np.where(np.abs(base0) < 1e-12, 1.0, base0)] + list(j0.c[1:]), order)
        corr = (u / (j0safe * 2.0)) * (s_corr * 1j * self.t) + 1.0
        return corr * chi

    # -- serialization ------------------------------------------------------------

    def to_dict(self):
        d = {"kind": self.kind, "channel": self.channel, "t": self.t, "mass": self.mass}
        if self.cutoff is not None:
            d["eps"] = self.cutoff.eps
        if self.u_coeffs:
            d["u_coeffs"] = [[complex(c).real, complex(c).imag] for c in self.u_coeffs]
        if self.factors:
            d["factors"] = [f.to_dict() for f in self.factors]
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            channel=d.get("channel", "loc"),
            t=float(d.get("t", 0.0)),
            mass=float(d.get("mass", 1.0)),
            cutoff=Cutoff(float(d["eps"])) if "eps" in d else None,
            u_coeffs=tuple(complex(c[0], c[1]) for c in d.get("u_coeffs", ())),
            factors=tuple(cls.from_dict(f) for f in d.get("factors", ())),
        )


def chi_t(channel, t, mass=1.0, cutoff=None):
    return Multiplier("chi_t", channel, t, mass, cutoff)


def chi_d_t(channel, t, mass=1.0, cutoff=None):
    return Multiplier("chi_d_t", channel, t, mass, cutoff)


def haag_ruelle(channel, t, mass=1.0, cutoff=None):
    return Multiplier("haag_ruelle", channel, t, mass, cutoff)


def poly_u(coeffs, mass=1.0):
    return Multiplier("poly_u", mass=mass, u_coeffs=tuple(coeffs))


def eval_multiplier(mu, k):
    """Pointwise multiplier value at momentum k."""
    return complex(np.asarray(mu.value(np.asarray(k, dtype=float))))


def apply_waveop(mu, packet):
    """Momentum-space action of the wave operator: k -> mu(k) f(k)."""
    from .dist import SmoothPart

    return SmoothPart(packet, mu)


def verify_lemma_a3_a4(which, channel, sign, t_list, packets, spec, mass=1.0, cutoff=None):
    """Check chi^d_t-invariance of shell smears: A.3 on delta, A.4 on delta'.

    Returns a report with per-case deviations; all smears use the same
    quadrature spec so the deviations are pure multiplier effects.
    """
    from . import dist

    kind = "delta" if which.upper() == "A3" else "delta_prime"
    rows = []
    worst = 0.0
    for ip, pkt in enumerate(packets):
        expr = dist.single_factor(kind, sign, mass)
        plain = dist.smear(expr, [pkt], spec)
        scale = max(abs(plain.value), 1e-30)
        for t in t_list:
            mu = chi_d_t(channel, t, mass, cutoff)
            mul = dist.smear(expr, [dist.SmoothPart(pkt, mu)], spec)
            dev = abs(mul.value - plain.value) / scale
            worst = max(worst, dev)
            rows.append({
                "packet": ip, "t": t, "plain": plain.value, "multiplied": mul.value,
                "rel_deviation": dev,
            })
    return {"which": which.upper(), "channel": channel, "sign": sign,
            "max_rel_deviation": worst, "cases": rows}
