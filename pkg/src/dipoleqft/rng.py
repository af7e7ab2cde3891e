"""Deterministic pseudo-random packet suites.

Uses a 64-bit linear congruential generator with Knuth's MMIX constants
(a = 6364136223846793005, c = 1442695040888963407, modulus 2^64) so seeded
test suites are bit-reproducible across platforms and languages.  Normal
variates come from Box-Muller on consecutive uniforms.
"""

from __future__ import annotations

import math

import numpy as np

from .packets import Poly, WavePacket

LCG_MULT = 6364136223846793005
LCG_INC = 1442695040888963407
LCG_MOD = 1 << 64


class Lcg:
    def __init__(self, seed):
        self.state = (int(seed) * LCG_MULT + LCG_INC) % LCG_MOD

    def next_u64(self):
        self.state = (self.state * LCG_MULT + LCG_INC) % LCG_MOD
        return self.state

    def uniform(self, lo=0.0, hi=1.0):
        return lo + (hi - lo) * (self.next_u64() / LCG_MOD)

    def normal(self):
        u1 = max(self.uniform(), 1e-18)
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def choice(self, seq):
        return seq[self.next_u64() % len(seq)]


def random_packet(rng, dim=2, max_degree=1, center_scale=1.0, width_range=(0.6, 1.6),
                  center=None, allow_phase=True):
    """A generic random packet: diagonal-dominant SPD widths, optional linear
    polynomial factor and phase shift."""
    if center is None:
        center = np.array([rng.uniform(-center_scale, center_scale) for _ in range(dim)])
    diag = np.array([rng.uniform(*width_range) for _ in range(dim)])
    a = np.diag(diag)
    # mild symmetric off-diagonal perturbation, kept SPD
    for i in range(dim):
        for j in range(i + 1, dim):
            off = 0.1 * rng.uniform(-1, 1) * math.sqrt(diag[i] * diag[j])
            a[i, j] = a[j, i] = off
    poly = Poly.const(dim, complex(rng.uniform(0.5, 1.5), rng.uniform(-0.3, 0.3)))
    if max_degree >= 1 and rng.uniform() < 0.5:
        axis = rng.next_u64() % dim
        poly = poly + Poly.coordinate(dim, axis) * complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2))
    shift = np.zeros(dim)
    if allow_phase and rng.uniform() < 0.4:
        shift = np.array([rng.uniform(-0.4, 0.4) for _ in range(dim)])
    return WavePacket(dim, poly, center, a, shift)


def onshell_packet(rng, mass=1.0, sign="+", momentum_range=(-0.35, 0.35),
                   width_range=(0.085, 0.12), max_degree=0):
    """Packet concentrated on the +/- mass shell: the natural probe for
    asymptotic-limit suites (narrow in k, centered at (sgn*omega(p), p))."""
    p = rng.uniform(*momentum_range)
    w = rng.uniform(*width_range)
    sgn = 1.0 if sign == "+" else -1.0
    center = np.array([sgn * math.sqrt(p * p + mass * mass), p])
    a = np.diag([1.0 / w**2, 1.0 / w**2])
    poly = Poly.const(2, 1.0)
    if max_degree >= 1 and rng.uniform() < 0.5:
        poly = poly + (Poly.coordinate(2, 1) - Poly.const(2, p)) * rng.uniform(-2.0, 2.0)
    return WavePacket(2, poly, center, a)
