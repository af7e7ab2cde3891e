"""Numeric-symbolic calculus for mass-shell distributions and the scattering
of dipole quantum fields: wave packets, quadrature with pole rules, shell
smearing, finite-time wave operators and their asymptotics, the Levy-driven
moment model, dipole form factors / S-matrix, and first-order perturbation
theory of the exponential model."""

from .packets import WavePacket, Poly, minkowski_square_poly, MismatchedGaussian
from .quad import QuadSpec, SmearValue, integrate_nd, pv_simple, fp_double, oscillatory_integrate
from .dist import (DistExpr, Term, ShellFactor, SmoothPart, smear, apply_multiplier,
                   commutator_pairing, single_factor, PoleProximity, DimensionMismatch)
from .waveop import Cutoff, Multiplier, chi_t, chi_d_t, haag_ruelle, poly_u, eval_multiplier, apply_waveop

__all__ = [
    "WavePacket", "Poly", "minkowski_square_poly", "MismatchedGaussian",
    "QuadSpec", "SmearValue", "integrate_nd", "pv_simple", "fp_double", "oscillatory_integrate",
    "DistExpr", "Term", "ShellFactor", "SmoothPart", "smear", "apply_multiplier",
    "commutator_pairing", "single_factor", "PoleProximity", "DimensionMismatch",
    "Cutoff", "Multiplier", "chi_t", "chi_d_t", "haag_ruelle", "poly_u",
    "eval_multiplier", "apply_waveop",
]

__version__ = "0.1.0"
