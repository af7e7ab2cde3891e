import numpy as np
import pytest

from dipoleqft.quad import (QuadSpec, integrate_1d, integrate_nd, pv_simple, fp_double,
                            oscillatory_integrate, PoleAtBoundary, InconsistentFinitePart)
from dipoleqft.rng import Lcg

SPEC = QuadSpec()


def pv_exclusion_oracle(g, pole, window=(-12, 12), levels=(1e-2, 5e-3, 2.5e-3)):
    """Independent PV oracle: symmetric epsilon-exclusion Riemann sums with
    Richardson extrapolation in the exclusion radius (error -2 eps g'(pole)
    + O(eps^3), so the ladder eliminates eps then eps^3)."""
    vals = []
    for ex in levels:
        segs = [(window[0], pole - ex), (pole + ex, window[1])]
        tot = 0.0 + 0.0j
        for a, b in segs:
            x = np.linspace(a, b, 400001)
            x = 0.5 * (x[1:] + x[:-1])  # midpoint rule, symmetric about the pole
            tot += (np.asarray(g(x)) / (x - pole)).sum() * (b - a) / 400000
        vals.append(tot)
    w0 = 2 * vals[1] - vals[0]
    w1 = 2 * vals[2] - vals[1]
    return (8 * w1 - w0) / 7


def test_gaussian_integral():
    res = integrate_nd(lambda x: np.exp(-x[..., 0] ** 2), SPEC, 1)
    assert res.value == pytest.approx(np.sqrt(np.pi), rel=1e-10)


def test_odd_symmetry_2d():
    res = integrate_nd(lambda x: np.exp(-x[..., 0] ** 2 - x[..., 1] ** 2) * x[..., 0], SPEC, 2)
    assert abs(res.value) <= max(res.err_est, 1e-10)


def test_oscillatory_gaussian_no_spurious_values():
    res = integrate_1d(lambda x: np.exp(-x**2) * np.cos(50 * x), -12, 12, SPEC, initial=128)
    # exact value sqrt(pi) e^{-625}: machine-negligible
    assert abs(res.value) < 1e-12


def test_doubling_depth_stability():
    rng = Lcg(3)
    for _ in range(5):
        a, b, c = rng.uniform(0.5, 2), rng.uniform(-1, 1), rng.uniform(1, 3)
        f = lambda x: np.exp(-a * x[..., 0] ** 2) * np.cos(c * x[..., 0] + b)
        r1 = integrate_nd(f, SPEC, 1)
        deep = QuadSpec(max_depth=100)
        r2 = integrate_nd(f, deep, 1)
        assert abs(r1.value - r2.value) <= 2 * max(r1.err_est, 1e-14)


# -- principal value ------------------------------------------------------------


def test_pv_odd_gaussian_is_zero():
    res = pv_simple(lambda u: np.exp(-u**2), 0.0, SPEC)
    assert abs(res.value) <= max(res.err_est, 1e-10)


def test_pv_plateau_bump_is_zero():
    def bump(u):
        u = np.asarray(u)
        out = np.zeros_like(u)
        m = np.abs(u) < 2.0
        out[m] = np.exp(-1.0 / np.maximum(1 - (u[m] / 2) ** 2, 1e-300))
        return out
    res = pv_simple(bump, 0.0, SPEC, window=(-3, 3))
    assert abs(res.value) <= max(res.err_est, 1e-10)


def test_pv_offset_gaussian_vs_exclusion_oracle():
    g = lambda u: np.exp(-((u - 1.0) ** 2))
    res = pv_simple(g, 0.0, SPEC)
    want = pv_exclusion_oracle(g, 0.0)
    assert res.value == pytest.approx(want, rel=1e-6)


def test_pv_antisymmetry():
    g = lambda u: np.exp(-((u - 0.7) ** 2)) * (1 + 0.3 * u)
    u0 = 0.4
    a = pv_simple(g, u0, SPEC, window=(u0 - 9, u0 + 9))
    refl = lambda u: np.asarray(g(2 * u0 - u))
    b = pv_simple(refl, u0, SPEC, window=(u0 - 9, u0 + 9))
    assert a.value == pytest.approx(-b.value, rel=1e-9)


def test_pv_pole_at_boundary_raises():
    with pytest.raises(PoleAtBoundary):
        pv_simple(lambda u: np.exp(-u**2), 12.0 - 1e-9, SPEC)


def test_pv_pole_outside_window_regular():
    g = lambda u: np.exp(-u**2)
    res = pv_simple(g, 20.0, SPEC)
    brute = integrate_1d(lambda u: g(u) / (u - 20.0), -12, 12, SPEC)
    assert res.value == pytest.approx(brute.value, rel=1e-10)


# -- finite part ----------------------------------------------------------------


def test_fp_double_root_matches_plain_integral():
    # g has a double root at the pole: the integrand is regular
    g = lambda u: u**2 * np.exp(-u**2)
    res = fp_double(g, 0.0, SPEC)
    plain = integrate_1d(lambda u: np.exp(-u**2), -12, 12, SPEC)
    assert res.value == pytest.approx(plain.value, rel=1e-8)


def test_fp_gaussian_vs_pole_derivative_oracle():
    g = lambda u: np.exp(-u**2)
    res = fp_double(g, 0.0, SPEC)
    h = 1e-4
    vp = pv_simple(g, h, SPEC)
    vm = pv_simple(g, -h, SPEC)
    oracle = (vp.value - vm.value) / (2 * h)
    assert res.value == pytest.approx(oracle, abs=1e-5)


def test_fp_multiply_back_recovers_plain():
    rng = Lcg(5)
    for _ in range(3):
        c = rng.uniform(0.5, 1.5)
        u0 = rng.uniform(-0.5, 0.5)
        g = lambda u: np.exp(-c * (u - 0.2) ** 2)
        h = lambda u: (u - u0) ** 2 * np.asarray(g(u))
        res = fp_double(h, u0, SPEC, window=(u0 - 11, u0 + 11))
        plain = integrate_1d(lambda u: np.asarray(g(u)), u0 - 11, u0 + 11, SPEC)
        assert res.value == pytest.approx(plain.value, rel=1e-8)


def test_fp_dual_method_consistency_random_suite():
    rng = Lcg(20240831)
    for _ in range(20):
        a = rng.uniform(0.4, 2.0)
        b = rng.uniform(-0.8, 0.8)
        c = rng.uniform(-0.5, 0.5)
        g = lambda u: np.exp(-a * (u - b) ** 2) * (1 + c * u)
        u0 = rng.uniform(-0.5, 0.5)
        # fp_double raises InconsistentFinitePart if the two routes disagree
        res = fp_double(g, u0, SPEC, window=(u0 - 11, u0 + 11), check=True)
        assert res.converged


def test_fp_analytic_derivative_agrees_with_fd():
    g = lambda u: np.exp(-u**2) * (1 + 0.5 * u)
    dg = lambda u: np.exp(-u**2) * (0.5 - 2 * u * (1 + 0.5 * u))
    r1 = fp_double(g, 0.3, SPEC, dg=dg)
    r2 = fp_double(g, 0.3, SPEC)
    assert r1.value == pytest.approx(r2.value, rel=1e-7)


# -- oscillatory -----------------------------------------------------------------


def test_oscillatory_t_zero_reduces_to_plain():
    g = lambda p: np.exp(-p[..., 0] ** 2)
    r1 = oscillatory_integrate(g, lambda p: p[..., 0], 0.0, SPEC)
    r2 = integrate_nd(g, SPEC, 1)
    assert r1.value == pytest.approx(r2.value, rel=1e-12)


def test_oscillatory_linear_phase_closed_form():
    # Int e^{-x^2} e^{i t x} dx = sqrt(pi) e^{-t^2/4}
    t = 3.0
    r = oscillatory_integrate(lambda p: np.exp(-p[..., 0] ** 2), lambda p: p[..., 0], t, SPEC)
    assert r.value == pytest.approx(np.sqrt(np.pi) * np.exp(-t**2 / 4), rel=1e-8)


def test_oscillatory_bump_decay_rate():
    # chi+-type integrand (energy bump times on-shell Gaussian packet slice)
    # against e^{i t (k0 - omega)}: superpolynomial decay in t
    m, kk = 1.0, 0.4
    w = np.sqrt(kk**2 + m**2)
    eps, sig = 0.9, 0.12

    def bump(p):
        u = p[..., 0] ** 2 - w**2
        x = (eps - np.abs(u)) / (eps / 2)
        out = np.zeros_like(u)
        out[x >= 1] = 1.0
        mid = (x > 0) & (x < 1)
        g1 = np.exp(-1.0 / np.maximum(x[mid], 1e-300))
        g2 = np.exp(-1.0 / np.maximum(1 - x[mid], 1e-300))
        out[mid] = g1 / (g1 + g2)
        return out * (p[..., 0] > 0) * np.exp(-0.5 * ((p[..., 0] - w) / sig) ** 2)

    phase = lambda p: p[..., 0] - w
    window = [(np.sqrt(w**2 - eps), np.sqrt(w**2 + eps))]
    tight = QuadSpec(abs_tol=1e-14, rel_tol=1e-12)
    vals = {}
    for t in (10.0, 20.0, 40.0):
        vals[t] = abs(oscillatory_integrate(bump, phase, t, tight, window=window).value)
    # dense-grid oracle at t = 10 pins the scale; ratios check the decay
    x = np.linspace(window[0][0], window[0][1], 200001)
    oracle = np.trapezoid(bump(x[:, None]) * np.exp(1j * 10.0 * phase(x[:, None])), x)
    assert vals[10.0] == pytest.approx(abs(oracle), rel=1e-6)
    assert vals[10.0] / vals[20.0] >= 4
    assert vals[20.0] / vals[40.0] >= 4
