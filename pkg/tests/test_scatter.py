import numpy as np
import pytest
from scipy.optimize import brentq

from dipoleqft.packets import WavePacket
from dipoleqft.quad import QuadSpec
from dipoleqft.dist import DistExpr, smear
from dipoleqft.model import MomentModel, wightman_truncated
from dipoleqft.waveop import Cutoff
from dipoleqft.scatter import (ChannelAssignment, mollified_shell_pairing,
                               finite_time_wightman, form_factor, smatrix_truncated,
                               smatrix_limit_path, divergence_demo,
                               RegularizationNotConverged)

M = 1.0
SPEC = QuadSpec(abs_tol=1e-9, rel_tol=1e-8)
CUT = Cutoff(0.9)
MODEL3 = MomentModel(cumulants={2: 1.0, 3: 1.0})
MODEL4 = MomentModel(cumulants={2: 1.0, 3: 1.0, 4: 1.0})


def phase_space_sum(f, g, q0, q1, m1=1.0, m2=1.0):
    """Closed-form value of <delta+_{m1}(k) delta+_{m2}(k+Q) f(k) g(k+Q)>:
    sum over roots of the residual energy constraint after both shell
    reductions, with Jacobian 1/(2 omega_1 |h'|)."""
    w1 = lambda p: np.sqrt(p * p + m1 * m1)
    h = lambda p: (w1(p) + q0) ** 2 - (p + q1) ** 2 - m2 * m2
    roots = []
    grid = np.linspace(-30, 30, 24001)
    hv = np.array([h(p) for p in grid])
    for i in range(len(grid) - 1):
        if hv[i] == 0.0:
            roots.append(grid[i])
        elif hv[i] * hv[i + 1] < 0:
            roots.append(brentq(h, grid[i], grid[i + 1], xtol=1e-14))
    total = 0.0
    for p in roots:
        if w1(p) + q0 <= 0:
            continue
        dh = (h(p + 1e-7) - h(p - 1e-7)) / 2e-7
        k1 = np.array([w1(p), p])
        k2 = np.array([w1(p) + q0, p + q1])
        total += complex(f.eval(k1)) * complex(g.eval(k2)) / (2 * w1(p) * abs(dh))
    return total


def test_mollified_engine_vs_phase_space_deltas():
    f = WavePacket.gaussian(center=[np.sqrt(1.09), 0.3], widths=np.diag([6.0, 6.0]))
    g = WavePacket.gaussian(center=[np.sqrt(1.09) + 0.4, 1.2], widths=np.diag([6.0, 6.0]))
    q = (0.4, 0.9)
    val, rep = mollified_shell_pairing(["delta", "delta"], ["+", "+"], [1, -1],
                                       [f, g], SPEC, [M, M], offset=q)
    want = phase_space_sum(f, g, *q)
    assert val.value == pytest.approx(want, rel=2e-3)
    assert abs(val.value - want) <= 3 * val.err_est


def test_mollified_engine_vs_phase_space_delta_prime():
    f = WavePacket.gaussian(center=[np.sqrt(1.09), 0.3], widths=np.diag([6.0, 6.0]))
    g = WavePacket.gaussian(center=[np.sqrt(1.09) + 0.4, 1.2], widths=np.diag([6.0, 6.0]))
    q = (0.4, 0.9)
    val, rep = mollified_shell_pairing(["delta_prime", "delta"], ["+", "+"], [1, -1],
                                       [f, g], SPEC, [M, M], offset=q)
    h = 1e-5
    up = phase_space_sum(f, g, *q, m1=np.sqrt(1 + h))
    dn = phase_space_sum(f, g, *q, m1=np.sqrt(1 - h))
    want = -(up - dn) / (2 * h)
    assert val.value == pytest.approx(want, rel=5e-3)


def neg_packet(p=-0.2, width=4.0):
    return WavePacket.gaussian(center=[-np.sqrt(p * p + 1), p], widths=np.diag([width, width]))


def pos_packet(p=0.6, width=4.0):
    return WavePacket.gaussian(center=[np.sqrt(p * p + 1), p], widths=np.diag([width, width]))


def mid_packet():
    return WavePacket.gaussian(center=[-0.15, -0.4], widths=np.diag([1.0, 1.0]))


def test_form_factor_n2_equals_w2():
    f = neg_packet()
    g = pos_packet()
    for chans in (("loc", "loc"), ("in", "out"), ("out", "in")):
        a = form_factor(2, ChannelAssignment(chans), MODEL3, [f, g], SPEC)
        b = smear(wightman_truncated(2, MODEL3), [f, g], SPEC)
        assert a.value == pytest.approx(b.value, rel=1e-12)


def test_form_factor_all_loc_equals_plain_w3():
    packets = [neg_packet(), mid_packet(), pos_packet()]
    a = form_factor(3, ChannelAssignment(("loc", "loc", "loc")), MODEL3, packets, SPEC)
    b = smear(wightman_truncated(3, MODEL3), packets, SPEC)
    assert a.value == pytest.approx(b.value, rel=1e-9)


def test_form_factor_in_loc_out_reduces_to_loc_term():
    # the j=1 and j=3 slots sit on kinematically empty shell products, so the
    # limit expression is carried by the j=2 (loc) term alone
    packets = [neg_packet(), mid_packet(), pos_packet()]
    a = form_factor(3, ChannelAssignment(("in", "loc", "out")), MODEL3, packets, SPEC)
    e = wightman_truncated(3, MODEL3)
    b = smear(DistExpr(3, [e.terms[1]]), packets, SPEC)
    assert a.value == pytest.approx(b.value, rel=1e-6)


def test_finite_time_all_loc_is_plain_smear():
    packets = [neg_packet(), mid_packet(), pos_packet()]
    for t in (0.0, 7.0):
        a = finite_time_wightman(3, ChannelAssignment(("loc",) * 3, t), MODEL3, packets, SPEC, CUT)
        b = smear(wightman_truncated(3, MODEL3), packets, SPEC)
        assert a.value == pytest.approx(b.value, rel=1e-12)


def test_finite_time_converges_to_form_factor():
    # acceptance-8 pattern: with channels (in, loc, out) every multiplier acts
    # trivially (Lemma A.3/A.4 exactly, phi-support kills the rest), so the
    # deviations sit at the quadrature noise floor for every t
    packets = [neg_packet(), mid_packet(), pos_packet()]
    target = form_factor(3, ChannelAssignment(("in", "loc", "out")), MODEL3, packets, SPEC)
    devs = []
    for t in (5.0, 10.0, 20.0, 40.0):
        v = finite_time_wightman(3, ChannelAssignment(("in", "loc", "out"), t),
                                 MODEL3, packets, SPEC, CUT)
        devs.append(abs(v.value - target.value))
        assert abs(v.value - target.value) <= 4 * (v.err_est + target.err_est)
    assert devs[-1] <= 2e-2 * abs(target.value)


def test_multi_time_order_independence():
    packets = [neg_packet(), mid_packet(), pos_packet()]
    a = finite_time_wightman(3, ChannelAssignment(("in", "loc", "out"), (40.0, 0.0, 5.0)),
                             MODEL3, packets, SPEC, CUT)
    b = finite_time_wightman(3, ChannelAssignment(("in", "loc", "out"), (5.0, 0.0, 40.0)),
                             MODEL3, packets, SPEC, CUT)
    assert a.value == pytest.approx(b.value, abs=4 * (a.err_est + b.err_est))


def test_t0_chit_equals_chidt():
    packets = [neg_packet(), mid_packet(), pos_packet()]
    a = finite_time_wightman(3, ChannelAssignment(("in", "loc", "out"), 0.0),
                             MODEL3, packets, SPEC, CUT, "chi_t")
    b = finite_time_wightman(3, ChannelAssignment(("in", "loc", "out"), 0.0),
                             MODEL3, packets, SPEC, CUT, "chi_d_t")
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_smatrix_negative_energy_packet_vanishes():
    f1 = WavePacket.gaussian(center=[-1.3, 0.2], widths=np.diag([18.0, 18.0]))
    f2 = pos_packet(0.1)
    f3 = pos_packet(-0.4)
    val, rep = smatrix_truncated(3, 1, MODEL3, [f1, f2, f3], SPEC)
    assert abs(val.value) <= val.err_est


def test_smatrix_scaling_in_cumulant():
    packets = [pos_packet(0.5, 9.0), pos_packet(0.2, 9.0), pos_packet(0.3, 9.0)]
    m1 = MomentModel(cumulants={2: 1.0, 3: 1.0})
    m10 = MomentModel(cumulants={2: 1.0, 3: 10.0})
    v1, _ = smatrix_truncated(3, 1, m1, packets, SPEC)
    v10, _ = smatrix_truncated(3, 1, m10, packets, SPEC)
    assert v10.value == pytest.approx(10 * v1.value, abs=10 * v1.err_est + 1e-12)


def test_smatrix_n3_dual_path_zeros():
    # 1 -> 2 with equal masses is kinematically empty: both the mollified
    # closed form and the finite-time limit path are numerical zeros
    packets = [pos_packet(0.2, 9.0), pos_packet(0.0, 9.0), pos_packet(0.25, 9.0)]
    val, rep = smatrix_truncated(3, 1, MODEL3, packets, SPEC)
    lim = smatrix_limit_path(3, 1, MODEL3, packets, (5.0, 10.0, 20.0), SPEC, CUT)
    floor = max(rep["resolution"], val.err_est, lim["final_err"])
    assert abs(val.value - lim["final"]) <= 5e-2 * max(abs(val.value), abs(lim["final"]), floor)
    assert abs(val.value) <= 10 * floor
    assert abs(lim["final"]) <= 10 * floor


def elastic_packets(width=16.0):
    p = 0.3
    w = np.sqrt(p * p + 1)
    return [
        WavePacket.gaussian(center=[w, p], widths=np.diag([width, width])),
        WavePacket.gaussian(center=[w, -p], widths=np.diag([width, width])),
        WavePacket.gaussian(center=[w, p], widths=np.diag([width, width])),
        WavePacket.gaussian(center=[w, -p], widths=np.diag([width, width])),
    ]


@pytest.mark.slow
def test_smatrix_n4_nontrivial_vs_form_factor_constant():
    # 2 -> 2 elastic kinematics: nonzero value; the form-factor route with
    # conjugate-reflected in-arguments reproduces it up to a constant, which
    # is reported (expected -1 for even n relative to the printed closed form)
    packets = elastic_packets()
    spec = QuadSpec(abs_tol=1e-8, rel_tol=1e-6)
    val, rep = smatrix_truncated(4, 2, MODEL4, packets, spec,
                                 sigma_levels=(0.2, 0.1, 0.05, 0.025))
    flipped = [p.conjugate_reflect() for p in packets[:2]] + list(packets[2:])
    ff = form_factor(4, ChannelAssignment(("in", "in", "out", "out")), MODEL4,
                     flipped, spec, sigma_levels=(0.2, 0.1, 0.05, 0.025))
    assert abs(val.value) > 100 * rep["resolution"]
    ratio = ff.value / val.value
    # report the fitted constant; assert magnitude consistency
    print(f"form-factor / closed-form constant: {ratio:.6f}")
    assert abs(ratio) == pytest.approx(1.0, abs=5e-2)
    assert ratio.real == pytest.approx(-1.0, abs=5e-2)


def test_divergence_demo_chit_grows_chidt_bounded():
    packets = [neg_packet(-0.2, 6.0), mid_packet(), pos_packet(0.6, 6.0)]
    grid = (10.0, 20.0, 40.0, 80.0)
    grow = divergence_demo(3, MODEL3, packets, grid, SPEC, CUT, multiplier_kind="chi_t")
    assert grow["loglog_slope"] >= 0.8
    r = grow["magnitudes"][2] / grow["magnitudes"][1]  # t: 20 -> 40
    assert 1.6 <= r <= 2.4
    ctrl = divergence_demo(3, MODEL3, packets, grid, SPEC, CUT, multiplier_kind="chi_d_t")
    assert ctrl["max_over_min"] <= 1.2
