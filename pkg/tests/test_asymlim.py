import numpy as np
import pytest

from dipoleqft.packets import WavePacket, Poly
from dipoleqft.quad import QuadSpec
from dipoleqft.dist import smear
from dipoleqft.waveop import Cutoff
from dipoleqft.asymlim import (TGrid, LimitTarget, make_target, finite_t_value,
                               limit_and_compare)
from dipoleqft.rng import Lcg, onshell_packet

M = 1.0
SPEC = QuadSpec(abs_tol=1e-11, rel_tol=1e-10)
CUT = Cutoff(0.9)   # wide transition band: fastest bump-tail decay at desk t


def test_loc_channel_is_t_independent():
    pkt = WavePacket.gaussian(center=[0.3, 0.2], widths=np.diag([2.0, 2.0]))
    vals = [finite_t_value(1, "loc", t, pkt, SPEC, M, CUT).value for t in (0.0, 3.0, 17.0)]
    assert vals[0] == vals[1] == vals[2]
    tgt = smear(make_target(1, "loc", M), [pkt], SPEC)
    assert vals[0] == pytest.approx(tgt.value, rel=1e-12)


def test_t0_in_equals_out():
    pkt = WavePacket.gaussian(center=[1.1, 0.1], widths=np.diag([9.0, 9.0]))
    for power in (1, 2):
        vi = finite_t_value(power, "in", 0.0, pkt, SPEC, M, CUT)
        vo = finite_t_value(power, "out", 0.0, pkt, SPEC, M, CUT)
        assert vi.value == pytest.approx(vo.value, rel=1e-9)


def test_power1_out_limit_hits_target():
    rng = Lcg(211)
    pkt = onshell_packet(rng, M, "+")
    rep = limit_and_compare(LimitTarget(1, "out", M), TGrid((5.0, 10.0, 20.0, 40.0)),
                            pkt, SPEC, CUT)
    assert rep["pass"], rep
    assert rep["final_rel_deviation"] <= 1e-2
    assert rep["decay_ratios"][-1] >= 4


def test_power2_in_limit_hits_target():
    rng = Lcg(223)
    pkt = onshell_packet(rng, M, "+")
    rep = limit_and_compare(LimitTarget(2, "in", M), TGrid((5.0, 10.0, 20.0, 40.0)),
                            pkt, SPEC, CUT)
    assert rep["pass"], rep
    assert rep["final_rel_deviation"] <= 1e-2
    assert rep["decay_ratios"][-1] >= 4


def test_wrong_sign_single_pole_table_fails():
    # the naive analogy table (+i pi (d+ - d-) for 'in') does not attract the
    # finite-t values: deviations against it stall at O(|target|)
    rng = Lcg(227)
    pkt = onshell_packet(rng, M, "+")
    good = smear(make_target(1, "in", M), [pkt], SPEC)
    v = finite_t_value(1, "in", 40.0, pkt, SPEC, M, CUT)
    assert abs(v.value - good.value) <= 1e-2 * abs(good.value)
    assert abs(v.value + good.value) >= abs(good.value)


def test_in_out_targets_conjugate_for_real_packet():
    # real-valued momentum-space packet: the in/out multipliers are complex
    # conjugates, so the two target smears are conjugate values (and the
    # in target is exactly minus the out target for every packet)
    poly = Poly(2, {(1, 0): 1.0})
    pkt = WavePacket(2, poly, np.zeros(2), np.diag([1.5, 1.5]))
    for power in (1, 2):
        a = smear(make_target(power, "in", M), [pkt], SPEC)
        b = smear(make_target(power, "out", M), [pkt], SPEC)
        assert a.value == pytest.approx(np.conj(b.value), rel=1e-8)
        assert a.value == pytest.approx(-b.value, rel=1e-8)


def test_in_out_deviation_symmetry():
    # complex-conjugate multipliers: |dev_in(t)| == |dev_out(t)| for a
    # real-valued packet
    poly = Poly(2, {(1, 0): 1.0})
    pkt = WavePacket(2, poly, np.zeros(2), np.diag([40.0, 40.0]))
    t = 10.0
    tin = smear(make_target(1, "in", M), [pkt], SPEC)
    tout = smear(make_target(1, "out", M), [pkt], SPEC)
    vin = finite_t_value(1, "in", t, pkt, SPEC, M, CUT)
    vout = finite_t_value(1, "out", t, pkt, SPEC, M, CUT)
    assert abs(vin.value - tin.value) == pytest.approx(abs(vout.value - tout.value), rel=1e-6)


def test_monotone_tail_on_passing_case():
    rng = Lcg(229)
    pkt = onshell_packet(rng, M, "+")
    rep = limit_and_compare(LimitTarget(2, "out", M), TGrid((5.0, 10.0, 20.0, 40.0)),
                            pkt, SPEC, CUT)
    assert rep["monotone_tail"]
    ds = rep["deviations"]
    assert ds[-3] > ds[-2] > ds[-1]


def test_tgrid_validation():
    with pytest.raises(ValueError):
        TGrid((5.0, 5.0))
    with pytest.raises(ValueError):
        LimitTarget(3, "in")
