"""Converter model: transforms, vector tables, split link, fuses."""

import math

import pytest

from ftdrive.converter import (COMPLEMENT, DEVICE_LEG, LEGS, LOWER, UPPER,
                               DcdcBalancerConfig, DcLinkState, FuseElement,
                               InvalidConfiguration, SwitchingState, clarke,
                               dc_link_step, dcdc_balancer_step, fuse_step,
                               inverse_clarke, machine_phase_voltages,
                               pole_voltages, voltage_vector_table)

DC = DcLinkState(v_dc1=150.0, v_dc2=150.0, c1=3600e-6, c2=3600e-6)
DC_SKEW = DcLinkState(v_dc1=180.0, v_dc2=120.0, c1=3600e-6, c2=3600e-6)


def test_device_maps_are_consistent():
    assert UPPER == {"a": "S1", "b": "S2", "c": "S3"}
    assert LOWER == {"a": "S4", "b": "S5", "c": "S6"}
    for leg in LEGS:
        assert DEVICE_LEG[UPPER[leg]] == leg
        assert DEVICE_LEG[LOWER[leg]] == leg
        assert COMPLEMENT[UPPER[leg]] == LOWER[leg]
        assert COMPLEMENT[LOWER[leg]] == UPPER[leg]


def test_clarke_anchors():
    assert clarke(1.0, -0.5, -0.5) == pytest.approx((1.0, 0.0), abs=1e-15)
    a, b = clarke(0.0, math.sqrt(3) / 2, -math.sqrt(3) / 2)
    assert (a, b) == pytest.approx((0.0, 1.0), abs=1e-15)
    # common mode is dropped
    assert clarke(7.0, 7.0, 7.0) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_clarke_inverse_round_trip():
    for va, vb in ((1.0, 0.0), (-0.3, 0.8), (12.5, -7.25)):
        abc = inverse_clarke(va, vb)
        assert sum(abc) == pytest.approx(0.0, abs=1e-12)
        assert clarke(*abc) == pytest.approx((va, vb), abs=1e-12)


def test_normal_table_structure():
    table = voltage_vector_table("normal", DC_SKEW)
    assert [e.index for e in table] == list(range(8))
    assert [e.levels for e in table] == [
        ((k >> 2) & 1, (k >> 1) & 1, k & 1) for k in range(8)]
    # zero vectors at both all-low and all-high regardless of the split
    for k in (0, 7):
        assert math.hypot(*table[k].v) < 1e-12
    # the six active vectors keep the rigid hexagon: common magnitude
    # 2(v1+v2)/3 and 60 degree spacing (zero sequence is dropped)
    mag_ref = 2.0 * (180.0 + 120.0) / 3.0
    angles = []
    for e in table[1:7]:
        assert math.hypot(*e.v) == pytest.approx(mag_ref, rel=1e-12)
        angles.append(math.atan2(e.v[1], e.v[0]))
    angles.sort()
    for k in range(6):
        gap = (angles[(k + 1) % 6] - angles[k]) % (2.0 * math.pi)
        assert gap == pytest.approx(math.pi / 3.0, abs=1e-12)


def _postfault_oracle(leg, dc):
    """Each remaining leg contributes its rail, isolated phase clamps to 0."""
    others = [x for x in LEGS if x != leg]
    out = []
    for idx in range(4):
        lv = {leg: None, others[0]: (idx >> 1) & 1, others[1]: idx & 1}
        phase = {x: 0.0 if lv[x] is None
                 else (dc.v_dc1 if lv[x] else -dc.v_dc2) for x in LEGS}
        out.append(((lv["a"], lv["b"], lv["c"]),
                    clarke(phase["a"], phase["b"], phase["c"])))
    return out


@pytest.mark.parametrize("leg", LEGS)
def test_postfault_tables_match_phase_level_recomputation(leg):
    for dc in (DC, DC_SKEW):
        table = voltage_vector_table(f"postfault_leg_{leg}", dc)
        oracle = _postfault_oracle(leg, dc)
        assert [e.index for e in table] == [0, 1, 2, 3]
        for e, (levels, v) in zip(table, oracle):
            assert e.levels == levels
            assert e.v == pytest.approx(v, abs=1e-12)


def test_postfault_leg_c_is_leg_a_rotated():
    rot = complex(math.cos(-2.0 * math.pi / 3), math.sin(-2.0 * math.pi / 3))
    ta = [complex(*e.v) for e in voltage_vector_table("postfault_leg_a", DC)]
    tc = [complex(*e.v) for e in voltage_vector_table("postfault_leg_c", DC)]
    for za, zc in zip(ta, tc):
        assert abs(zc - rot * za) < 1e-9


def test_unknown_table_mode_rejected():
    with pytest.raises(ValueError):
        voltage_vector_table("limp", DC)
    with pytest.raises(ValueError):
        voltage_vector_table("postfault_leg_x", DC)


def test_pole_voltages_follow_levels_and_isolation():
    sw = SwitchingState(leg_a=1, leg_b=0, leg_c=1)
    assert pole_voltages(sw, DC_SKEW) == (180.0, -120.0, 180.0)
    sw.isolated.add("b")
    assert pole_voltages(sw, DC_SKEW) == (180.0, None, 180.0)


def test_phase_voltages_with_neutral_relay_closed():
    # neutral at the midpoint: poles pass through, isolated phase clamps
    assert machine_phase_voltages((180.0, None, -120.0), True,
                                  isolated={"b"}) == (180.0, 0.0, -120.0)


def test_phase_voltages_with_neutral_floating():
    va, vb, vc = machine_phase_voltages((150.0, -150.0, -150.0), False)
    assert va + vb + vc == pytest.approx(0.0, abs=1e-12)
    assert va == pytest.approx(200.0)
    with pytest.raises(InvalidConfiguration):
        machine_phase_voltages((150.0, None, -150.0), False)
    with pytest.raises(InvalidConfiguration):
        machine_phase_voltages((150.0, -150.0, -150.0), False,
                               isolated={"a"})


def test_dc_link_step_charge_balance():
    out = dc_link_step(DC, i_upper_rail=10.0, i_lower_rail=-4.0, i_mid=2.0,
                       i_source=(1.0, 3.0), dt=1e-5)
    assert out.v_dc1 == pytest.approx(150.0 + (1.0 - 10.0) * 1e-5 / 3600e-6)
    assert out.v_dc2 == pytest.approx(150.0 + (3.0 + 4.0) * 1e-5 / 3600e-6)
    assert out.i_mid == 2.0 and not out.clamped
    with pytest.raises(ValueError):
        dc_link_step(DC, 0.0, 0.0, 0.0, (0.0, 0.0), 0.0)


def test_dc_link_clamps_at_zero():
    tiny = DcLinkState(v_dc1=0.001, v_dc2=150.0, c1=1e-6, c2=1e-6)
    out = dc_link_step(tiny, i_upper_rail=100.0, i_lower_rail=0.0, i_mid=0.0,
                       i_source=(0.0, 0.0), dt=1e-4)
    assert out.v_dc1 == 0.0 and out.clamped


def test_balancer_currents_and_saturation():
    cfg = DcdcBalancerConfig(v_ref_total=300.0, bandwidth=500.0,
                             max_source_current=60.0)
    skew = DcLinkState(v_dc1=140.0, v_dc2=150.0, c1=3600e-6, c2=3600e-6)
    i1, i2 = dcdc_balancer_step(skew, cfg, 1e-5)
    assert i1 == pytest.approx(3600e-6 * 500.0 * 10.0)
    assert i2 == pytest.approx(0.0, abs=1e-12)
    starved = DcLinkState(v_dc1=50.0, v_dc2=150.0, c1=3600e-6, c2=3600e-6)
    i1, _ = dcdc_balancer_step(starved, cfg, 1e-5)
    assert i1 == 60.0


def test_balancer_closes_the_voltage_error_exponentially():
    cfg = DcdcBalancerConfig(v_ref_total=300.0, bandwidth=500.0,
                             max_source_current=60.0)
    dc = DcLinkState(v_dc1=140.0, v_dc2=150.0, c1=3600e-6, c2=3600e-6)
    dt = 1e-5
    err_prev = 10.0
    for k in range(round(4.0 / cfg.bandwidth / dt)):
        i_src = dcdc_balancer_step(dc, cfg, dt)
        dc = dc_link_step(dc, 0.0, 0.0, 0.0, i_src, dt)
        err = abs(dc.v_dc1 - 150.0)
        assert err <= err_prev + 1e-12
        err_prev = err
    # one-pole loop: after 4 time constants the 10 V step is below 2%
    assert err_prev < 0.2


def test_fuse_accumulates_and_blows():
    f = FuseElement(rated_i2t=1.0)
    f = fuse_step(f, 10.0, 5e-3)
    assert f.state == "intact"
    assert f.accumulated_i2t == pytest.approx(0.5)
    f = fuse_step(f, 10.0, 5e-3)
    assert f.state == "blown"
    # absorbing state: no further accumulation
    blown_acc = f.accumulated_i2t
    f = fuse_step(f, 1000.0, 1.0)
    assert f.state == "blown" and f.accumulated_i2t == blown_acc
    with pytest.raises(ValueError):
        fuse_step(f, 1.0, 0.0)
