"""Induction machine model: parameter derivation, dynamics, integrators."""

import math

import pytest

from ftdrive.machine import (IntegrationDiverged, MachineInputs, MachineParams,
                             MachineState, derivatives, derive_params,
                             integrate_step, reference_params, rotor_flux_from,
                             stator_flux_from, torque)

P = reference_params()
D = derive_params(P)


def test_reference_parameter_values():
    assert P.Rs == 1.4 and P.Rr == 1.1
    assert P.Ls == 0.175 and P.Lr == 0.175 and P.Lm == 0.170
    assert P.p == 2 and P.J == 0.06
    assert P.Tn == 15.0 and P.psi_n == 0.6


def test_derived_parameters_match_their_formulas():
    assert math.isclose(D.kr, P.Lm / P.Lr, rel_tol=1e-15)
    assert math.isclose(D.sigma, 1.0 - P.Lm ** 2 / (P.Ls * P.Lr),
                        rel_tol=1e-12)
    assert math.isclose(D.R_sigma, P.Rs + D.kr ** 2 * P.Rr, rel_tol=1e-15)
    assert math.isclose(D.tau_r, P.Lr / P.Rr, rel_tol=1e-15)
    assert math.isclose(D.tau_sigma, D.sigma * P.Ls / D.R_sigma,
                        rel_tol=1e-15)


@pytest.mark.parametrize("field,value", [
    ("Rs", 0.0), ("Rr", -1.0), ("Ls", 0.0), ("Lr", -0.2), ("Lm", 0.0),
    ("J", 0.0), ("Tn", 0.0), ("psi_n", 0.0),
])
def test_nonpositive_parameters_rejected(field, value):
    kw = {f: getattr(P, f) for f in
          ("Rs", "Rr", "Ls", "Lr", "Lm", "p", "J", "Tn", "psi_n")}
    kw[field] = value
    with pytest.raises(ValueError):
        MachineParams(**kw)


def test_zero_pole_pairs_rejected():
    with pytest.raises(ValueError):
        MachineParams(Rs=1.4, Rr=1.1, Ls=0.175, Lr=0.175, Lm=0.170,
                      p=0, J=0.06, Tn=15.0, psi_n=0.6)


def test_leakage_free_machine_rejected():
    bad = MachineParams(Rs=1.4, Rr=1.1, Ls=0.175, Lr=0.175, Lm=0.175,
                        p=2, J=0.06, Tn=15.0, psi_n=0.6)
    with pytest.raises(ValueError):
        derive_params(bad)


def test_current_derivative_from_rest_is_voltage_over_leakage():
    dis_a, dis_b, dpr_a, dpr_b, dwm = derivatives(
        MachineState(), MachineInputs(vs_alpha=100.0), P, D)
    assert math.isclose(dis_a, 100.0 / (D.sigma * P.Ls), rel_tol=1e-12)
    assert dis_b == 0.0 and dpr_a == 0.0 and dpr_b == 0.0 and dwm == 0.0


def test_load_torque_decelerates():
    _, _, _, _, dwm = derivatives(MachineState(),
                                  MachineInputs(T_load=6.0), P, D)
    assert math.isclose(dwm, -6.0 / P.J, rel_tol=1e-12)


def test_torque_cross_product_convention():
    assert torque((0.6, 0.0), (0.0, 10.0), 2) == pytest.approx(18.0)
    assert torque((0.6, 0.0), (10.0, 0.0), 2) == 0.0
    assert torque((0.0, 0.6), (10.0, 0.0), 2) == pytest.approx(-18.0)


def test_flux_conversions_are_inverses():
    cases = [((1.0, -2.0), (0.4, 0.3)), ((-7.5, 3.2), (-0.1, 0.55)),
             ((0.0, 0.0), (0.6, 0.0))]
    for is_vec, psir in cases:
        psis = stator_flux_from(is_vec, psir, D, P)
        back = rotor_flux_from(psis, is_vec, P)
        assert back[0] == pytest.approx(psir[0], abs=1e-12)
        assert back[1] == pytest.approx(psir[1], abs=1e-12)


def test_integrate_step_zero_dt_returns_copy():
    st = MachineState(1.0, 2.0, 0.3, -0.4, 50.0)
    out = integrate_step(st, MachineInputs(10.0, -5.0, 1.0), 0.0, P, D)
    assert out == st and out is not st


def test_integrate_step_rejects_negative_dt_and_unknown_method():
    with pytest.raises(ValueError):
        integrate_step(MachineState(), MachineInputs(), -1e-6, P, D)
    with pytest.raises(ValueError):
        integrate_step(MachineState(), MachineInputs(), 1e-6, P, D,
                       method="heun")


def test_integrate_step_raises_on_divergence():
    # an overflowing state goes non-finite within a single step
    with pytest.raises(IntegrationDiverged):
        integrate_step(MachineState(1e308, 0.0, 0.0, 0.0, 0.0),
                       MachineInputs(), 1e-3, P, D)


def _free_decay_magnitude(state, t_end, dt):
    st = state
    for _ in range(round(t_end / dt)):
        st = integrate_step(st, MachineInputs(), dt, P, D)
    return (math.hypot(st.is_alpha, st.is_beta)
            + math.hypot(st.psir_alpha, st.psir_beta))


def test_unforced_electrical_state_decays_at_standstill():
    # at omega_m = 0 there is no kinetic-to-electrical conversion, so the
    # electromagnetic state must decay strictly
    st = MachineState(5.0, -3.0, 0.4, 0.2, 0.0)
    mag0 = (math.hypot(st.is_alpha, st.is_beta)
            + math.hypot(st.psir_alpha, st.psir_beta))
    mag1 = _free_decay_magnitude(st, 50e-3, 20e-6)
    assert mag1 < 0.3 * mag0


def _max_state_error(dt, method, ref_div, horizon=10e-3,
                     u=MachineInputs(100.0, 50.0, 0.0)):
    """Max state difference vs an rk4 run at dt/ref_div over the horizon."""
    coarse = fine = MachineState()
    err = 0.0
    sub = dt / ref_div
    for _ in range(round(horizon / dt)):
        coarse = integrate_step(coarse, u, dt, P, D, method=method)
        for _ in range(ref_div):
            fine = integrate_step(fine, u, sub, P, D)
        err = max(err, max(abs(a - b) for a, b in
                           zip(coarse.as_tuple(), fine.as_tuple())))
    return err


def test_euler_is_first_order():
    e_coarse = _max_state_error(20e-6, "euler", 100)
    e_fine = _max_state_error(10e-6, "euler", 100)
    assert 0.45 <= e_fine / e_coarse <= 0.55


def test_rk4_converges_much_faster_than_first_order():
    e_coarse = _max_state_error(40e-6, "rk4", 16)
    e_fine = _max_state_error(20e-6, "rk4", 16)
    assert e_coarse / e_fine >= 8.0


def test_euler_tracks_rk4_at_small_step():
    # rotating 64 V vector for one electrical period
    f1 = 14.459
    dt = 5e-6
    w = 2.0 * math.pi * f1
    eu = rk = MachineState()
    worst = 0.0
    scale = 0.0
    for k in range(round(1.0 / f1 / dt)):
        t = k * dt
        u = MachineInputs(64.0 * math.cos(w * t), 64.0 * math.sin(w * t), 0.0)
        eu = integrate_step(eu, u, dt, P, D, method="euler")
        rk = integrate_step(rk, u, dt, P, D, method="rk4")
        worst = max(worst, max(abs(a - b) for a, b in
                               zip(eu.as_tuple(), rk.as_tuple())))
        scale = max(scale, max(abs(x) for x in rk.as_tuple()))
    assert worst < 0.005 * scale
