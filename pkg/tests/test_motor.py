import json
import math

import numpy as np
import pytest

from dsdrive import (
    DEFAULT_MOTOR,
    MotorParams,
    MotorState,
    admittance,
    balanced_drive,
    coherent_projection,
    discretize_admittance,
    integrate,
    motor_derivative,
    steady_state_slip,
)
from dsdrive.exceptions import (
    ConfigError,
    DivergenceError,
    PullOutError,
)

P = DEFAULT_MOTOR


def zero_load(t):
    return np.zeros(np.shape(t))


# ---------------------------------------------------------------------------
# derivative


def test_derivative_origin_is_equilibrium():
    d = motor_derivative(MotorState(), 0.0, 0.0, 0.0, P)
    assert d.as_array().tolist() == [0.0] * 5


def test_derivative_unit_vsd():
    # plug the parameter values in by hand: with everything at zero and
    # vsd = 1 V, only the two d-axis currents respond
    leak = 1.0 - P.Lm * P.Lm / (P.Ls * P.Lr)
    d = motor_derivative(MotorState(), 1.0, 0.0, 0.0, P)
    assert d.isd == pytest.approx(1.0 / (leak * P.Ls), rel=1e-12)
    assert d.ird == pytest.approx(-(P.Lm / P.Ls) / (leak * P.Lr), rel=1e-12)
    # loose cross-check against the rounded reference figures
    assert d.isd == pytest.approx(32.54, abs=0.02)
    assert d.ird == pytest.approx(-31.51, abs=0.02)
    assert d.isq == d.irq == d.omega_m == 0.0


def test_derivative_no_speed_coupling_at_standstill():
    # with omega_m = 0 every speed-coupled term vanishes: the d-axis current
    # derivative cannot depend on the q-axis states and vice versa
    s1 = MotorState(isd=1.0, isq=2.0, ird=3.0, irq=4.0, omega_m=0.0)
    s2 = MotorState(isd=1.0, isq=-7.0, ird=3.0, irq=11.0, omega_m=0.0)
    d1 = motor_derivative(s1, 5.0, 3.0, 0.0, P)
    d2 = motor_derivative(s2, 5.0, 3.0, 0.0, P)
    assert d1.isd == d2.isd
    assert d1.ird == d2.ird


def test_derivative_rejects_nonfinite():
    with pytest.raises(ConfigError):
        motor_derivative(MotorState(isd=float("nan")), 0.0, 0.0, 0.0, P)
    with pytest.raises(ConfigError):
        motor_derivative(MotorState(), float("inf"), 0.0, 0.0, P)


# ---------------------------------------------------------------------------
# integration


def test_integrate_zero_drive_stays_zero():
    traj = integrate(P, lambda t: (np.zeros(np.shape(t)), np.zeros(np.shape(t))),
                     zero_load, t_end=0.01, dt=1e-5)
    assert np.all(traj.states == 0.0)
    assert traj.t[0] == 0.0 and traj.t[-1] == pytest.approx(0.01)


def test_integrate_halving_dt():
    drive = balanced_drive(P.Vw, P.fw)
    a = integrate(P, drive, zero_load, t_end=0.1, dt=1e-4).final_state.as_array()
    b = integrate(P, drive, zero_load, t_end=0.1, dt=5e-5).final_state.as_array()
    rel = np.linalg.norm(a - b) / np.linalg.norm(b)
    assert rel < 1e-6


def test_rk4_order():
    drive = balanced_drive(P.Vw, P.fw)
    t_end = 0.04
    dts = np.array([2e-4, 1e-4, 5e-5, 2.5e-5])
    ref = integrate(P, drive, zero_load, t_end, dts[-1] / 16).final_state.as_array()
    errs = []
    for dt in dts:
        x = integrate(P, drive, zero_load, t_end, dt).final_state.as_array()
        errs.append(np.linalg.norm(x - ref))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert 3.7 <= slope <= 4.3, f"observed order {slope:.3f}"


def test_integrate_store_every():
    drive = balanced_drive(100.0, 50.0)
    full = integrate(P, drive, zero_load, t_end=0.01, dt=1e-5)
    thin = integrate(P, drive, zero_load, t_end=0.01, dt=1e-5, store_every=10)
    assert thin.states.shape[0] == 101
    np.testing.assert_allclose(thin.states[1], full.states[10], rtol=1e-14)
    np.testing.assert_allclose(thin.final_state.as_array(),
                               full.final_state.as_array(), rtol=1e-14)


def test_integrate_hold_matches_smooth_for_constant_drive():
    drive = lambda t: (np.full(np.shape(t), 10.0), np.full(np.shape(t), -5.0))
    a = integrate(P, drive, zero_load, t_end=0.02, dt=1e-5, hold=True)
    b = integrate(P, drive, zero_load, t_end=0.02, dt=1e-5, hold=False)
    np.testing.assert_array_equal(a.states, b.states)


def test_integrate_divergence_reports_time():
    drive = lambda t: (np.full(np.shape(t), 1e12), np.zeros(np.shape(t)))
    with pytest.raises(DivergenceError) as exc:
        integrate(P, drive, zero_load, t_end=1.0, dt=1e-5)
    assert 0.0 < exc.value.time <= 1.0


# ---------------------------------------------------------------------------
# steady-state slip


def test_no_load_slip_near_self_friction_value():
    point = steady_state_slip(P)
    assert 0.038 <= point.sigma <= 0.048
    assert point.omega_w == pytest.approx(2 * math.pi * 50.0)


def test_slip_monotone_in_load():
    sigmas = [steady_state_slip(P, load=l).sigma for l in (0.0, 4.0, 8.0)]
    assert sigmas[0] < sigmas[1] < sigmas[2]


def test_blocked_rotor_slip_is_one():
    point = steady_state_slip(P, locked_omega_m=0.0)
    assert point.sigma == 1.0


def test_pull_out_load_raises():
    with pytest.raises(PullOutError):
        steady_state_slip(P, load=60.0)


# ---------------------------------------------------------------------------
# admittance


@pytest.mark.parametrize("sigma", [0.0, 0.043, 0.2, 0.6, 1.0])
def test_admittance_dc_is_one_over_rs(sigma):
    y = admittance(P, sigma, 0.0)
    assert abs(y - 1.0 / P.Rs) <= 1e-12 / P.Rs


def test_admittance_high_frequency_asymptote():
    leak = P.leakage
    for sigma in (0.043, 0.2, 0.6, 1.0):
        w = 2 * math.pi * 1e5
        assert w * abs(admittance(P, sigma, w)) == pytest.approx(
            1.0 / (leak * P.Ls), rel=0.02)
    # the slightly lower probe frequency from the derivation notes
    w = 2 * math.pi * 1e4
    assert abs(admittance(P, 0.2, w)) == pytest.approx(
        1.0 / (w * leak * P.Ls), rel=0.05)


def test_admittance_curves_coincide_at_extremes_differ_in_midband():
    sigmas = (0.043, 0.2, 0.6)
    at = lambda f: [abs(admittance(P, s, 2 * math.pi * f)) for s in sigmas]
    dc = at(0.0)
    assert max(dc) / min(dc) == pytest.approx(1.0, abs=1e-12)
    hi = at(5e4)
    assert max(hi) / min(hi) < 1.02
    mid = at(100.0)
    assert max(mid) / min(mid) > 1.5


def test_admittance_rejects_bad_slip():
    with pytest.raises(ConfigError):
        admittance(P, -0.1, 0.0)
    with pytest.raises(ConfigError):
        admittance(P, 1.1, 0.0)


# ---------------------------------------------------------------------------
# discretized admittance


def test_discretized_dc_gain():
    for sigma in (0.0, 0.043, 0.2, 0.6):
        yhat = discretize_admittance(P, sigma, 100e3)
        z1 = yhat.freq_response(0.0)
        assert abs(z1 - 1.0 / P.Rs) <= 1e-9 / P.Rs


def test_discretized_matches_continuous_at_50hz():
    for sigma in (0.043, 0.2, 0.6):
        yhat = discretize_admittance(P, sigma, 100e3)
        w = 2 * math.pi * 50.0
        got = abs(yhat.freq_response(w / 100e3))
        want = abs(admittance(P, sigma, w))
        assert got == pytest.approx(want, rel=1e-3)


def test_discretized_matches_continuous_over_band():
    fs = 100e3
    freqs = np.geomspace(1.0, fs / 20, 200)
    for sigma in (0.043, 0.2, 0.6):
        yhat = discretize_admittance(P, sigma, fs)
        got = np.abs(yhat.freq_response(2 * np.pi * freqs / fs))
        want = np.abs(admittance(P, sigma, 2 * np.pi * freqs))
        assert np.max(np.abs(got / want - 1.0)) < 0.01


def test_discretized_poles_inside_unit_circle():
    for sigma in (0.0, 0.043, 0.2, 0.6, 1.0):
        yhat = discretize_admittance(P, sigma, 100e3)
        assert yhat.is_stable()


def test_frozen_speed_response_matches_admittance():
    # run the full nonlinear equations with the speed locked at the slip
    # point; the per-phase current phasor must match the linear admittance
    fs = 100e3
    f = 50.0
    amp = 100.0
    for sigma in (0.043, 0.2):
        wm = (1.0 - sigma) * P.synchronous_speed(f)
        w = 2 * math.pi * f
        drive = lambda t: (amp * np.cos(w * t), amp * np.sin(w * t))
        traj = integrate(P, drive, zero_load, t_end=1.0, dt=1 / fs,
                         initial=MotorState(omega_m=wm), lock_speed=True)
        isd = traj.states[1:, 0]  # drop the t=0 row: one sample per step
        tail = isd[50000:]
        proj = coherent_projection(tail, f, fs, start_index=50001)
        want = amp * abs(admittance(P, sigma, w))
        assert proj.amplitude == pytest.approx(want, rel=0.02)


# ---------------------------------------------------------------------------
# parameters


def test_params_json_roundtrip(tmp_path):
    path = tmp_path / "motor.json"
    path.write_text(json.dumps(P.to_dict()))
    loaded = MotorParams.from_json(path)
    assert loaded == P


def test_params_require_exact_field_names(tmp_path):
    doc = P.to_dict()
    doc["rs"] = doc.pop("Rs")
    path = tmp_path / "motor.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        MotorParams.from_json(path)


def test_params_invariants():
    good = P.to_dict()
    with pytest.raises(ConfigError):
        MotorParams.from_dict({**good, "P": 3})
    with pytest.raises(ConfigError):
        MotorParams.from_dict({**good, "Rs": -1.0})
    with pytest.raises(ConfigError):
        MotorParams.from_dict({**good, "Lm": 0.6})  # Lm^2 > Ls*Lr


def test_leakage_value():
    assert P.leakage == pytest.approx(0.066942, abs=1e-6)
