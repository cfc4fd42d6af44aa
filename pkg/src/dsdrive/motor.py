"""Induction-motor physics: dq ODE, slip algebra, per-phase admittance.

The five-state model (stator/rotor dq currents plus mechanical speed) is
nonlinear through the speed coupling.  Holding the speed constant makes it
linear, and its sinusoidal steady state is described exactly by the
per-phase stator admittance returned by :func:`admittance`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from ._backend import rk4_loop
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    PullOutError,
)
from .filters import RationalFilter, require_stable

__all__ = [
    "MotorParams",
    "MotorState",
    "SlipPoint",
    "DEFAULT_MOTOR",
    "motor_derivative",
    "integrate",
    "Trajectory",
    "balanced_drive",
    "steady_state_slip",
    "admittance",
    "discretize_admittance",
]

# Default bound for integrate(): any state beyond this magnitude (SI units)
# is treated as divergence.
DIVERGENCE_BOUND = 1e6

# dq amplitude of a balanced 3-phase set with per-phase peak V, in the
# power-invariant two-axis mapping.
DQ_SCALE = math.sqrt(1.5)

_PARAM_FIELDS = ("P", "B", "J", "Rs", "Rr", "Ls", "Lr", "Lm", "fw", "Vw")


@dataclass(frozen=True)
class MotorParams:
    """Electrical and mechanical machine constants (SI units).

    P: pole count; B: damping N*m*s; J: inertia kg*m^2; Rs/Rr: stator and
    rotor resistance; Ls/Lr/Lm: stator, rotor and magnetizing inductance;
    fw: nominal drive frequency Hz; Vw: nominal per-phase peak voltage V.
    """

    P: int
    B: float
    J: float
    Rs: float
    Rr: float
    Ls: float
    Lr: float
    Lm: float
    fw: float
    Vw: float

    def __post_init__(self):
        for name in _PARAM_FIELDS:
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"motor parameter {name} must be positive, got {value!r}")
        if self.P % 2 != 0:
            raise ConfigError(f"pole count must be even, got {self.P}")
        if not 0.0 < self.leakage < 1.0:
            raise ConfigError("inductances must satisfy Lm^2 < Ls*Lr")

    @property
    def leakage(self) -> float:
        """Total leakage coefficient 1 - Lm^2/(Ls*Lr)."""
        return 1.0 - self.Lm**2 / (self.Ls * self.Lr)

    @property
    def omega_w(self) -> float:
        """Nominal electrical drive angular frequency, rad/s."""
        return 2.0 * math.pi * self.fw

    def synchronous_speed(self, drive_freq: float | None = None) -> float:
        """Mechanical speed at zero slip, rad/s."""
        f = self.fw if drive_freq is None else drive_freq
        return 2.0 * math.pi * f * 2.0 / self.P

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _PARAM_FIELDS}

    @classmethod
    def from_dict(cls, doc: dict) -> "MotorParams":
        missing = [k for k in _PARAM_FIELDS if k not in doc]
        extra = [k for k in doc if k not in _PARAM_FIELDS]
        if missing or extra:
            raise ConfigError(
                f"motor parameter document must have exactly the fields "
                f"{_PARAM_FIELDS}; missing {missing}, unexpected {extra}"
            )
        return cls(P=int(doc["P"]), **{k: float(doc[k]) for k in _PARAM_FIELDS if k != "P"})

    @classmethod
    def from_json(cls, path) -> "MotorParams":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


#: The machine used throughout the bundled studies.
DEFAULT_MOTOR = MotorParams(
    P=4, B=25e-3, J=25e-3, Rs=17.7, Rr=13.8,
    Ls=459.2e-3, Lr=457.0e-3, Lm=442.5e-3, fw=50.0, Vw=320.0,
)


@dataclass
class MotorState:
    """dq currents (A) and mechanical angular speed (rad/s)."""

    isd: float = 0.0
    isq: float = 0.0
    ird: float = 0.0
    irq: float = 0.0
    omega_m: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.isd, self.isq, self.ird, self.irq, self.omega_m])

    @classmethod
    def from_array(cls, arr) -> "MotorState":
        return cls(*(float(v) for v in arr))


@dataclass(frozen=True)
class SlipPoint:
    """Slip and the electrical drive frequency it refers to."""

    sigma: float
    omega_w: float

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ConfigError(f"slip must lie in [0, 1], got {self.sigma}")
        if self.omega_w <= 0:
            raise ConfigError("omega_w must be positive")


def motor_derivative(state: MotorState, vsd: float, vsq: float, load: float,
                     params: MotorParams) -> MotorState:
    """Time derivative of the five motor states.

    Pure function; non-finite inputs are rejected.
    """
    vals = (state.isd, state.isq, state.ird, state.irq, state.omega_m,
            vsd, vsq, load)
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError("non-finite state or input")
    p = params
    dm = p.leakage
    we2 = 0.5 * state.omega_m * p.P
    isd, isq, ird, irq = state.isd, state.isq, state.ird, state.irq
    d_isd = (-p.Rs * isd + we2 * (p.Lm**2 / p.Lr) * isq + (p.Rr * p.Lm / p.Lr) * ird
             + we2 * p.Lm * irq + vsd) / (dm * p.Ls)
    d_isq = (-we2 * (p.Lm**2 / p.Lr) * isd - p.Rs * isq - we2 * p.Lm * ird
             + (p.Rr * p.Lm / p.Lr) * irq + vsq) / (dm * p.Ls)
    d_ird = ((p.Rs * p.Lm / p.Ls) * isd - we2 * p.Lm * isq - p.Rr * ird
             - we2 * p.Lr * irq - (p.Lm / p.Ls) * vsd) / (dm * p.Lr)
    d_irq = (we2 * p.Lm * isd + (p.Rs * p.Lm / p.Ls) * isq + we2 * p.Lr * ird
             - p.Rr * irq - (p.Lm / p.Ls) * vsq) / (dm * p.Lr)
    torque = 0.75 * (isq * ird - isd * irq) * p.P * p.Lm
    d_wm = (torque - load - p.B * state.omega_m) / p.J
    return MotorState(d_isd, d_isq, d_ird, d_irq, d_wm)


@dataclass
class Trajectory:
    """Timestamped motor states from :func:`integrate`."""

    t: np.ndarray
    states: np.ndarray  # shape (n, 5): isd, isq, ird, irq, omega_m

    @property
    def final_state(self) -> MotorState:
        return MotorState.from_array(self.states[-1])

    @property
    def omega_m(self) -> np.ndarray:
        return self.states[:, 4]


def balanced_drive(amplitude: float, freq: float):
    """dq drive of a balanced 3-phase sinusoid with per-phase peak amplitude.

    Uses the power-invariant two-axis mapping, so the dq vector magnitude is
    sqrt(3/2) times the phase peak; the rotation sense matches the positive
    torque direction of the state equations.
    """
    w = 2.0 * math.pi * freq
    a = DQ_SCALE * amplitude

    def drive(t):
        t = np.asarray(t, dtype=float)
        return a * np.cos(w * t), a * np.sin(w * t)

    return drive


def _as_pair_fn(drive):
    def call(t):
        vsd, vsq = drive(t)
        return (np.broadcast_to(np.asarray(vsd, float), np.shape(t)),
                np.broadcast_to(np.asarray(vsq, float), np.shape(t)))
    return call


def _stage_inputs(drive, load, t0, n, dt, hold):
    """Per-step drive and load values at the three RK4 stage times."""
    if hold:
        t = t0 + dt * np.arange(n)
        vsd, vsq = _as_pair_fn(drive)(t)
        lam = np.broadcast_to(np.asarray(load(t), float), (n,))
        vsd3 = np.repeat(vsd[:, None], 3, axis=1)
        vsq3 = np.repeat(vsq[:, None], 3, axis=1)
        lam3 = np.repeat(lam[:, None], 3, axis=1)
    else:
        th = t0 + 0.5 * dt * np.arange(2 * n + 1)
        vsd, vsq = _as_pair_fn(drive)(th)
        lam = np.broadcast_to(np.asarray(load(th), float), (2 * n + 1,))
        idx = np.arange(n)[:, None] * 2 + np.array([0, 1, 2])[None, :]
        vsd3, vsq3, lam3 = vsd[idx], vsq[idx], lam[idx]
    return (np.ascontiguousarray(vsd3), np.ascontiguousarray(vsq3),
            np.ascontiguousarray(lam3))


def integrate(params: MotorParams, drive, load, t_end: float, dt: float,
              initial: MotorState | None = None, *, hold: bool = False,
              lock_speed: bool = False, bound: float = DIVERGENCE_BOUND,
              store_every: int = 1, chunk: int = 1 << 16) -> Trajectory:
    """Fixed-step RK4 trajectory of the motor under a voltage drive.

    drive(t) -> (vsd, vsq) and load(t) -> torque are callables accepting
    time arrays.  With ``hold=True`` both are sampled once per step and held
    constant across the step (zero-order hold at the sample rate, the right
    mode for pulse streams); otherwise they are evaluated at the RK4 stage
    times, preserving fourth-order accuracy for smooth drives.

    Raises :class:`DivergenceError` with the failing time when any state
    exceeds ``bound``.
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    if t_end < dt:
        raise ConfigError("t_end must be at least dt")
    if store_every < 1:
        raise ConfigError("store_every must be at least 1")
    n_steps = int(round(t_end / dt))
    state = (initial or MotorState()).as_array().copy()
    # keep chunk boundaries on the storage stride so it stays global
    chunk = max(store_every, (chunk // store_every) * store_every)

    n_store_total = n_steps // store_every
    states = np.empty((n_store_total + 1, 5))
    states[0] = state
    pvec = (params.Rs, params.Rr, params.Ls, params.Lr, params.Lm,
            float(params.P), params.B, params.J)

    filled = 1
    done = 0
    while done < n_steps:
        m = min(chunk, n_steps - done)
        vsd3, vsq3, lam3 = _stage_inputs(drive, load, done * dt, m, dt, hold)
        out = np.empty((m // store_every + 1, 5))
        stored, fail = rk4_loop(state, vsd3, vsq3, lam3, dt, pvec, bound,
                                lock_speed, store_every, out)
        states[filled:filled + stored] = out[:stored]
        filled += stored
        if fail >= 0:
            raise DivergenceError((done + fail + 1) * dt, bound)
        done += m
    t = np.concatenate(([0.0], dt * store_every * np.arange(1, filled)))
    return Trajectory(t, states[:filled])


def steady_state_slip(params: MotorParams, load: float = 0.0,
                      drive_amplitude: float | None = None,
                      drive_freq: float | None = None, *,
                      dt: float = 1e-5, tol: float = 1e-4,
                      max_time: float = 20.0,
                      locked_omega_m: float | None = None) -> SlipPoint:
    """Slip reached under an ideal balanced sinusoidal drive.

    Integrates from rest until the mechanical speed changes by less than
    ``tol`` rad/s over one electrical period.  ``locked_omega_m`` bypasses
    the mechanical equation and returns the slip of that frozen speed
    (0 speed = blocked rotor, slip 1).

    Raises :class:`PullOutError` when the rotor stalls under the load and
    :class:`ConvergenceError` when the speed has not settled within
    ``max_time`` of simulated time.
    """
    amp = params.Vw if drive_amplitude is None else float(drive_amplitude)
    freq = params.fw if drive_freq is None else float(drive_freq)
    ww = 2.0 * math.pi * freq
    sync = params.synchronous_speed(freq)

    if locked_omega_m is not None:
        sigma = 1.0 - locked_omega_m / sync
        return SlipPoint(sigma=sigma, omega_w=ww)

    drive = balanced_drive(amp, freq)
    load_fn = lambda t: np.full(np.shape(t), float(load))
    period = 1.0 / freq
    steps_per_period = max(int(round(period / dt)), 1)
    n_periods = int(math.ceil(max_time / period))
    pvec = (params.Rs, params.Rr, params.Ls, params.Lr, params.Lm,
            float(params.P), params.B, params.J)

    state = np.zeros(5)
    out = np.empty((1, 5))
    wm_prev = 0.0
    settled = 0
    for k in range(n_periods):
        vsd3, vsq3, lam3 = _stage_inputs(drive, load_fn, k * period,
                                         steps_per_period, dt, hold=False)
        stored, fail = rk4_loop(state, vsd3, vsq3, lam3, dt, pvec,
                                DIVERGENCE_BOUND, False, steps_per_period, out)
        if fail >= 0:
            raise DivergenceError((k * steps_per_period + fail + 1) * dt,
                                  DIVERGENCE_BOUND)
        wm = state[4]
        if wm < -0.1 * sync:
            raise PullOutError(
                f"rotor stalled under load {load:g} N*m "
                f"(omega_m = {wm:.3f} rad/s at t = {(k + 1) * period:.3f} s)")
        # require several consecutive settled periods, so a momentary
        # turning point in a loaded start cannot pass for steady state
        settled = settled + 1 if (k > 0 and abs(wm - wm_prev) < tol) else 0
        if settled >= 3:
            sigma = 1.0 - wm / sync
            if load > 0 and sigma > 0.95:
                raise PullOutError(
                    f"rotor settled near standstill (slip {sigma:.3f}) "
                    f"under load {load:g} N*m")
            return SlipPoint(sigma=min(max(sigma, 0.0), 1.0), omega_w=ww)
        wm_prev = wm
    raise ConvergenceError(
        f"speed not settled within {max_time:g} s "
        f"(last change {abs(state[4] - wm_prev):.3g} rad/s per period)")


def admittance(params: MotorParams, sigma: float, omega):
    """Per-phase stator admittance (S) of the speed-frozen linear model.

    ``sigma`` is the slip at the drive frequency; ``omega`` (rad/s, scalar
    or array) is the evaluation frequency.  At omega = 0 the value is 1/Rs
    for every slip.
    """
    if not 0.0 <= sigma <= 1.0:
        raise ConfigError(f"slip must lie in [0, 1], got {sigma}")
    p = params
    w = np.asarray(omega, dtype=float)
    num = p.Rr / (p.Ls * p.Lr) + 1j * (sigma / p.Ls) * w
    den = (p.Rr * p.Rs / (p.Lr * p.Ls)
           + 1j * (p.Rr / p.Lr + sigma * p.Rs / p.Ls) * w
           - sigma * p.leakage * w**2)
    out = num / den
    if np.isscalar(omega) or w.ndim == 0:
        return complex(out)
    return out


def admittance_analog_coeffs(params: MotorParams, sigma: float):
    """Numerator/denominator of the admittance in descending powers of s."""
    p = params
    num = [sigma / p.Ls, p.Rr / (p.Ls * p.Lr)]
    den = [sigma * p.leakage, p.Rr / p.Lr + sigma * p.Rs / p.Ls,
           p.Rr * p.Rs / (p.Lr * p.Ls)]
    if sigma == 0.0:
        num, den = num[1:], den[1:]
    return num, den


def discretize_admittance(params: MotorParams, sigma: float,
                          fs: float = 100e3) -> RationalFilter:
    """Bilinear-transform discretization of the admittance at rate fs.

    No pre-warping: at the intended oversampling the band of interest sits
    far below fs/2.  The returned filter is verified stable.
    """
    if fs <= 0:
        raise ConfigError("fs must be positive")
    num, den = admittance_analog_coeffs(params, sigma)
    bz, az = signal.bilinear(num, den, fs)
    filt = RationalFilter(bz, az)
    return require_stable(filt, "discretized admittance")
