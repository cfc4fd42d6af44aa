"""NTF synthesis: conventional high-pass designs and load-weighted optimization.

The optimized design minimizes the weighted shaped-noise power

    (1/pi) * integral_0^pi |NTF(e^jw)|^2 |Yhat(e^jw)|^2 dw
         =  q^T R q,

where q is the FIR NTF impulse response and R the Toeplitz matrix of the
autocorrelation of the weighting filter's impulse response.  Constraints:
q0 = 1 and a max-gain bound |NTF| <= gamma on a frequency grid.  The
problem is a convex QCQP, solved with a log-barrier Newton method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _sint
from scipy import signal
from scipy.linalg import toeplitz

from .exceptions import ConfigError, SolverError, UnstableFilterError
from .filters import NtfFir, RationalFilter
from .motor import MotorParams, discretize_admittance

__all__ = [
    "DesignSpec",
    "Weighting",
    "synthesize_standard",
    "weighting_from_admittance",
    "optimize_ntf_fir",
    "noise_power",
]

# Tail-energy fraction at which the weighting impulse response is considered
# converged.
_TAIL_FRACTION = 1e-13

# Allowed max-gain excess on the 16x verification grid before re-solving.
_FINE_GRID_SLACK = 1e-4


@dataclass
class DesignSpec:
    """Order, oversampling, max-gain bound and solver tolerances."""

    order: int = 8
    osr: int = 1000
    gamma: float = 1.5
    grid_points: int = 1024
    tol: float = 1e-6

    def __post_init__(self):
        if self.order < 1 or self.order > 32:
            raise ConfigError("order must lie in [1, 32]")
        if self.osr < 2:
            raise ConfigError("osr must be at least 2")
        if self.gamma <= 1.0:
            raise ConfigError("gamma must exceed 1 (gamma = 1 admits only a flat NTF)")
        if self.grid_points < 16 * self.order:
            raise ConfigError("grid_points must be at least 16 * order")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")


@dataclass
class Weighting:
    """Autocorrelation r(0..m) of the weighting filter's impulse response.

    ``filter`` optionally keeps the underlying transfer function so that
    noise powers can be cross-checked by quadrature.
    """

    r: np.ndarray
    source: dict = field(default_factory=dict)
    filter: RationalFilter | None = None

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        if r.ndim != 1 or r.size == 0:
            raise ConfigError("r must be a non-empty 1-D sequence")
        if r[0] <= 0:
            raise ConfigError("r[0] must be positive")
        eigmin = float(np.min(np.linalg.eigvalsh(toeplitz(r))))
        if eigmin < -1e-10 * r[0]:
            raise ConfigError(f"autocorrelation is not positive semidefinite "
                              f"(min eigenvalue {eigmin:.3g})")
        self.r = r

    def matrix(self, order: int) -> np.ndarray:
        if order >= self.r.size:
            raise ConfigError(f"weighting has {self.r.size - 1} lags, "
                              f"need at least {order}")
        return toeplitz(self.r[:order + 1])


def synthesize_standard(spec: DesignSpec) -> RationalFilter:
    """Conventional high-pass NTF: all zeros at z = 1, Butterworth poles.

    The pole cutoff is tuned by bisection until the peak NTF magnitude
    equals ``spec.gamma``.  The result is stable with a monic impulse
    response.
    """
    order, gamma = spec.order, spec.gamma
    grid = np.linspace(0.0, np.pi, 20001)
    num = np.real(np.poly(np.ones(order)))

    def candidate(wc):
        _, poles, _ = signal.butter(order, wc, btype="highpass", output="zpk")
        den = np.real(np.poly(poles))
        with np.errstate(invalid="ignore", divide="ignore"):
            _, h = signal.freqz(num, den, worN=grid)
            g = float(np.max(np.abs(h)))
        # nan: the poles collapsed onto the zeros at z = 1 (cutoff too low)
        return (g if np.isfinite(g) else None), den

    lo, hi = 1e-7, 1.0 - 1e-9
    g_lo, _ = candidate(lo)
    while g_lo is None:
        lo *= 10.0
        if lo > 0.1:
            raise SolverError("high-pass prototype degenerate at every cutoff")
        g_lo, _ = candidate(lo)
    g_hi, _ = candidate(hi)
    if not g_lo <= gamma <= g_hi:
        raise SolverError(
            f"max gain {gamma} unreachable for order {order}: "
            f"achievable range [{g_lo:.6g}, {g_hi:.6g}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid, _ = candidate(mid)
        if g_mid is None or g_mid < gamma:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    g_final, den = candidate(0.5 * (lo + hi))
    if g_final is None:
        g_final, den = candidate(hi)
    if abs(g_final - gamma) > max(spec.tol, 1e-6) * gamma:
        raise SolverError(f"bisection stalled at max gain {g_final:.9g} "
                          f"for target {gamma}")
    ntf = RationalFilter(num, den)
    if not ntf.is_stable():
        raise SolverError("standard design produced an unstable NTF")
    return ntf


def _impulse_to_convergence(filt: RationalFilter) -> np.ndarray:
    n = 1 << 15
    while n <= (1 << 26):
        h = filt.impulse_response(n)
        total = float(np.dot(h, h))
        tail = float(np.dot(h[n // 2:], h[n // 2:]))
        if total > 0 and tail < _TAIL_FRACTION * total:
            return h
        n *= 2
    raise UnstableFilterError("impulse response did not decay; filter unstable "
                              "or pathologically slow")


def weighting_from_admittance(params: MotorParams, sigma: float,
                              fs: float = 100e3, m: int = 8) -> Weighting:
    """Autocorrelation weighting of the discretized admittance at slip sigma.

    Computes the impulse response of the discretized admittance until the
    tail energy is negligible, then r(k) = sum_n h(n) h(n+k) for k = 0..m.
    By the Wiener-Khinchin relation this equals
    (1/pi) * integral_0^pi |Yhat|^2 cos(k w) dw.
    """
    if m < 1:
        raise ConfigError("need at least one lag")
    yhat = discretize_admittance(params, sigma, fs)
    h = _impulse_to_convergence(yhat)
    n = h.size
    r = np.array([float(np.dot(h[:n - k], h[k:])) for k in range(m + 1)])
    return Weighting(r=r, source={"sigma": float(sigma), "fs": float(fs)},
                     filter=yhat)


def _constraint_grid(order: int, points: int):
    w = np.linspace(0.0, np.pi, points)
    k = np.arange(1, order + 1)
    return np.cos(np.outer(w, k)), np.sin(np.outer(w, k))


def _max_gain_fir(q: np.ndarray, points: int) -> float:
    w = np.linspace(0.0, np.pi, points)
    k = np.arange(q.size)
    resp = np.exp(-1j * np.outer(w, k)).dot(q)
    return float(np.max(np.abs(resp)))


def _solve_barrier(Rt, rv, C, S, gamma2, tol):
    """Newton log-barrier minimization of the reduced quadratic.

    Minimizes x^T Rt x + 2 rv.x subject to (1 + C x)^2 + (S x)^2 <= gamma2
    on every grid row, starting from the strictly feasible x = 0.
    Returns (x, iterations, kkt_residual, gap).
    """
    n = rv.size
    m = C.shape[0]
    x = np.zeros(n)
    t = 1.0
    mu = 20.0
    newton_steps = 0

    def barrier_terms(x):
        u = 1.0 + C.dot(x)
        v = S.dot(x)
        g = u * u + v * v - gamma2
        return u, v, g

    def objective(x):
        return float(x.dot(Rt.dot(x)) + 2.0 * rv.dot(x))

    def newton(x, t, done):
        """Minimize t*f + barrier at fixed t.  done(kkt, decrement) decides
        convergence; returns the iterate and the final scaled residual.
        Bails out when the residual hits its floating-point floor."""
        nonlocal newton_steps
        kkt = np.inf
        best = np.inf
        stale = 0
        for _ in range(200):
            u, v, g = barrier_terms(x)
            ginv = -1.0 / g
            grad_g = 2.0 * (C * u[:, None] + S * v[:, None])
            grad = t * 2.0 * (Rt.dot(x) + rv) + grad_g.T.dot(ginv)
            kkt = float(np.max(np.abs(grad))) / t
            hess = (t * 2.0 * Rt
                    + (grad_g * ginv[:, None] ** 2).T.dot(grad_g)
                    + 2.0 * ((C * ginv[:, None]).T.dot(C)
                             + (S * ginv[:, None]).T.dot(S)))
            try:
                dx = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                raise SolverError("singular Newton system in barrier solve")
            decrement = -0.5 * float(grad.dot(dx))
            newton_steps += 1
            if done(kkt, decrement):
                return x, kkt
            if kkt < 0.9 * best:
                best = kkt
                stale = 0
            else:
                stale += 1
                if stale >= 8:
                    return x, kkt
            # backtracking line search staying strictly feasible
            phi0 = t * objective(x) - float(np.sum(np.log(-g)))
            slope = float(grad.dot(dx))
            step = 1.0
            while step > 1e-14:
                xn = x + step * dx
                un, vn, gn = barrier_terms(xn)
                if np.max(gn) < 0.0:
                    phin = t * objective(xn) - float(np.sum(np.log(-gn)))
                    if phin <= phi0 + 0.25 * step * slope:
                        break
                step *= 0.5
            if step <= 1e-14:
                return x, kkt
            x = x + step * dx
        raise SolverError("barrier Newton iteration did not converge")

    # centering path: modest accuracy per stage
    while m / t > tol:
        x, _ = newton(x, t, lambda kkt, dec:
                      dec < 1e-9 * (1.0 + abs(t * objective(x))))
        t *= mu
    # final polish at the last barrier parameter until the stationarity
    # residual (scaled by t, the units of the multiplier estimate) meets tol
    t_last = t / mu
    x, kkt = newton(x, t_last, lambda kkt, dec: kkt <= 0.5 * tol)
    if kkt > tol:
        raise SolverError(f"stationarity residual {kkt:.3e} above tol {tol:g}")
    gap = m / t_last
    return x, newton_steps, kkt, gap


def optimize_ntf_fir(weight: Weighting, spec: DesignSpec) -> NtfFir:
    """FIR NTF minimizing the weighted noise power under the gain bound.

    Feasibility is guaranteed (the flat NTF q = [1, 0, ...] satisfies any
    gamma >= 1).  When the unconstrained minimizer already respects the
    bound it is returned exactly; otherwise the barrier solve runs on
    ``spec.grid_points`` frequencies and the result is verified on a 16x
    finer grid, re-solving on a denser grid if an inter-grid excursion
    exceeds the tolerance.

    The returned NtfFir carries solver diagnostics in ``.info`` (objective,
    max gain, Newton iteration count, KKT residual).
    """
    order = spec.order
    R = weight.matrix(order)
    scale = float(R[0, 0])
    Rn = R / scale
    rv = Rn[1:, 0].copy()
    Rt = Rn[1:, 1:].copy()
    gamma2 = spec.gamma * spec.gamma
    fine_points = 16 * spec.grid_points

    # unconstrained minimizer, exact when it is interior
    try:
        xu = np.linalg.solve(Rt, -rv)
    except np.linalg.LinAlgError:
        xu = np.linalg.lstsq(Rt, -rv, rcond=None)[0]
    qu = np.concatenate(([1.0], xu))
    if _max_gain_fir(qu, fine_points) <= spec.gamma:
        ntf = NtfFir(qu)
        ntf.info = {
            "objective": float(qu.dot(R.dot(qu))),
            "max_gain": _max_gain_fir(qu, fine_points),
            "iterations": 0,
            "kkt_residual": 0.0,
            "gamma": spec.gamma,
            "constrained": False,
        }
        return ntf

    points = spec.grid_points
    for _ in range(4):
        C, S = _constraint_grid(order, points)
        x, iters, kkt, gap = _solve_barrier(Rt, rv, C, S, gamma2, spec.tol)
        q = np.concatenate(([1.0], x))
        gmax = _max_gain_fir(q, fine_points)
        if gmax <= spec.gamma + _FINE_GRID_SLACK:
            ntf = NtfFir(q)
            ntf.info = {
                "objective": float(q.dot(R.dot(q))),
                "max_gain": gmax,
                "iterations": iters,
                "kkt_residual": kkt,
                "duality_gap": gap,
                "gamma": spec.gamma,
                "constrained": True,
                "grid_points": points,
            }
            return ntf
        points *= 2
    raise SolverError(f"max gain {gmax:.9g} still exceeds {spec.gamma} + "
                      f"{_FINE_GRID_SLACK} after grid refinement")


def _quadrature_noise_power(ntf, weighting_filter: RationalFilter) -> float:
    # hint the quadrature at the weighting filter's corner frequencies
    corners = set()
    for p in weighting_filter.poles():
        radius, angle = abs(p), abs(np.angle(p))
        if radius > 0:
            corners.add(abs(math.log(radius)))
        corners.add(angle)
    corners = sorted(c for c in corners if 1e-12 < c < np.pi - 1e-12)

    def integrand(w):
        hn = ntf.freq_response(w)
        hy = weighting_filter.freq_response(w)
        return (hn.real**2 + hn.imag**2) * (hy.real**2 + hy.imag**2) / np.pi

    val, _ = _sint.quad(integrand, 0.0, np.pi, points=corners or None,
                        limit=400, epsabs=1e-16, epsrel=1e-11)
    return float(val)


def noise_power(ntf, weight: Weighting) -> float:
    """Weighted shaped-noise power (1/pi) * int_0^pi |NTF|^2 |Yhat|^2 dw.

    FIR NTFs use the quadratic form q^T R q; when the weighting keeps its
    source filter the value is cross-checked against adaptive quadrature
    and the two must agree to 1e-6 relative.  Rational NTFs are integrated
    by quadrature directly.
    """
    if isinstance(ntf, NtfFir):
        q = ntf.q
        if q.size - 1 >= weight.r.size:
            raise ConfigError(f"weighting has {weight.r.size - 1} lags, "
                              f"NTF order is {q.size - 1}")
        R = weight.matrix(q.size - 1)
        value = float(q.dot(R.dot(q)))
        if weight.filter is not None:
            check = _quadrature_noise_power(ntf, weight.filter)
            if abs(check - value) > 1e-6 * max(abs(value), abs(check)):
                raise SolverError(
                    f"noise power mismatch: quadratic form {value:.12g} vs "
                    f"quadrature {check:.12g}")
        return value
    if isinstance(ntf, RationalFilter):
        if weight.filter is None:
            raise ConfigError("rational NTFs need a weighting that keeps its "
                              "source filter for quadrature")
        return _quadrature_noise_power(ntf, weight.filter)
    raise ConfigError(f"unsupported NTF type {type(ntf).__name__}")
