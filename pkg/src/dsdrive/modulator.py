"""Delta-sigma modulator: quantizer, loop filters, sample-accurate simulation.

The simulator uses the error-feedback arrangement, which realizes any NTF
with a monic impulse response (minimum-phase or not) and makes the shaping
identity y = w + ntf * eps hold sample-exactly, not just in the linearized
model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from ._backend import modulator_loop
from .exceptions import ConfigError, ModulatorInstabilityError, NonMinimumPhaseError
from .filters import NtfFir, RationalFilter

__all__ = ["ModulatorConfig", "SimResult", "quantize", "simulate", "ff_fb_from_ntf"]

Ntf = Union[NtfFir, RationalFilter]


@dataclass
class ModulatorConfig:
    """Quantizer and rate settings for one modulator instance.

    The default is the two-level +/-320 V bridge; the output levels span
    +/-full_scale in steps of ``quant_step``.
    """

    ntf: Ntf
    levels: int = 2
    full_scale: float = 320.0
    fs: float = 100e3

    def __post_init__(self):
        if self.levels < 2:
            raise ConfigError("quantizer needs at least 2 levels")
        if self.full_scale <= 0:
            raise ConfigError("full_scale must be positive")
        if self.fs <= 0:
            raise ConfigError("fs must be positive")

    @property
    def quant_step(self) -> float:
        return 2.0 * self.full_scale / (self.levels - 1)


class SimResult(NamedTuple):
    output: np.ndarray
    error: np.ndarray
    overloaded: bool


def quantize(v, config: ModulatorConfig):
    """Nearest quantizer level to v, saturating at the extremes.

    Mid-rise for two levels: sign(v) * full_scale with sign(0) = +1.
    Halfway inputs round toward the upper level.  Accepts scalars or
    arrays.
    """
    dq = config.quant_step
    idx = np.floor((np.asarray(v, dtype=float) + config.full_scale) / dq + 0.5)
    idx = np.clip(idx, 0, config.levels - 1)
    out = -config.full_scale + idx * dq
    if np.isscalar(v):
        return float(out)
    return out


def _feedback_taps(ntf: Ntf):
    """(b, a) recursion taps realizing v = (NTF - 1) * eps."""
    if isinstance(ntf, NtfFir):
        return ntf.q[1:].copy(), np.empty(0)
    num, den = ntf.num, ntf.den
    if num[0] != 1.0:
        raise ConfigError("NTF impulse response must start with 1 "
                          f"(num[0]/den[0] = {num[0]!r})")
    n = max(num.size, den.size)
    num = np.pad(num, (0, n - num.size))
    den = np.pad(den, (0, n - den.size))
    return (num - den)[1:], den[1:].copy()


def simulate(config: ModulatorConfig, input) -> SimResult:
    """Run the modulator over an input sequence (volts).

    Returns the quantized output, the per-sample quantization error
    eps = y - u, and whether any |eps| exceeded quant_step/2 (overload).
    States start at zero.  Raises :class:`ModulatorInstabilityError` if the
    loop state becomes non-finite.
    """
    w = np.ascontiguousarray(input, dtype=float)
    if w.ndim != 1:
        raise ConfigError("input must be one-dimensional")
    if not np.all(np.isfinite(w)):
        raise ConfigError("input contains non-finite samples")
    b, a = _feedback_taps(config.ntf)
    y, eps, overloaded, bad = modulator_loop(w, b, a, config.full_scale,
                                             config.levels)
    if bad >= 0:
        raise ModulatorInstabilityError(bad)
    return SimResult(y, eps, bool(overloaded))


def ff_fb_from_ntf(ntf: Ntf):
    """Forward and feedback loop filters giving a unity STF and this NTF.

    FF = 1/NTF, FB = 1 - NTF.  Raises :class:`NonMinimumPhaseError` when an
    NTF zero lies outside the unit circle, which would make FF unstable; the
    error-feedback realization handles those NTFs instead.
    """
    rat = ntf.as_rational() if isinstance(ntf, NtfFir) else ntf
    num, den = rat.num, rat.den
    if num[0] != 1.0:
        raise ConfigError("NTF impulse response must start with 1")
    zeros = rat.zeros()
    if zeros.size and np.max(np.abs(zeros)) > 1.0 + 1e-9:
        worst = float(np.max(np.abs(zeros)))
        raise NonMinimumPhaseError(
            f"NTF zero at radius {worst:.6g} makes 1/NTF unstable; "
            "use the error-feedback realization")
    ff = RationalFilter(den.copy(), num.copy())
    n = max(num.size, den.size)
    fb_num = np.pad(den, (0, n - den.size)) - np.pad(num, (0, n - num.size))
    fb = RationalFilter(fb_num, den.copy())
    return ff, fb
