"""Causal discrete-time transfer functions: rational filters and FIR NTFs.

Coefficients are stored in ascending powers of z**-1, so ``num[k]`` is the
weight of z**-k.  Rational filters are normalized to ``den[0] == 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, UnstableFilterError

__all__ = [
    "RationalFilter",
    "NtfFir",
    "evaluate",
    "save_ntf",
    "load_ntf",
]

STABILITY_MARGIN = 1e-9


@dataclass
class RationalFilter:
    """Transfer function num(z**-1)/den(z**-1) with den[0] = 1."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = np.atleast_1d(np.asarray(self.num, dtype=float))
        den = np.atleast_1d(np.asarray(self.den, dtype=float))
        if num.ndim != 1 or den.ndim != 1 or den.size == 0 or num.size == 0:
            raise ConfigError("num and den must be non-empty 1-D sequences")
        if den[0] == 0.0:
            raise ConfigError("den[0] must be nonzero for a causal filter")
        self.num = num / den[0]
        self.den = den / den[0]

    @property
    def order(self) -> int:
        return max(self.num.size, self.den.size) - 1

    def poles(self) -> np.ndarray:
        den = np.trim_zeros(self.den, "b")
        if den.size <= 1:
            return np.empty(0, dtype=complex)
        return np.roots(den)

    def zeros(self) -> np.ndarray:
        num = np.trim_zeros(self.num, "b")
        if num.size <= 1:
            return np.empty(0, dtype=complex)
        return np.roots(num)

    def is_stable(self, margin: float = STABILITY_MARGIN) -> bool:
        p = self.poles()
        return bool(p.size == 0 or np.max(np.abs(p)) < 1.0 - margin)

    def freq_response(self, omega):
        return _response(self.num, omega) / _response(self.den, omega)

    def impulse_response(self, n: int) -> np.ndarray:
        from scipy import signal

        return signal.lfilter(self.num, self.den, np.r_[1.0, np.zeros(n - 1)])


@dataclass
class NtfFir:
    """FIR noise transfer function, impulse response q with q[0] = 1."""

    q: np.ndarray
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if q.ndim != 1 or q.size == 0:
            raise ConfigError("q must be a non-empty 1-D sequence")
        if q[0] != 1.0:
            raise ConfigError(f"first NTF coefficient must be exactly 1, got {q[0]!r}")
        if not np.all(np.isfinite(q)):
            raise ConfigError("NTF coefficients must be finite")
        self.q = q

    @property
    def order(self) -> int:
        return self.q.size - 1

    def freq_response(self, omega):
        return _response(self.q, omega)

    def max_gain(self, grid: int = 16384) -> float:
        w = np.linspace(0.0, np.pi, grid)
        return float(np.max(np.abs(self.freq_response(w))))

    def as_rational(self) -> RationalFilter:
        return RationalFilter(self.q.copy(), np.array([1.0]))


def _response(coeffs, omega):
    """sum_k c[k] * exp(-1j k w), evaluated with a Horner recurrence."""
    omega = np.asarray(omega, dtype=float)
    z = np.exp(-1j * omega)
    out = np.zeros_like(z)
    for c in coeffs[::-1]:
        out = out * z + c
    return out


def evaluate(filt, omega):
    """Frequency response of a RationalFilter or NtfFir at omega (rad/sample).

    omega may be a scalar or array in [0, pi]; a scalar input returns a
    complex scalar.
    """
    arr = np.asarray(omega, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > np.pi + 1e-12):
        raise ConfigError("omega must lie in [0, pi]")
    resp = filt.freq_response(arr)
    if np.isscalar(omega) or arr.ndim == 0:
        return complex(resp)
    return resp


def require_stable(filt: RationalFilter, what: str = "filter") -> RationalFilter:
    if not filt.is_stable():
        p = filt.poles()
        worst = float(np.max(np.abs(p))) if p.size else 0.0
        raise UnstableFilterError(f"{what} has pole magnitude {worst:.12g} >= 1")
    return filt


def save_ntf(path, ntf, *, gamma, fs, designed_for_sigma=None):
    """Write an NTF to a JSON file.

    FIR NTFs use the ``q`` key; rational ones use ``num``/``den``.
    """
    doc = {"gamma": float(gamma), "fs": float(fs),
           "designed_for_sigma": None if designed_for_sigma is None else float(designed_for_sigma)}
    if isinstance(ntf, NtfFir):
        doc["q"] = [float(v) for v in ntf.q]
    elif isinstance(ntf, RationalFilter):
        doc["q"] = None
        doc["num"] = [float(v) for v in ntf.num]
        doc["den"] = [float(v) for v in ntf.den]
    else:
        raise ConfigError(f"cannot serialize {type(ntf).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_ntf(path):
    """Read an NTF JSON file; returns (filter, metadata dict)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    meta = {"gamma": doc.get("gamma"), "fs": doc.get("fs"),
            "designed_for_sigma": doc.get("designed_for_sigma")}
    if doc.get("q") is not None:
        return NtfFir(np.asarray(doc["q"], dtype=float)), meta
    if "num" in doc and "den" in doc:
        return RationalFilter(np.asarray(doc["num"], float), np.asarray(doc["den"], float)), meta
    raise ConfigError(f"{path}: no NTF coefficients found")
