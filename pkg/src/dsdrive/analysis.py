"""SNR estimation by two routes and the NTF/slip comparison tables.

The frequency route evaluates the shaped-noise integral of the linearized
models; the time route runs the nonlinear modulator sample by sample and
filters the pulse stream through the discretized admittance.

Power conventions differ between the routes and are chosen to match the
published comparison tables this toolkit reproduces: the frequency route
reports the squared peak amplitude of the ideal drive current as signal
power, while the time route reports mean-square powers of the measured
stream (so signal_power + noise_power equals the stream's total power
there).  Differences between NTFs or slips are convention-free either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import signal

from .design import Weighting, noise_power, weighting_from_admittance
from .exceptions import ConfigError, DsdriveError
from .filters import NtfFir
from .modulator import ModulatorConfig, simulate
from .motor import MotorParams, admittance, discretize_admittance

__all__ = [
    "SnrReport",
    "SweepTable",
    "TableEntry",
    "coherent_projection",
    "snr_frequency",
    "snr_time",
    "build_sweep",
    "diagonal_advantage",
]


@dataclass
class SnrReport:
    """One SNR measurement with its operating point and method."""

    snr_db: float
    signal_power: float
    noise_power: float
    method: str  # "frequency" | "time"
    sigma: float
    ntf_id: str
    config: dict = field(default_factory=dict)
    overloaded: bool = False

    def __post_init__(self):
        if self.signal_power <= 0 or self.noise_power <= 0:
            raise ConfigError("signal and noise powers must be positive")
        implied = 10.0 * math.log10(self.signal_power / self.noise_power)
        if abs(implied - self.snr_db) > 1e-9:
            raise ConfigError("snr_db inconsistent with the stated powers")


class TableEntry(NamedTuple):
    """A row of a sweep table: label, NTF, and the slip it was designed for."""

    ntf_id: str
    ntf: object
    designed_for_sigma: float | None = None


class Projection(NamedTuple):
    amplitude: float
    fundamental_power: float  # amplitude**2 / 2
    residual_power: float     # mean-square residual
    total_power: float        # mean-square of the input stream


def coherent_projection(x: np.ndarray, f: float, fs: float,
                        start_index: int = 0) -> Projection:
    """Project a stream onto sin/cos at f over an integer number of periods.

    The projection is leakage-free when fs/f is an integer and len(x) is a
    multiple of it (enforced); the decomposition is orthogonal, so
    total_power = fundamental_power + residual_power exactly.
    """
    spp = fs / f
    if abs(spp - round(spp)) > 1e-9:
        raise ConfigError("fs must be an integer multiple of f for a "
                          "coherent projection")
    spp = int(round(spp))
    if len(x) % spp != 0:
        raise ConfigError(f"stream length {len(x)} is not a whole number of "
                          f"periods ({spp} samples each)")
    n = np.arange(start_index, start_index + len(x))
    arg = 2.0 * np.pi * f / fs * n
    s, c = np.sin(arg), np.cos(arg)
    a = 2.0 * float(np.dot(x, s)) / len(x)
    b = 2.0 * float(np.dot(x, c)) / len(x)
    fit = a * s + b * c
    resid = x - fit
    amp = math.hypot(a, b)
    return Projection(
        amplitude=amp,
        fundamental_power=0.5 * amp * amp,
        residual_power=float(np.dot(resid, resid)) / len(x),
        total_power=float(np.dot(x, x)) / len(x),
    )


def snr_frequency(ntf, params: MotorParams, sigma: float, fs: float = 100e3,
                  v_peak: float = 190.0, f_drive: float = 50.0,
                  quant_step: float = 640.0, *, ntf_id: str = "ntf",
                  weighting: Weighting | None = None) -> SnrReport:
    """SNR of the linearized drive chain from the shaped-noise integral.

    signal power: squared peak amplitude of the ideal drive current,
    (v_peak * |Y(j 2 pi f_drive)|)^2.  noise power: quantization noise of
    step ``quant_step`` shaped by the NTF and weighted by the discretized
    admittance at slip ``sigma``.
    """
    if quant_step <= 0:
        raise ConfigError("quant_step must be positive")
    order = ntf.q.size - 1 if isinstance(ntf, NtfFir) else None
    if weighting is None:
        weighting = weighting_from_admittance(
            params, sigma, fs, m=max(order or 0, 8))
    y_mag = abs(admittance(params, sigma, 2.0 * math.pi * f_drive))
    sig_power = (v_peak * y_mag) ** 2
    noise = quant_step**2 / 12.0 * noise_power(ntf, weighting)
    return SnrReport(
        snr_db=10.0 * math.log10(sig_power / noise),
        signal_power=sig_power,
        noise_power=noise,
        method="frequency",
        sigma=sigma,
        ntf_id=ntf_id,
        config={"fs": fs, "v_peak": v_peak, "f_drive": f_drive,
                "quant_step": quant_step},
    )


def snr_time(config: ModulatorConfig, params: MotorParams, sigma: float,
             v_peak: float = 190.0, f_drive: float = 50.0,
             n_periods: int = 40, *, discard_periods: int = 10,
             ntf_id: str = "ntf") -> SnrReport:
    """SNR from a sample-accurate modulator run through the linearized motor.

    Drives the modulator with v_peak * sin(2 pi f_drive n / fs), filters the
    pulse stream through the discretized admittance, discards the leading
    ``discard_periods`` drive periods and coherently projects the rest onto
    the fundamental.  Powers are mean-square; harmonics produced by the
    modulator nonlinearity count toward noise.
    """
    if n_periods < 20:
        raise ConfigError("need at least 20 measured periods")
    fs = config.fs
    spp = fs / f_drive
    if abs(spp - round(spp)) > 1e-9:
        raise ConfigError("fs must be an integer multiple of f_drive")
    spp = int(round(spp))
    n_total = (discard_periods + n_periods) * spp
    n = np.arange(n_total)
    w = v_peak * np.sin(2.0 * np.pi * f_drive / fs * n)
    result = simulate(config, w)
    yhat = discretize_admittance(params, sigma, fs)
    current = signal.lfilter(yhat.num, yhat.den, result.output)
    skip = discard_periods * spp
    proj = coherent_projection(current[skip:], f_drive, fs, start_index=skip)
    return SnrReport(
        snr_db=10.0 * math.log10(proj.fundamental_power / proj.residual_power),
        signal_power=proj.fundamental_power,
        noise_power=proj.residual_power,
        method="time",
        sigma=sigma,
        ntf_id=ntf_id,
        config={"fs": fs, "v_peak": v_peak, "f_drive": f_drive,
                "levels": config.levels, "full_scale": config.full_scale,
                "n_periods": n_periods, "discard_periods": discard_periods},
        overloaded=result.overloaded,
    )


@dataclass
class SweepTable:
    """Cross table of SNR reports: one row per NTF, one column per slip.

    Cells hold SnrReport instances, or an error string when that cell's
    computation failed.
    """

    row_ids: list
    sigmas: list
    cells: list  # cells[i][j]: SnrReport | str
    designed_for: dict = field(default_factory=dict)  # row_id -> sigma | None
    method: str = "frequency"

    def cell(self, row_id: str, sigma: float):
        i = self.row_ids.index(row_id)
        j = self.sigmas.index(sigma)
        return self.cells[i][j]

    def to_csv(self, path, metadata: dict | None = None):
        """Two-decimal SNR grid; failed cells are written as nan."""
        lines = []
        for key, value in (metadata or {}).items():
            lines.append(f"# {key}: {value}")
        lines.append("ntf_id," + ",".join(f"sigma={s:g}" for s in self.sigmas))
        for row_id, row in zip(self.row_ids, self.cells):
            vals = [f"{c.snr_db:.2f}" if isinstance(c, SnrReport) else "nan"
                    for c in row]
            lines.append(row_id + "," + ",".join(vals))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json_dict(self) -> dict:
        def encode(c):
            if isinstance(c, SnrReport):
                return {"snr_db": c.snr_db, "signal_power": c.signal_power,
                        "noise_power": c.noise_power, "method": c.method,
                        "sigma": c.sigma, "ntf_id": c.ntf_id,
                        "overloaded": c.overloaded, "config": c.config}
            return {"error": str(c)}

        return {
            "method": self.method,
            "sigmas": list(self.sigmas),
            "rows": [
                {"ntf_id": rid,
                 "designed_for_sigma": self.designed_for.get(rid),
                 "cells": [encode(c) for c in row]}
                for rid, row in zip(self.row_ids, self.cells)
            ],
        }


def build_sweep(entries: Sequence[TableEntry], sigmas: Sequence[float],
                method: str, params: MotorParams, *, fs: float = 100e3,
                v_peak: float = 190.0, f_drive: float = 50.0,
                levels: int = 2, full_scale: float = 320.0,
                n_periods: int = 40) -> SweepTable:
    """Full cross-product SNR table.

    Cells are computed independently; a failing cell records its error
    message and the rest of the table is still returned.
    """
    entries = [e if isinstance(e, TableEntry) else TableEntry(*e) for e in entries]
    if not entries or not list(sigmas):
        raise ConfigError("need at least one NTF and one slip value")
    if method not in ("frequency", "time"):
        raise ConfigError(f"unknown method {method!r}")

    quant_step = 2.0 * full_scale / (levels - 1)
    weightings = {}
    if method == "frequency":
        m = max([e.ntf.q.size - 1 for e in entries if isinstance(e.ntf, NtfFir)],
                default=8)
        for s in sigmas:
            weightings[s] = weighting_from_admittance(params, s, fs, m=max(m, 8))

    rows = []
    for entry in entries:
        row = []
        for s in sigmas:
            try:
                if method == "frequency":
                    rep = snr_frequency(entry.ntf, params, s, fs, v_peak,
                                        f_drive, quant_step,
                                        ntf_id=entry.ntf_id,
                                        weighting=weightings[s])
                else:
                    cfg = ModulatorConfig(ntf=entry.ntf, levels=levels,
                                          full_scale=full_scale, fs=fs)
                    rep = snr_time(cfg, params, s, v_peak, f_drive, n_periods,
                                   ntf_id=entry.ntf_id)
                row.append(rep)
            except DsdriveError as exc:
                row.append(f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return SweepTable(
        row_ids=[e.ntf_id for e in entries],
        sigmas=list(sigmas),
        cells=rows,
        designed_for={e.ntf_id: e.designed_for_sigma for e in entries},
        method=method,
    )


class ColumnWinner(NamedTuple):
    best_id: str
    margin_db: float | None  # None when there is no runner-up


def diagonal_advantage(table: SweepTable) -> dict:
    """Per slip column: the winning NTF and its margin over the runner-up.

    Only slip-tagged rows compete (they are the candidates for tracking the
    load); with a single candidate row the margin is not applicable and
    reported as None.
    """
    tagged = [rid for rid in table.row_ids
              if table.designed_for.get(rid) is not None]
    candidates = tagged if tagged else list(table.row_ids)
    out = {}
    for j, s in enumerate(table.sigmas):
        scores = []
        for rid in candidates:
            cell = table.cells[table.row_ids.index(rid)][j]
            if isinstance(cell, SnrReport):
                scores.append((cell.snr_db, rid))
        if not scores:
            continue
        scores.sort(reverse=True)
        margin = scores[0][0] - scores[1][0] if len(scores) > 1 else None
        out[s] = ColumnWinner(best_id=scores[0][1], margin_db=margin)
    return out
