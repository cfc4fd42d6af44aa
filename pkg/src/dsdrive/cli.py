"""Batch front-end: designs, sweeps, and raw-stream simulation.

Every command is deterministic given its configuration; output files carry
a metadata block (config hash, gamma, quantizer levels) as ``#``-prefixed
header lines.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, design, motor
from .exceptions import ConfigError, DsdriveError
from .filters import evaluate, load_ntf, save_ntf
from .modulator import ModulatorConfig, simulate

STANDARD_ORDER = 4
OPTIMIZED_ORDER = 8


@dataclass
class RunConfig:
    motor: str | None = None
    fs: float = 100e3
    osr: int = 1000
    gamma: float = 1.5
    sigmas: list = field(default_factory=lambda: [0.043, 0.2, 0.6])
    v_peak: float = 190.0
    f_drive: float = 50.0
    levels: int = 2
    out: str = "."

    def validate(self):
        if self.fs / (2 * self.osr) < self.f_drive:
            raise ConfigError(
                f"drive frequency {self.f_drive} Hz exceeds the signal band "
                f"fs/(2*osr) = {self.fs / (2 * self.osr):g} Hz")
        if not self.sigmas:
            raise ConfigError("need at least one slip value")
        if self.levels < 2:
            raise ConfigError("levels must be at least 2")

    @property
    def full_scale(self) -> float:
        return float(motor_params(self).Vw)

    def to_dict(self) -> dict:
        return {"motor": self.motor, "fs": self.fs, "osr": self.osr,
                "gamma": self.gamma, "sigmas": list(self.sigmas),
                "drive": {"v_peak": self.v_peak, "f": self.f_drive},
                "levels": self.levels, "out": self.out}


def motor_params(cfg: RunConfig) -> motor.MotorParams:
    if cfg.motor is None:
        return motor.DEFAULT_MOTOR
    return motor.MotorParams.from_json(cfg.motor)


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        known = {"motor", "fs", "osr", "gamma", "sigmas", "drive", "levels", "out"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        drive = doc.get("drive", {})
        cfg = RunConfig(
            motor=doc.get("motor"),
            fs=float(doc.get("fs", cfg.fs)),
            osr=int(doc.get("osr", cfg.osr)),
            gamma=float(doc.get("gamma", cfg.gamma)),
            sigmas=[float(s) for s in doc.get("sigmas", cfg.sigmas)],
            v_peak=float(drive.get("v_peak", cfg.v_peak)),
            f_drive=float(drive.get("f", cfg.f_drive)),
            levels=int(doc.get("levels", cfg.levels)),
            out=doc.get("out", cfg.out),
        )
    # flags override config fields
    if getattr(args, "fs", None) is not None:
        cfg.fs = args.fs
    if getattr(args, "osr", None) is not None:
        cfg.osr = args.osr
    if getattr(args, "gamma", None) is not None:
        cfg.gamma = args.gamma
    if getattr(args, "sigma", None):
        cfg.sigmas = [float(s) for s in args.sigma]
    if getattr(args, "levels", None) is not None:
        cfg.levels = args.levels
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    if getattr(args, "motor", None) is not None:
        cfg.motor = args.motor
    cfg.validate()
    return cfg


def config_hash(cfg: RunConfig) -> str:
    # hash what determines the numbers: resolved motor parameters plus the
    # run settings; not the output location
    doc = cfg.to_dict()
    doc.pop("out", None)
    doc["motor"] = motor_params(cfg).to_dict()
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def metadata_lines(cfg: RunConfig, **extra) -> list:
    meta = {"config_hash": config_hash(cfg), "gamma": cfg.gamma,
            "levels": cfg.levels, **extra}
    return [f"# {k}: {v}" for k, v in meta.items()]


def fmt(v) -> str:
    """Shortest round-trip decimal form (deterministic)."""
    return repr(float(v))


def write_csv(path: Path, header: str, rows, meta: list):
    lines = list(meta) + [header] + rows
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_stream_csv(path: Path, name: str, values, meta: list):
    write_csv(path, name, [fmt(v) for v in values], meta)


def out_dir(cfg: RunConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _design_entries(cfg: RunConfig, params, ntf_dir: str | None):
    """The table's NTF set: either loaded from a directory or the default
    standard + per-slip optimized designs."""
    if ntf_dir is not None:
        paths = sorted(Path(ntf_dir).glob("*.json"))
        if not paths:
            raise ConfigError(f"no NTF .json files found in {ntf_dir}")
        entries = []
        for p in paths:
            ntf, meta = load_ntf(p)
            entries.append(analysis.TableEntry(p.stem, ntf,
                                               meta.get("designed_for_sigma")))
        return entries
    spec_std = design.DesignSpec(order=STANDARD_ORDER, osr=cfg.osr,
                                 gamma=cfg.gamma)
    entries = [analysis.TableEntry(f"standard-{STANDARD_ORDER}",
                                   design.synthesize_standard(spec_std), None)]
    spec_opt = design.DesignSpec(order=OPTIMIZED_ORDER, osr=cfg.osr,
                                 gamma=cfg.gamma)
    for s in cfg.sigmas:
        w = design.weighting_from_admittance(params, s, cfg.fs,
                                             m=OPTIMIZED_ORDER)
        entries.append(analysis.TableEntry(f"opt-sigma-{s:g}",
                                           design.optimize_ntf_fir(w, spec_opt), s))
    return entries


def cmd_motor_tf(cfg: RunConfig, args) -> int:
    """Admittance magnitude (dB) on a log grid, one column per slip."""
    params = motor_params(cfg)
    freqs = np.geomspace(1.0, 50e3, 500)
    cols = [np.abs(motor.admittance(params, s, 2 * np.pi * freqs))
            for s in cfg.sigmas]
    header = "freq_hz," + ",".join(f"sigma={s:g}_db" for s in cfg.sigmas)
    rows = []
    for i, f in enumerate(freqs):
        vals = ",".join(f"{20 * math.log10(c[i]):.6f}" for c in cols)
        rows.append(f"{fmt(f)},{vals}")
    path = out_dir(cfg) / "motor_tf.csv"
    write_csv(path, header, rows, metadata_lines(cfg))
    print(path)
    return 0


def cmd_design(cfg: RunConfig, args) -> int:
    """Design NTFs and emit JSON + report + magnitude data."""
    params = motor_params(cfg)
    odir = out_dir(cfg)
    if args.mode == "standard":
        order = args.order or STANDARD_ORDER
        spec = design.DesignSpec(order=order, osr=cfg.osr, gamma=cfg.gamma)
        ntf = design.synthesize_standard(spec)
        jobs = [(f"standard-{order}", ntf, None, {})]
    else:
        order = args.order or OPTIMIZED_ORDER
        spec = design.DesignSpec(order=order, osr=cfg.osr, gamma=cfg.gamma)
        sigmas = [float(args.sigma[0])] if args.sigma else cfg.sigmas
        jobs = []
        for s in sigmas:
            w = design.weighting_from_admittance(params, s, cfg.fs, m=order)
            ntf = design.optimize_ntf_fir(w, spec)
            jobs.append((f"opt-sigma-{s:g}", ntf, s, ntf.info))

    meta = metadata_lines(cfg)
    for name, ntf, s, info in jobs:
        save_ntf(odir / f"{name}.json", ntf, gamma=cfg.gamma, fs=cfg.fs,
                 designed_for_sigma=s)
        omega = np.linspace(0.0, np.pi, 2001)
        mag = np.abs(evaluate(ntf, omega))
        rows = [f"{fmt(f)},{20 * math.log10(max(m, 1e-300)):.6f}"
                for f, m in zip(omega * cfg.fs / (2 * np.pi), mag)]
        write_csv(odir / f"{name}_mag.csv", "freq_hz,mag_db", rows, meta)
        report = [f"design: {name}", f"order: {order}", f"gamma: {cfg.gamma}"]
        if info:
            report += [f"objective: {info['objective']:.9e}",
                       f"max_gain_achieved: {info['max_gain']:.9f}",
                       f"iterations: {info['iterations']}",
                       f"kkt_residual: {info['kkt_residual']:.3e}"]
        else:
            grid = np.linspace(0.0, np.pi, 16384)
            g = float(np.max(np.abs(evaluate(ntf, grid))))
            report.append(f"max_gain_achieved: {g:.9f}")
        (odir / f"{name}_report.txt").write_text("\n".join(report) + "\n",
                                                 encoding="utf-8")
        print(odir / f"{name}.json")
    return 0


def cmd_table(cfg: RunConfig, args) -> int:
    """SNR sweep table over the NTF set and the configured slips."""
    params = motor_params(cfg)
    entries = _design_entries(cfg, params, args.ntf_dir)
    table = analysis.build_sweep(
        entries, cfg.sigmas, args.method, params, fs=cfg.fs,
        v_peak=cfg.v_peak, f_drive=cfg.f_drive, levels=cfg.levels,
        full_scale=cfg.full_scale)
    odir = out_dir(cfg)
    csv_path = odir / f"table_{args.method}.csv"
    table.to_csv(csv_path, metadata=dict(
        config_hash=config_hash(cfg), gamma=cfg.gamma, levels=cfg.levels,
        method=args.method))
    doc = {"meta": {"config_hash": config_hash(cfg), "gamma": cfg.gamma,
                    "levels": cfg.levels},
           "table": table.to_json_dict()}
    (odir / f"table_{args.method}.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    winners = analysis.diagonal_advantage(table)
    for s, win in winners.items():
        margin = "n/a" if win.margin_db is None else f"{win.margin_db:.2f} dB"
        print(f"sigma={s:g}: best {win.best_id} (margin {margin})")
    print(csv_path)
    return 0


def cmd_steady_state(cfg: RunConfig, args) -> int:
    """Settled slip under the nominal sinusoidal drive and a shaft load."""
    params = motor_params(cfg)
    point = motor.steady_state_slip(params, load=args.load)
    doc = {"meta": {"config_hash": config_hash(cfg), "load": args.load},
           "sigma": point.sigma, "omega_w": point.omega_w,
           "omega_m": (1.0 - point.sigma) * params.synchronous_speed()}
    path = out_dir(cfg) / "steady_state.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    print(path)
    return 0


def cmd_simulate(cfg: RunConfig, args) -> int:
    """Raw modulator streams for a sinusoidal command."""
    params = motor_params(cfg)
    if args.ntf:
        ntf, _ = load_ntf(args.ntf)
        name = Path(args.ntf).stem
    else:
        spec = design.DesignSpec(order=STANDARD_ORDER, osr=cfg.osr,
                                 gamma=cfg.gamma)
        ntf = design.synthesize_standard(spec)
        name = f"standard-{STANDARD_ORDER}"
    mconfig = ModulatorConfig(ntf=ntf, levels=cfg.levels,
                              full_scale=cfg.full_scale, fs=cfg.fs)
    spp = int(round(cfg.fs / cfg.f_drive))
    n = args.periods * spp
    w = cfg.v_peak * np.sin(2 * np.pi * cfg.f_drive / cfg.fs * np.arange(n))
    result = simulate(mconfig, w)
    meta = metadata_lines(cfg, ntf=name, overloaded=result.overloaded,
                          periods=args.periods)
    odir = out_dir(cfg)
    write_stream_csv(odir / "simulate_output.csv", "output_v",
                     result.output, meta)
    write_stream_csv(odir / "simulate_error.csv", "error_v",
                     result.error, meta)
    print(odir / "simulate_output.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsdrive",
        description="Noise-shaping design and simulation for PDM motor drives")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--motor", help="motor parameter JSON file")
        p.add_argument("--fs", type=float, help="modulator sample rate, Hz")
        p.add_argument("--osr", type=int, help="oversampling ratio")
        p.add_argument("--gamma", type=float, help="NTF max-gain bound")
        p.add_argument("--sigma", action="append",
                       help="slip value (repeatable)")
        p.add_argument("--levels", type=int, help="quantizer level count")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; all commands are deterministic")

    p = sub.add_parser("motor-tf", help="admittance magnitude vs frequency")
    common(p)
    p.set_defaults(func=cmd_motor_tf)

    p = sub.add_parser("design", help="synthesize an NTF")
    common(p)
    p.add_argument("--mode", choices=("standard", "optimized"),
                   default="optimized")
    p.add_argument("--order", type=int, default=None)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("table", help="SNR sweep table")
    common(p)
    p.add_argument("--method", choices=("frequency", "time"),
                   default="frequency")
    p.add_argument("--ntf-dir", default=None,
                   help="directory of NTF .json files to sweep "
                        "(default: design the standard + per-slip set)")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("steady-state", help="settled slip under a load")
    common(p)
    p.add_argument("--load", type=float, default=0.0, help="shaft load, N*m")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("simulate", help="raw modulator streams")
    common(p)
    p.add_argument("--ntf", default=None, help="NTF JSON file")
    p.add_argument("--periods", type=int, default=50)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return args.func(cfg, args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"dsdrive: configuration error: {exc}", file=sys.stderr)
        return 2
    except DsdriveError as exc:
        print(f"dsdrive: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
