"""Noise-shaping design and simulation toolkit for PDM induction-motor drives.

Designs delta-sigma noise transfer functions adapted to the motor's
per-slip admittance, simulates the modulator and machine in time and
frequency domains, and builds the SNR comparison tables that test whether
the adaptation pays off.
"""

from ._backend import BACKEND
from .motor import (
    MotorParams,
    MotorState,
    SlipPoint,
    DEFAULT_MOTOR,
    motor_derivative,
    integrate,
    balanced_drive,
    steady_state_slip,
    admittance,
    discretize_admittance,
)
from .filters import RationalFilter, NtfFir, evaluate, save_ntf, load_ntf
from .modulator import ModulatorConfig, quantize, simulate, ff_fb_from_ntf
from .design import (
    DesignSpec,
    Weighting,
    synthesize_standard,
    weighting_from_admittance,
    optimize_ntf_fir,
    noise_power,
)
from .analysis import (
    SnrReport,
    SweepTable,
    TableEntry,
    coherent_projection,
    snr_frequency,
    snr_time,
    build_sweep,
    diagonal_advantage,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "MotorParams", "MotorState", "SlipPoint", "DEFAULT_MOTOR",
    "motor_derivative", "integrate", "balanced_drive", "steady_state_slip",
    "admittance", "discretize_admittance",
    "RationalFilter", "NtfFir", "evaluate", "save_ntf", "load_ntf",
    "ModulatorConfig", "quantize", "simulate", "ff_fb_from_ntf",
    "DesignSpec", "Weighting", "synthesize_standard",
    "weighting_from_admittance", "optimize_ntf_fir", "noise_power",
    "SnrReport", "SweepTable", "TableEntry", "coherent_projection",
    "snr_frequency", "snr_time", "build_sweep", "diagonal_advantage",
]
