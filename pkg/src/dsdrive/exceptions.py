"""Exception types shared across the toolkit."""


class DsdriveError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DsdriveError):
    """Invalid parameters, configuration files, or argument combinations."""


class DivergenceError(DsdriveError):
    """State magnitude exceeded the divergence bound during integration."""

    def __init__(self, time, bound):
        self.time = float(time)
        self.bound = float(bound)
        super().__init__(f"state magnitude exceeded {bound:g} at t = {time:.6g} s")


class ConvergenceError(DsdriveError):
    """An iterative procedure did not settle within its budget."""


class PullOutError(DsdriveError):
    """The rotor stalled instead of reaching a stable operating point."""


class UnstableFilterError(DsdriveError):
    """A discrete-time filter has poles on or outside the unit circle."""


class NonMinimumPhaseError(DsdriveError):
    """The requested loop-filter factorization needs a minimum-phase NTF."""


class ModulatorInstabilityError(DsdriveError):
    """The modulator state became non-finite."""

    def __init__(self, sample_index):
        self.sample_index = int(sample_index)
        super().__init__(f"modulator state became non-finite at sample {sample_index}")


class SolverError(DsdriveError):
    """The NTF synthesis could not meet its target."""
