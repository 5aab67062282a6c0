"""Exception hierarchy shared across the package.

Every failure mode the command line can hit maps to a distinct exit code
through the ``exit_code`` attribute; library callers catch the types.
"""

from __future__ import annotations


class WaveFocusError(Exception):
    """Base class for all package-specific failures."""

    exit_code = 1


class ConfigError(WaveFocusError):
    """Invalid configuration: unknown keys, missing values, bad grids."""

    exit_code = 2


class IllPosedFloorError(WaveFocusError):
    """A radial moment underflowed the representable floor for some band.

    Carries the offending degree so callers can lower the band limit or
    raise the wavenumber.
    """

    exit_code = 3

    def __init__(self, degree: int, magnitude: float):
        self.degree = degree
        self.magnitude = magnitude
        super().__init__(
            f"radial moment for degree l={degree} has magnitude "
            f"{magnitude:.3e} below the 1e-300 floor; the inversion is "
            "not representable in double precision at this band"
        )


class DegenerateDenominatorError(WaveFocusError):
    """The reconstruction denominator dipped below the configured floor."""

    exit_code = 4

    def __init__(self, min_modulus: float, floor: float, node_indices):
        self.min_modulus = min_modulus
        self.floor = floor
        self.node_indices = list(node_indices)
        super().__init__(
            f"denominator modulus {min_modulus:.6e} is at or below the "
            f"floor {floor:.6e} at {len(self.node_indices)} grid node(s); "
            "perturb the source expansion or lower the floor"
        )


class PerturbationBudgetError(WaveFocusError):
    """No compliant perturbation was found within the attempt budget."""

    exit_code = 5

    def __init__(self, attempts: int, best_min_modulus: float, floor: float):
        self.attempts = attempts
        self.best_min_modulus = best_min_modulus
        self.floor = floor
        super().__init__(
            f"{attempts} perturbation attempts failed to lift the "
            f"denominator above {floor:.3e} (best attempt reached "
            f"{best_min_modulus:.6e})"
        )


class SolverConvergenceError(WaveFocusError):
    """The iterative forward solve missed its tolerance, retry included."""

    exit_code = 6

    def __init__(self, residual: float, tol: float, history):
        self.residual = residual
        self.tol = tol
        self.residual_history = list(history)
        super().__init__(
            f"forward solve stalled at relative residual {residual:.3e} "
            f"(tolerance {tol:.3e}) after the coarse-seeded retry"
        )


class OutputLockError(WaveFocusError):
    """Another invocation holds the output directory lock."""

    exit_code = 7

    def __init__(self, lock_path):
        self.lock_path = str(lock_path)
        super().__init__(
            f"output directory is locked by another run ({self.lock_path}); "
            "choose a distinct output directory or remove the stale lock"
        )


class NumericsError(WaveFocusError):
    """An adaptive quadrature or similar numeric routine missed its target."""

    exit_code = 8
