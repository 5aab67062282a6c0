"""Translation of a designed potential into a small-particle embedding.

In the many-small-particle limit, embedding particles of capacitance C
with number density N(x) into a background with potential q0 produces the
effective potential q0 + C N, so the density realizing a designed q is

    N(x) = Re(q(x) - q0(x)) / C.

Boundary impedance zeta shifts the capacitance to
C_zeta = C / (1 + C / (zeta |S|)); zeta = None marks the acoustically soft
(Dirichlet) limit C_zeta = C.  The asymptotic regime needs k a << 1 and
a << d (particle radius far below spacing); ``validity_report`` scores a
design against those premises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potential import BallGrid, PotentialField

__all__ = [
    "CapacitanceModel",
    "ParticleDensityField",
    "ValidityReport",
    "sphere_capacitance",
    "impedance_capacitance",
    "density_from_potential",
    "validity_report",
]


def sphere_capacitance(particle_radius: float) -> float:
    """Capacitance of a sphere, 4 pi a (Gaussian-type normalization).

    A convention choice; supply ``c0`` directly to
    :class:`CapacitanceModel` to override it.
    """
    if particle_radius <= 0.0:
        raise ValueError(f"particle radius must be positive, got {particle_radius}")
    return 4.0 * math.pi * particle_radius


@dataclass(frozen=True)
class CapacitanceModel:
    """Electrostatic data of one embedded particle.

    ``impedance`` is the boundary impedance zeta; None means acoustically
    soft.  ``surface_area`` defaults to the sphere value for the given
    radius.
    """

    c0: float
    particle_radius: float
    surface_area: float | None = None
    impedance: complex | None = None

    def __post_init__(self):
        if self.c0 <= 0.0:
            raise ValueError(f"capacitance must be positive, got {self.c0}")
        if self.particle_radius <= 0.0:
            raise ValueError(
                f"particle radius must be positive, got {self.particle_radius}"
            )
        if self.surface_area is None:
            object.__setattr__(
                self, "surface_area", 4.0 * math.pi * self.particle_radius**2
            )
        elif self.surface_area <= 0.0:
            raise ValueError(f"surface area must be positive, got {self.surface_area}")

    @classmethod
    def soft_sphere(cls, particle_radius: float) -> "CapacitanceModel":
        return cls(sphere_capacitance(particle_radius), particle_radius)


def impedance_capacitance(model: CapacitanceModel) -> complex:
    """Effective capacitance C_zeta = C0 / (1 + C0 / (zeta |S|)).

    Reduces to C0 in the soft limit (zeta = None, or |zeta| -> infinity
    with error O(1/zeta)).  Raises for a zeta that makes the denominator
    vanish.
    """
    if model.impedance is None:
        return complex(model.c0)
    zeta = complex(model.impedance)
    if zeta == 0.0:
        raise ValueError("zero impedance makes the effective capacitance vanish")
    denom = 1.0 + model.c0 / (zeta * model.surface_area)
    if abs(denom) < 1e-14:
        raise ValueError(
            f"impedance {zeta} is resonant: 1 + C0/(zeta |S|) = {denom:.3e}"
        )
    return model.c0 / denom


@dataclass
class ParticleDensityField:
    """Nonnegative particle density on a ball grid.

    Nodes where the raw ratio went negative are clamped to zero and flagged
    in ``negative_mask`` (never silently).  ``max_abs_imag`` records how far
    the ratio strayed from real, which is a modeling inconsistency to
    report, not an error.
    """

    grid: BallGrid
    n_values: np.ndarray
    negative_mask: np.ndarray
    max_abs_imag: float
    capacitance: complex

    @property
    def max_density(self) -> float:
        return float(np.max(self.n_values)) if self.n_values.size else 0.0

    @property
    def negative_fraction(self) -> float:
        if self.negative_mask.size == 0:
            return 0.0
        return float(np.count_nonzero(self.negative_mask) / self.negative_mask.size)


def density_from_potential(
    q_field: PotentialField,
    background_q0: np.ndarray | complex,
    model: CapacitanceModel,
) -> ParticleDensityField:
    """N = Re((q - q0) / C_zeta), clamped at zero with the clamp recorded."""
    c_eff = impedance_capacitance(model)
    ratio = (q_field.q_values - background_q0) / c_eff
    raw = ratio.real
    negative = raw < 0.0
    return ParticleDensityField(
        grid=q_field.grid,
        n_values=np.where(negative, 0.0, raw),
        negative_mask=negative,
        max_abs_imag=float(np.max(np.abs(ratio.imag))) if ratio.size else 0.0,
        capacitance=c_eff,
    )


@dataclass(frozen=True)
class ValidityReport:
    """Checks of the small-particle asymptotic premises.

    ``ka_ratio`` = k0 * a must stay below the smallness threshold, and
    ``spacing_ratio`` = a / d_min with d_min = (max N)^{-1/3} must as well;
    ``volume_fraction`` = spacing_ratio^3 comes along for reporting.  An
    identically zero density passes trivially (d_min infinite).
    """

    k0: float
    particle_radius: float
    d_min: float
    ka_ratio: float
    spacing_ratio: float
    volume_fraction: float
    ka_threshold: float
    spacing_threshold: float
    passed: bool
    failures: tuple[str, ...]


def validity_report(
    density: ParticleDensityField,
    particle_radius: float,
    k: float,
    n0_max: float = 1.0,
    *,
    ka_threshold: float = 0.1,
    spacing_threshold: float = 0.1,
) -> ValidityReport:
    """Score the density field against the asymptotic-regime premises."""
    if k <= 0.0:
        raise ValueError(f"wavenumber must be positive, got k={k}")
    if particle_radius <= 0.0:
        raise ValueError(f"particle radius must be positive, got {particle_radius}")
    if n0_max <= 0.0:
        raise ValueError(f"background refraction bound must be positive, got {n0_max}")
    if ka_threshold <= 0.0 or spacing_threshold <= 0.0:
        raise ValueError("validity thresholds must be positive")
    radius = particle_radius
    k0 = k * n0_max
    ka = k0 * radius
    nmax = density.max_density
    # cbrt, not **(1/3): the boundary case (max N = 1e6, a = 1e-3) must land
    # exactly on a/d = 0.1, and pow with an inexact exponent puts it an ulp under
    d_min = math.inf if nmax == 0.0 else float(1.0 / np.cbrt(nmax))
    spacing = 0.0 if math.isinf(d_min) else radius / d_min
    failures = []
    if ka >= ka_threshold:
        failures.append(
            f"k0*a = {ka:.4g} exceeds the smallness threshold {ka_threshold}"
        )
    if spacing >= spacing_threshold:
        failures.append(
            f"a/d_min = {spacing:.4g} exceeds the dilution threshold {spacing_threshold}"
        )
    return ValidityReport(
        k0=k0,
        particle_radius=radius,
        d_min=d_min,
        ka_ratio=ka,
        spacing_ratio=spacing,
        volume_fraction=spacing**3,
        ka_threshold=ka_threshold,
        spacing_threshold=spacing_threshold,
        passed=not failures,
        failures=tuple(failures),
    )
