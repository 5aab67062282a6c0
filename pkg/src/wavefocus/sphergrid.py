"""Quadrature grids on the unit sphere and spherical-harmonic transforms.

The grid is a tensor product of Gauss-Legendre nodes in cos(theta) and a
uniform trapezoid rule in phi, which integrates products of harmonics
exactly once n_theta > band and n_phi > 2*band.  ``analyze`` projects node
samples onto the orthonormal basis, ``synthesize`` evaluates a coefficient
table back on a grid, and ``cone_target`` samples the annular indicator
targets used by the focusing experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError
from .specfun import sph_harm_table

__all__ = [
    "SphereGrid",
    "ShCoefficients",
    "analyze",
    "synthesize",
    "tail_energy",
    "cone_target",
]

# cap on per-chunk harmonic-matrix entries so analysis at large bands stays
# within a few tens of MB regardless of grid size
_CHUNK_ENTRIES = 2_000_000


@dataclass(frozen=True)
class SphereGrid:
    """Product quadrature grid on S^2, optionally carrying node samples.

    Node ordering is theta-major: node index = i_theta * n_phi + i_phi.
    Weights sum to 4 pi.  ``values`` is either None or a complex array
    aligned with the nodes.
    """

    n_theta: int
    n_phi: int
    thetas: np.ndarray
    phis: np.ndarray
    weights: np.ndarray
    values: np.ndarray | None = None

    @classmethod
    def gauss_uniform(cls, n_theta: int, n_phi: int) -> "SphereGrid":
        """Gauss-Legendre x uniform product rule with the given axis counts."""
        if n_theta < 1 or n_phi < 1:
            raise ConfigError(f"grid axes must be positive, got {n_theta} x {n_phi}")
        x, w = leggauss(n_theta)
        theta_axis = np.arccos(x)
        phi_axis = 2.0 * np.pi * np.arange(n_phi) / n_phi
        thetas = np.repeat(theta_axis, n_phi)
        phis = np.tile(phi_axis, n_theta)
        weights = np.repeat(w, n_phi) * (2.0 * np.pi / n_phi)
        return cls(n_theta, n_phi, thetas, phis, weights)

    @property
    def n_nodes(self) -> int:
        return self.thetas.size

    def with_values(self, values: np.ndarray) -> "SphereGrid":
        values = np.asarray(values, dtype=complex)
        if values.shape != self.thetas.shape:
            raise ValueError(
                f"values shape {values.shape} does not match the {self.n_nodes} grid nodes"
            )
        return replace(self, values=values)

    def unit_vectors(self) -> np.ndarray:
        """Cartesian directions of the nodes, shape (n_nodes, 3)."""
        st = np.sin(self.thetas)
        return np.column_stack(
            (st * np.cos(self.phis), st * np.sin(self.phis), np.cos(self.thetas))
        )

    def norm(self) -> float:
        """Quadrature L2 norm of the stored samples."""
        if self.values is None:
            raise ValueError("grid carries no values")
        return float(np.sqrt(np.sum(self.weights * np.abs(self.values) ** 2)))


@dataclass(frozen=True)
class ShCoefficients:
    """Dense coefficient table for all (l, m) with l <= band_limit.

    Flat storage index is l*l + l + m.  A real pattern satisfies
    c_{l,-m} = (-1)^m conj(c_{l,m}).
    """

    band_limit: int
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        expected = (self.band_limit + 1) ** 2
        if self.band_limit < 0:
            raise ValueError(f"band limit must be nonnegative, got {self.band_limit}")
        if entries.shape != (expected,):
            raise ValueError(
                f"expected {expected} entries for band {self.band_limit}, got {entries.shape}"
            )
        object.__setattr__(self, "entries", entries)

    @staticmethod
    def flat_index(l: int, m: int) -> int:
        if abs(m) > l:
            raise ValueError(f"order must satisfy |m| <= l, got l={l}, m={m}")
        return l * l + l + m

    @classmethod
    def zeros(cls, band_limit: int) -> "ShCoefficients":
        return cls(band_limit, np.zeros((band_limit + 1) ** 2, dtype=complex))

    def get(self, l: int, m: int) -> complex:
        if l > self.band_limit:
            raise ValueError(f"degree {l} exceeds band limit {self.band_limit}")
        return complex(self.entries[self.flat_index(l, m)])

    def with_entry(self, l: int, m: int, value: complex) -> "ShCoefficients":
        if l > self.band_limit:
            raise ValueError(f"degree {l} exceeds band limit {self.band_limit}")
        entries = self.entries.copy()
        entries[self.flat_index(l, m)] = value
        return ShCoefficients(self.band_limit, entries)

    def norm(self) -> float:
        """l2 norm of the table; equals the L2(S^2) norm of the synthesis."""
        return float(np.linalg.norm(self.entries))

    def truncated(self, band_limit: int) -> "ShCoefficients":
        """Copy restricted (or zero-padded) to the given band limit."""
        if band_limit < 0:
            raise ValueError(f"band limit must be nonnegative, got {band_limit}")
        out = np.zeros((band_limit + 1) ** 2, dtype=complex)
        keep = min(band_limit, self.band_limit)
        out[: (keep + 1) ** 2] = self.entries[: (keep + 1) ** 2]
        return ShCoefficients(band_limit, out)

    def degrees(self) -> np.ndarray:
        """Degree l of each flat entry."""
        ls = np.empty((self.band_limit + 1) ** 2, dtype=int)
        for l in range(self.band_limit + 1):
            ls[l * l : (l + 1) ** 2] = l
        return ls


def _require_resolution(grid: SphereGrid, band_limit: int) -> None:
    if grid.n_theta <= band_limit or grid.n_phi <= 2 * band_limit:
        raise ConfigError(
            f"grid {grid.n_theta} x {grid.n_phi} cannot resolve band {band_limit}; "
            f"need n_theta > {band_limit} and n_phi > {2 * band_limit}"
        )


def analyze(grid: SphereGrid, band_limit: int) -> ShCoefficients:
    """Project node samples onto the harmonics: c_lm = sum_i w_i f_i conj(Y_lm).

    Exact (to roundoff) for band-limited input resolved by the grid; the
    grid must satisfy n_theta > band_limit and n_phi > 2*band_limit.
    """
    if grid.values is None:
        raise ValueError("grid carries no values to analyze")
    _require_resolution(grid, band_limit)
    ncoef = (band_limit + 1) ** 2
    wf = grid.weights * grid.values
    out = np.zeros(ncoef, dtype=complex)
    chunk = max(1, _CHUNK_ENTRIES // ncoef)
    for start in range(0, grid.n_nodes, chunk):
        stop = min(start + chunk, grid.n_nodes)
        table = sph_harm_table(band_limit, grid.thetas[start:stop], grid.phis[start:stop])
        out += table.conj().T @ wf[start:stop]
    return ShCoefficients(band_limit, out)


def synthesize(coeffs: ShCoefficients, grid: SphereGrid) -> SphereGrid:
    """Evaluate a coefficient table at the grid nodes; returns a valued grid."""
    ncoef = (coeffs.band_limit + 1) ** 2
    values = np.empty(grid.n_nodes, dtype=complex)
    chunk = max(1, _CHUNK_ENTRIES // ncoef)
    for start in range(0, grid.n_nodes, chunk):
        stop = min(start + chunk, grid.n_nodes)
        table = sph_harm_table(coeffs.band_limit, grid.thetas[start:stop], grid.phis[start:stop])
        values[start:stop] = table @ coeffs.entries
    return grid.with_values(values)


def tail_energy(coeffs: ShCoefficients, cutoff: int) -> float:
    """sqrt of the coefficient energy strictly above degree ``cutoff``.

    Quantifies what a truncation to ``cutoff`` discards; zero when the
    table holds no degrees above the cutoff.
    """
    if cutoff < 0:
        raise ValueError(f"cutoff must be nonnegative, got {cutoff}")
    if cutoff >= coeffs.band_limit:
        return 0.0
    start = (cutoff + 1) ** 2
    return float(np.linalg.norm(coeffs.entries[start:]))


def cone_target(
    grid: SphereGrid,
    theta_lo: float,
    theta_hi: float,
    amplitude: complex = 1.0,
) -> SphereGrid:
    """Annular indicator target: ``amplitude`` for theta in [theta_lo, theta_hi].

    Sampled pointwise with no edge smoothing; the band truncation applied
    downstream is the only smoothing.  Bounds are inclusive and must satisfy
    0 <= theta_lo < theta_hi <= pi.
    """
    if not (0.0 <= theta_lo < theta_hi <= np.pi):
        raise ValueError(
            f"cone bounds must satisfy 0 <= lo < hi <= pi, got [{theta_lo}, {theta_hi}]"
        )
    inside = (grid.thetas >= theta_lo) & (grid.thetas <= theta_hi)
    return grid.with_values(np.where(inside, complex(amplitude), 0.0 + 0.0j))
