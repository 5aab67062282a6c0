"""Volume potential of the source expansion and reconstruction of q.

The scattering potential is recovered pointwise from the source h through

    q(x) = h(x) / (u0(x) - v(x)),        v(x) = int_D g(x, y) h(y) dy,

with u0 the incident plane wave and g the outgoing Helmholtz kernel
e^{ik|x-y|}/(4 pi |x-y|).  Because h has separated form (constant radial
profiles times harmonics), v is evaluated semi-analytically: expanding the
kernel in spherical harmonics leaves one radial factor per degree,

    R_l(r) = i k [ h_l(kr) int_0^r j_l(ks) s^2 ds
                   + j_l(kr) int_r^b h_l(ks) s^2 ds ],

and v = sum_lm h_lm R_l(|x|) Y_lm(x/|x|).  The 1-D integrals are done by
adaptive quadrature accumulated over the sorted node radii.

Whenever |u0 - v| dips to the configured floor somewhere on the grid, the
reconstruction refuses to divide; ``perturb_h`` searches for a nearby
expansion (within an L2 budget) whose denominator clears the floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .errors import ConfigError, DegenerateDenominatorError, PerturbationBudgetError
from .specfun import sph_bessel_j, sph_harm_table, sph_hankel1
from .sphergrid import ShCoefficients
from .synthesis import HExpansion, evaluate_h

__all__ = [
    "BallGrid",
    "PotentialField",
    "DenominatorReport",
    "PerturbationReport",
    "volume_potential",
    "volume_potential_at",
    "incident_wave",
    "check_denominator",
    "reconstruct_q",
    "perturb_h",
]


@dataclass(frozen=True)
class BallGrid:
    """Product quadrature grid on the ball |x| <= radius.

    Gauss-Legendre in r (weights carry r^2) and cos(theta), uniform in phi;
    node index = (i_r * n_theta + i_t) * n_phi + i_p.  Weights sum to the
    ball volume.  ``cell_radii`` are the equal-volume radii (3 w / 4 pi)^{1/3}
    used for singular self-cell handling in the forward solver.
    """

    radius: float
    n_r: int
    n_theta: int
    n_phi: int
    r_axis: np.ndarray
    r_weights: np.ndarray
    t_axis: np.ndarray
    t_weights: np.ndarray
    radii: np.ndarray = field(repr=False)
    thetas: np.ndarray = field(repr=False)
    phis: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def product(cls, radius: float, n_r: int, n_theta: int, n_phi: int) -> "BallGrid":
        if radius <= 0.0:
            raise ConfigError(f"ball radius must be positive, got {radius}")
        if min(n_r, n_theta, n_phi) < 2:
            raise ConfigError(
                f"ball grid axes must each have at least 2 nodes, got "
                f"{n_r} x {n_theta} x {n_phi}"
            )
        xr, wr = leggauss(n_r)
        r_axis = 0.5 * radius * (xr + 1.0)
        r_weights = 0.5 * radius * wr * r_axis**2
        xt, wt = leggauss(n_theta)
        t_axis = xt
        w_phi = 2.0 * np.pi / n_phi
        phi_axis = w_phi * np.arange(n_phi)
        theta_axis = np.arccos(xt)
        radii = np.repeat(r_axis, n_theta * n_phi)
        thetas = np.tile(np.repeat(theta_axis, n_phi), n_r)
        phis = np.tile(phi_axis, n_r * n_theta)
        weights = np.repeat(np.outer(r_weights, wt).ravel(), n_phi) * w_phi
        return cls(
            radius, n_r, n_theta, n_phi,
            r_axis, r_weights, t_axis, wt,
            radii, thetas, phis, weights,
        )

    @property
    def n_nodes(self) -> int:
        return self.radii.size

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * np.pi * self.radius**3

    def cartesian(self) -> np.ndarray:
        st = np.sin(self.thetas)
        return np.column_stack(
            (
                self.radii * st * np.cos(self.phis),
                self.radii * st * np.sin(self.phis),
                self.radii * np.cos(self.thetas),
            )
        )

    def cell_radii(self) -> np.ndarray:
        return (3.0 * self.weights / (4.0 * np.pi)) ** (1.0 / 3.0)

    def l2_norm(self, values: np.ndarray) -> float:
        """Quadrature L2(D) norm of node samples."""
        return float(np.sqrt(np.sum(self.weights * np.abs(values) ** 2)))


def _complex_quad(f, a: float, b: float, tol: float = 1e-11) -> complex:
    value, _ = quad(f, a, b, epsabs=tol, epsrel=tol, limit=200, complex_func=True)
    return value


def _radial_factor_table(
    band_limit: int, k: float, b: float, radii: np.ndarray
) -> np.ndarray:
    """R_l(r) for l = 0..band_limit at each requested radius.

    Accumulates the two cumulative integrals segment by segment over the
    sorted radii so each 1-D quadrature covers a short smooth interval.
    Radii of exactly zero get the analytic limit (only l = 0 survives).
    """
    radii = np.asarray(radii, dtype=float)
    order = np.argsort(radii)
    rs = radii[order]
    out = np.empty((band_limit + 1, radii.size), dtype=complex)
    for l in range(band_limit + 1):
        inner = np.empty(rs.size)  # int_0^r j_l(ks) s^2 ds, real
        outer = np.empty(rs.size, dtype=complex)  # int_r^b h_l(ks) s^2 ds
        prev_r = 0.0
        acc = 0.0
        for i, r in enumerate(rs):
            hi = min(r, b)  # the source vanishes beyond its support
            if hi > prev_r:
                acc += _complex_quad(
                    lambda s: sph_bessel_j(l, k * s) * s * s, prev_r, hi
                ).real
                prev_r = hi
            inner[i] = acc
        next_r = b
        acc_out = 0.0 + 0.0j
        for i in range(rs.size - 1, -1, -1):
            r = rs[i]
            if r == 0.0:
                # the outer integral diverges at 0 for l >= 1 but is then
                # multiplied by j_l(0) = 0; only l = 0 needs the value
                if l == 0 and next_r > 0.0:
                    acc_out += _complex_quad(
                        lambda s: sph_hankel1(0, k * s) * s * s if s > 0.0 else 0.0,
                        0.0,
                        next_r,
                    )
                    next_r = 0.0
                outer[i] = acc_out if l == 0 else 0.0
                continue
            if r < next_r:
                acc_out += _complex_quad(
                    lambda s: sph_hankel1(l, k * s) * s * s, r, next_r
                )
                next_r = r
            outer[i] = acc_out
        for i, r in enumerate(rs):
            if r == 0.0:
                # j_l(0) = 0 for l >= 1 kills the (divergent) outer factor
                out[l, order[i]] = 1j * k * outer[i] if l == 0 else 0.0
            else:
                out[l, order[i]] = 1j * k * (
                    sph_hankel1(l, k * r) * inner[i] + sph_bessel_j(l, k * r) * outer[i]
                )
    return out


def volume_potential(h: HExpansion, k: float, grid: BallGrid) -> np.ndarray:
    """v at every grid node, exploiting the product structure.

    The radial factors are computed once per radial shell and the angular
    synthesis reuses one harmonic table for all shells.
    """
    if k <= 0.0:
        raise ValueError(f"wavenumber must be positive, got k={k}")
    if grid.radius > h.support_radius * (1.0 + 1e-12):
        raise ValueError(
            f"grid radius {grid.radius} exceeds the source support {h.support_radius}"
        )
    L = h.coeffs.band_limit
    factors = _radial_factor_table(L, k, h.support_radius, grid.r_axis)
    n_dir = grid.n_theta * grid.n_phi
    table = sph_harm_table(L, grid.thetas[:n_dir], grid.phis[:n_dir])
    repeat = np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)
    out = np.empty(grid.n_nodes, dtype=complex)
    for i in range(grid.n_r):
        scaled = h.coeffs.entries * factors[repeat, i]
        out[i * n_dir : (i + 1) * n_dir] = table @ scaled
    return out


def volume_potential_at(h: HExpansion, k: float, points: np.ndarray) -> np.ndarray:
    """v at arbitrary Cartesian points (inside or outside the support)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    r = np.linalg.norm(pts, axis=1)
    L = h.coeffs.band_limit
    factors = _radial_factor_table(L, k, h.support_radius, r)
    repeat = np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)
    out = np.empty(pts.shape[0], dtype=complex)
    for i in range(pts.shape[0]):
        if r[i] == 0.0:
            out[i] = h.coeffs.get(0, 0) * factors[0, i] / math.sqrt(4.0 * math.pi)
            continue
        theta = math.acos(min(1.0, max(-1.0, pts[i, 2] / r[i])))
        phi = math.atan2(pts[i, 1], pts[i, 0])
        table = sph_harm_table(L, np.array([theta]), np.array([phi]))[0]
        out[i] = table @ (h.coeffs.entries * factors[repeat, i])
    return out


def incident_wave(k: float, alpha: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Plane wave u0(x) = e^{i k alpha . x} at Cartesian points."""
    alpha = np.asarray(alpha, dtype=float)
    if abs(np.linalg.norm(alpha) - 1.0) > 1e-12:
        raise ValueError("incident direction must be a unit vector")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.exp(1j * k * (pts @ alpha))


@dataclass(frozen=True)
class DenominatorReport:
    """Minimum modulus of u0 - v over the grid and where it occurs."""

    min_modulus: float
    argmin_index: int
    argmin_node: tuple[float, float, float]  # (r, theta, phi)


def check_denominator(
    v_values: np.ndarray, k: float, alpha: np.ndarray, grid: BallGrid
) -> DenominatorReport:
    """Scan |u0 - v| over the grid nodes."""
    denom = incident_wave(k, alpha, grid.cartesian()) - v_values
    mods = np.abs(denom)
    idx = int(np.argmin(mods))
    node = (float(grid.radii[idx]), float(grid.thetas[idx]), float(grid.phis[idx]))
    return DenominatorReport(float(mods[idx]), idx, node)


@dataclass
class PotentialField:
    """Reconstructed potential samples on a ball grid."""

    grid: BallGrid
    q_values: np.ndarray
    denom_values: np.ndarray
    source: HExpansion

    @property
    def max_abs_q(self) -> float:
        return float(np.max(np.abs(self.q_values)))

    @property
    def min_denominator(self) -> float:
        return float(np.min(np.abs(self.denom_values)))


def reconstruct_q(
    h: HExpansion,
    v_values: np.ndarray,
    k: float,
    alpha: np.ndarray,
    grid: BallGrid,
    denominator_floor: float = 1e-3,
) -> PotentialField:
    """Divide h by u0 - v nodewise, guarding against degenerate denominators.

    Raises :class:`DegenerateDenominatorError` listing every node at or
    below the floor; on success q * (u0 - v) = h holds exactly at the nodes.
    """
    if denominator_floor < 0.0:
        raise ValueError(f"denominator floor must be nonnegative, got {denominator_floor}")
    denom = incident_wave(k, alpha, grid.cartesian()) - v_values
    mods = np.abs(denom)
    bad = np.flatnonzero(mods <= denominator_floor)
    if bad.size:
        raise DegenerateDenominatorError(float(mods.min()), denominator_floor, bad)
    h_values = evaluate_h(h, grid.cartesian())
    return PotentialField(grid, h_values / denom, denom, h)


@dataclass(frozen=True)
class PerturbationReport:
    """Outcome of the denominator-restoring perturbation search."""

    applied: bool
    attempts: int
    seed: int
    min_modulus: float
    shift_norm: float  # L2(D) distance between the original and final h
    budget: float


def perturb_h(
    h: HExpansion,
    delta: float,
    seed: int,
    *,
    k: float,
    alpha: np.ndarray,
    grid: BallGrid,
    denominator_floor: float = 1e-3,
    max_attempts: int = 64,
) -> tuple[HExpansion, PerturbationReport]:
    """Search for h' with ||h - h'||_{L2(D)} < delta whose denominator clears
    the floor.

    Heuristic (no guarantee from theory): each attempt rescales the whole
    expansion by 1 + eta with |eta| <= delta / (2 ||h||) and adds a random
    band-limited shift of L2 norm at most delta / 2, so the total budget is
    respected by construction.  Deterministic for a fixed seed; attempts are
    independent draws from one generator.  If the original expansion already
    clears the floor it is returned unchanged.
    """
    if delta <= 0.0:
        raise ValueError(f"perturbation budget must be positive, got {delta}")
    if max_attempts < 1:
        raise ValueError(f"attempt budget must be positive, got {max_attempts}")
    report0 = check_denominator(volume_potential(h, k, grid), k, alpha, grid)
    if report0.min_modulus > denominator_floor:
        return h, PerturbationReport(False, 0, seed, report0.min_modulus, 0.0, delta)
    rng = np.random.default_rng(seed)
    ncoef = h.coeffs.entries.size
    radial = math.sqrt(h.support_radius**3 / 3.0)  # L2(D) norm per unit coeff l2
    h_norm = h.l2_norm()
    best = report0.min_modulus
    for attempt in range(1, max_attempts + 1):
        eta = 0.0
        if h_norm > 0.0:
            eta = rng.uniform(-1.0, 1.0) * 0.9 * delta / (2.0 * h_norm)
        shift = rng.standard_normal(ncoef) + 1j * rng.standard_normal(ncoef)
        shift *= rng.uniform(0.25, 0.9) * delta / (2.0 * radial * np.linalg.norm(shift))
        entries = (1.0 + eta) * h.coeffs.entries + shift
        candidate = HExpansion(
            ShCoefficients(h.coeffs.band_limit, entries), h.support_radius
        )
        shift_norm = radial * float(
            np.linalg.norm(entries - h.coeffs.entries)
        )
        if shift_norm >= delta:
            continue
        report = check_denominator(volume_potential(candidate, k, grid), k, alpha, grid)
        best = max(best, report.min_modulus)
        if report.min_modulus > denominator_floor:
            return candidate, PerturbationReport(
                True, attempt, seed, report.min_modulus, shift_norm, delta
            )
    raise PerturbationBudgetError(max_attempts, best, denominator_floor)
