"""Synthesis of the auxiliary source expansion from a far-field target.

With a constant radial profile on the ball of radius ``b``, each harmonic
coefficient of the far field is proportional to the matching source
coefficient:

    f_lm = -(-i)^l sqrt(pi/(2k)) b^{5/2} g_{1,l+1/2}(k b) h_lm,

where g is the radial Bessel moment from :mod:`wavefocus.specfun` (the
phase was fixed by checking the relation against direct quadrature of the
far-field integral; see the round-trip tests).  Inverting the relation
degree by degree is severely ill-posed: the moments decay factorially in
l, so high degrees are amplified enormously.  ``clip_coeffs`` implements
the modulus clipping that keeps the reconstruction bounded at the price of
a controlled pattern error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import IllPosedFloorError
from .specfun import radial_bessel_moment, sph_harm_table
from .sphergrid import ShCoefficients

__all__ = [
    "HExpansion",
    "moment_factors",
    "solve_h_coeffs",
    "clip_coeffs",
    "evaluate_h",
    "predicted_amplitude",
]

# smallest radial-moment modulus we invert; below this the division is not
# representable in double precision
_MOMENT_FLOOR = 1e-300


@dataclass(frozen=True)
class HExpansion:
    """Auxiliary source h(x) = sum_lm h_lm Y_lm(x/|x|) on |x| <= support_radius.

    Radial profiles are constant.  ``clipped`` records whether the modulus
    clipping step ran; ``clip_bound`` its bound; ``clip_mask`` flags the
    entries the clipping actually shrank.
    """

    coeffs: ShCoefficients
    support_radius: float = 1.0
    clipped: bool = False
    clip_bound: float | None = None
    clip_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.support_radius <= 0.0:
            raise ValueError(f"support radius must be positive, got {self.support_radius}")
        if self.clipped and self.clip_bound is not None:
            if np.any(np.abs(self.coeffs.entries) > self.clip_bound * (1.0 + 1e-12)):
                raise ValueError("clipped expansion carries moduli above its bound")

    @property
    def band_limit(self) -> int:
        return self.coeffs.band_limit

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs.entries)))

    def l2_norm(self) -> float:
        """L2(ball) norm; for constant profiles this is sqrt(b^3/3) * |coeffs|."""
        return math.sqrt(self.support_radius**3 / 3.0) * self.coeffs.norm()


def _radial_moments(band_limit: int, k: float, support_radius: float) -> np.ndarray:
    if k <= 0.0:
        raise ValueError(f"wavenumber must be positive, got k={k}")
    if support_radius <= 0.0:
        raise ValueError(f"support radius must be positive, got {support_radius}")
    return np.array(
        [radial_bessel_moment(1.0, l + 0.5, k * support_radius) for l in range(band_limit + 1)]
    )


def moment_factors(band_limit: int, k: float, support_radius: float = 1.0) -> np.ndarray:
    """Per-degree factors c_l with f_lm = c_l h_lm, l = 0..band_limit.

    c_l = -(-i)^l sqrt(pi/(2k)) b^{5/2} g_{1,l+1/2}(k b).
    """
    gs = _radial_moments(band_limit, k, support_radius)
    degrees = np.arange(band_limit + 1)
    return (
        -((-1j) ** degrees)
        * math.sqrt(math.pi / (2.0 * k))
        * support_radius**2.5
        * gs
    )


def solve_h_coeffs(
    target: ShCoefficients, k: float, support_radius: float = 1.0
) -> HExpansion:
    """Invert the moment relation degree by degree: h_lm = f_lm / c_l.

    Raises :class:`IllPosedFloorError` naming the first degree whose radial
    moment modulus falls below 1e-300 (inversion not representable).
    """
    gs = _radial_moments(target.band_limit, k, support_radius)
    for l, g in enumerate(gs):
        if abs(g) < _MOMENT_FLOOR:
            raise IllPosedFloorError(l, abs(g))
    degrees = np.arange(target.band_limit + 1)
    factors = (
        -((-1j) ** degrees)
        * math.sqrt(math.pi / (2.0 * k))
        * support_radius**2.5
        * gs
    )
    entries = target.entries / _degree_repeat(factors)
    return HExpansion(ShCoefficients(target.band_limit, entries), support_radius)


def _degree_repeat(values: np.ndarray) -> np.ndarray:
    """Expand a per-degree array to flat (l, m) ordering."""
    band = values.size - 1
    return np.repeat(values, 2 * np.arange(band + 1) + 1)


def clip_coeffs(h: HExpansion, bound: float) -> HExpansion:
    """Clip coefficient moduli at ``bound``, preserving phases.

    Entries with |h_lm| <= bound pass through bit-identically.  Idempotent;
    never increases any modulus.  The returned expansion records the bound
    and which entries were shrunk.
    """
    if bound <= 0.0:
        raise ValueError(f"clip bound must be positive, got {bound}")
    entries = h.coeffs.entries.copy()
    mods = np.abs(entries)
    mask = mods > bound
    if np.any(mask):
        entries[mask] = entries[mask] * (bound / mods[mask])
        # rounding can leave a rescaled modulus an ulp above the bound,
        # which would break exact idempotence; nudge stragglers down
        for _ in range(8):
            over = np.abs(entries) > bound
            if not np.any(over):
                break
            entries[over] *= 1.0 - 4.0 * np.finfo(float).eps
    return replace(
        h,
        coeffs=ShCoefficients(h.coeffs.band_limit, entries),
        clipped=True,
        clip_bound=float(bound),
        clip_mask=mask,
    )


def evaluate_h(h: HExpansion, points: np.ndarray) -> np.ndarray:
    """Evaluate the source at Cartesian points; zero outside the support ball.

    ``points`` has shape (n, 3) (or (3,) for a single point, returning a
    scalar).  At the origin only the l = 0 term contributes.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    r = np.linalg.norm(pts, axis=1)
    out = np.zeros(pts.shape[0], dtype=complex)
    inside = r <= h.support_radius * (1.0 + 1e-12)
    at_origin = inside & (r == 0.0)
    body = inside & (r > 0.0)
    if np.any(at_origin):
        out[at_origin] = h.coeffs.get(0, 0) / math.sqrt(4.0 * math.pi)
    if np.any(body):
        thetas = np.arccos(np.clip(pts[body, 2] / r[body], -1.0, 1.0))
        phis = np.arctan2(pts[body, 1], pts[body, 0])
        table = sph_harm_table(h.coeffs.band_limit, thetas, phis)
        out[body] = table @ h.coeffs.entries
    return complex(out[0]) if single else out


def predicted_amplitude(h: HExpansion, k: float) -> ShCoefficients:
    """Far-field coefficients the expansion produces through the moment relation.

    Composes with :func:`solve_h_coeffs` to the identity on any band-limited
    target when no clipping intervenes.
    """
    factors = moment_factors(h.coeffs.band_limit, k, h.support_radius)
    return ShCoefficients(h.coeffs.band_limit, h.coeffs.entries * _degree_repeat(factors))
