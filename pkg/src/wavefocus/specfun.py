"""Special functions and quadrature rules used throughout the package.

Everything here is deterministic and hand-rolled from stable recurrences:

* associated Legendre functions P_l^m with the Condon-Shortley phase,
* orthonormal complex spherical harmonics Y_lm,
* spherical Bessel functions j_l, y_l and the outgoing Hankel function
  h_l = j_l + i y_l,
* the radial Bessel moments g_{mu,nu}(k) = int_0^1 x^{mu+1/2} J_nu(k x) dx
  that connect far-field coefficients to radial source profiles.

The only third-party numeric dependency is adaptive 1-D quadrature
(:func:`scipy.integrate.quad`) for the radial moments; fixed-order
Gauss-Legendre rules come from :func:`numpy.polynomial.legendre.leggauss`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .errors import NumericsError

__all__ = [
    "QuadratureRule1D",
    "assoc_legendre",
    "sph_harm",
    "sph_harm_table",
    "sph_bessel_j",
    "sph_bessel_y",
    "sph_hankel1",
    "radial_bessel_moment",
]


@dataclass(frozen=True)
class QuadratureRule1D:
    """Nodes and weights of a 1-D quadrature rule on ``[a, b]``.

    ``order`` is the node count.  Weights are strictly positive and sum to
    the interval length, so ``integrate`` of the constant 1 returns b - a.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if np.any(weights <= 0.0):
            raise ValueError("quadrature weights must be strictly positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def order(self) -> int:
        return self.nodes.size

    @classmethod
    def gauss_legendre(cls, n: int, a: float = -1.0, b: float = 1.0) -> "QuadratureRule1D":
        """Gauss-Legendre rule with ``n`` points mapped to ``[a, b]``."""
        if n < 1:
            raise ValueError("need at least one quadrature node")
        if not b > a:
            raise ValueError("interval must satisfy b > a")
        x, w = leggauss(n)
        half = 0.5 * (b - a)
        return cls(a + half * (x + 1.0), half * w)

    def integrate(self, f) -> complex:
        """Apply the rule to a callable evaluated on the node array."""
        values = np.asarray(f(self.nodes))
        return np.sum(self.weights * values)


def _double_factorial(n: int) -> float:
    out = 1.0
    k = n
    while k > 1:
        out *= k
        k -= 2
    return out


def assoc_legendre(l: int, m: int, x: float) -> float:
    """Associated Legendre function P_l^m(x) with Condon-Shortley phase.

    Computed by the seed P_m^m = (-1)^m (2m-1)!! (1-x^2)^{m/2} followed by
    the upward degree recurrence
    (l-m) P_l^m = (2l-1) x P_{l-1}^m - (l+m-1) P_{l-2}^m,
    which is stable in l.  Stable and accurate for l <= 64.

    Raises ValueError for l < 0, m outside [0, l], or |x| > 1.
    """
    if l < 0:
        raise ValueError(f"degree must be nonnegative, got l={l}")
    if m < 0 or m > l:
        raise ValueError(f"order must satisfy 0 <= m <= l, got m={m}, l={l}")
    if abs(x) > 1.0:
        raise ValueError(f"argument must lie in [-1, 1], got x={x}")
    somx2 = math.sqrt(max(0.0, (1.0 - x) * (1.0 + x)))
    pmm = (-1.0) ** m * _double_factorial(2 * m - 1) * somx2**m
    if l == m:
        return pmm
    pmmp1 = x * (2.0 * m + 1.0) * pmm
    if l == m + 1:
        return pmmp1
    for ll in range(m + 2, l + 1):
        pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m)
        pmm, pmmp1 = pmmp1, pll
    return pmmp1


def _norm_legendre_columns(band_limit: int, cos_theta: np.ndarray) -> np.ndarray:
    """Fully normalized P-bar_{l,m}(cos theta) for all 0 <= m <= l <= band_limit.

    Returns an array of shape ``(n, n_pairs)`` where column ``j`` holds the
    pair ``(l, m)`` in the order produced by iterating l outer, m inner with
    m >= 0; P-bar includes the sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) factor and
    the Condon-Shortley phase, so Y_lm = P-bar_{l,m} e^{i m phi} for m >= 0.
    Uses the normalized recurrences directly, avoiding factorial overflow.
    """
    x = np.asarray(cos_theta, dtype=float)
    s = np.sqrt(np.maximum(0.0, (1.0 - x) * (1.0 + x)))
    n = x.size
    L = band_limit
    cols = {}
    # seeds along the diagonal, then one step off it, then the l recurrence
    pmm = np.full(n, math.sqrt(1.0 / (4.0 * math.pi)))
    for m in range(L + 1):
        if m > 0:
            pmm = pmm * (-math.sqrt((2.0 * m + 1.0) / (2.0 * m))) * s
        cols[(m, m)] = pmm
        if m + 1 <= L:
            cols[(m + 1, m)] = math.sqrt(2.0 * m + 3.0) * x * pmm
        for l in range(m + 2, L + 1):
            c1 = math.sqrt((2.0 * l + 1.0) * (2.0 * l - 1.0) / ((l - m) * (l + m)))
            c2 = math.sqrt(
                (2.0 * l + 1.0)
                * (l - 1.0 - m)
                * (l - 1.0 + m)
                / ((2.0 * l - 3.0) * (l - m) * (l + m))
            )
            cols[(l, m)] = c1 * x * cols[(l - 1, m)] - c2 * cols[(l - 2, m)]
    out = np.empty((n, (L + 1) * (L + 2) // 2), dtype=float)
    j = 0
    for l in range(L + 1):
        for m in range(l + 1):
            out[:, j] = cols[(l, m)]
            j += 1
    return out


def sph_harm_table(band_limit: int, thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Matrix of Y_lm at the given directions, all (l, m) with l <= band_limit.

    Shape ``(n, (band_limit+1)^2)``; column ``l*l + l + m`` holds Y_lm.
    Negative orders follow from conj(Y_lm) = (-1)^m Y_{l,-m}.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    if thetas.shape != phis.shape:
        raise ValueError("thetas and phis must have matching shapes")
    L = band_limit
    pbar = _norm_legendre_columns(L, np.cos(thetas))
    out = np.empty((thetas.size, (L + 1) ** 2), dtype=complex)
    j = 0
    for l in range(L + 1):
        base = l * l + l
        for m in range(l + 1):
            ylm = pbar[:, j] * np.exp(1j * m * phis)
            out[:, base + m] = ylm
            if m > 0:
                out[:, base - m] = (-1.0) ** m * np.conj(ylm)
            j += 1
    return out


def sph_harm(l: int, m: int, theta: float, phi: float) -> complex:
    """Orthonormal complex spherical harmonic Y_lm(theta, phi).

    theta is the polar angle in [0, pi], phi the azimuth.  The basis carries
    the Condon-Shortley phase and satisfies
    conj(Y_lm) = (-1)^m Y_{l,-m} and Y_lm(-x) = (-1)^l Y_lm(x).
    """
    if l < 0:
        raise ValueError(f"degree must be nonnegative, got l={l}")
    if abs(m) > l:
        raise ValueError(f"order must satisfy |m| <= l, got m={m}, l={l}")
    table = sph_harm_table(l, np.array([theta]), np.array([phi]))
    return complex(table[0, l * l + l + m])


_MILLER_PAD = 30


def sph_bessel_j(l: int, r: float) -> float:
    """Spherical Bessel function of the first kind j_l(r), r >= 0.

    Upward recurrence from j_0, j_1 where it is stable (l <= r); Miller's
    downward recurrence normalized against j_0 (or j_1 near zeros of sin)
    otherwise.  Accurate to ~1e-12 relative for l <= 64, r <= 100.
    """
    if l < 0:
        raise ValueError(f"degree must be nonnegative, got l={l}")
    if r < 0.0:
        raise ValueError(f"argument must be nonnegative, got r={r}")
    if r == 0.0:
        return 1.0 if l == 0 else 0.0
    if l == 0:
        return math.sin(r) / r
    j0 = math.sin(r) / r
    j1 = math.sin(r) / r**2 - math.cos(r) / r
    if l == 1:
        return j1
    if l <= r:
        jm, jc = j0, j1
        for ll in range(2, l + 1):
            jm, jc = jc, (2.0 * ll - 1.0) / r * jc - jm
        return jc
    # downward sweep: start well above l, normalize at the bottom
    lstart = l + _MILLER_PAD + int(0.5 * l)
    jp = 0.0  # unnormalized j_{n+1}
    jc = 1e-30  # unnormalized j_n seed
    target = 0.0
    n = lstart
    while n > 0:
        jm = (2.0 * n + 1.0) / r * jc - jp
        jp, jc = jc, jm
        n -= 1
        if n == l:
            target = jc
        if abs(jc) > 1e250:
            jc *= 1e-250
            jp *= 1e-250
            target *= 1e-250
    # jc, jp now carry unnormalized j_0, j_1; pick the better-conditioned anchor
    if abs(jc) >= abs(jp):
        scale = j0 / jc
    else:
        scale = j1 / jp
    return target * scale


def sph_bessel_y(l: int, r: float) -> float:
    """Spherical Bessel function of the second kind y_l(r), r > 0.

    The upward recurrence is stable here because y_l is the dominant
    solution.  y_l overflows for small r at large l (y_l ~ -(2l-1)!!/r^{l+1});
    within double range for the l <= 64, r >= 1e-3 regime used here.
    """
    if l < 0:
        raise ValueError(f"degree must be nonnegative, got l={l}")
    if r <= 0.0:
        raise ValueError(f"argument must be positive, got r={r}")
    y0 = -math.cos(r) / r
    if l == 0:
        return y0
    y1 = -math.cos(r) / r**2 - math.sin(r) / r
    ym, yc = y0, y1
    for ll in range(2, l + 1):
        ym, yc = yc, (2.0 * ll - 1.0) / r * yc - ym
    return yc


def sph_hankel1(l: int, r: float) -> complex:
    """Outgoing spherical Hankel function h_l^(1)(r) = j_l(r) + i y_l(r)."""
    if r <= 0.0:
        raise ValueError(f"argument must be positive, got r={r}")
    return complex(sph_bessel_j(l, r), sph_bessel_y(l, r))


def radial_bessel_moment(mu: float, nu: float, k: float, tol: float = 1e-12) -> float:
    """Moment g_{mu,nu}(k) = int_0^1 x^{mu+1/2} J_nu(k x) dx.

    nu must be half-integral (nu = l + 1/2 with integer l >= 0); the
    cylindrical Bessel function is evaluated through
    J_{l+1/2}(z) = sqrt(2 z / pi) j_l(z).  Integration is adaptive with a
    subdivision budget; if the achieved error estimate misses ``tol`` a
    :class:`NumericsError` carrying the estimate is raised.
    """
    if k <= 0.0:
        raise ValueError(f"wavenumber must be positive, got k={k}")
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got tol={tol}")
    if mu + 0.5 <= -1.0:
        raise ValueError(f"exponent must satisfy mu + 1/2 > -1, got mu={mu}")
    l = nu - 0.5
    if l < 0 or l != int(l):
        raise ValueError(f"order must be half-integral with nu >= 1/2, got nu={nu}")
    l = int(l)

    def integrand(x: float) -> float:
        if x == 0.0:
            return 0.0
        return x ** (mu + 0.5) * math.sqrt(2.0 * k * x / math.pi) * sph_bessel_j(l, k * x)

    value, err = quad(integrand, 0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    if err > max(tol, 1e-13 * abs(value)) and err > tol * 10.0:
        raise NumericsError(
            f"radial moment quadrature achieved error estimate {err:.3e} "
            f"(target {tol:.3e}) for mu={mu}, nu={nu}, k={k}"
        )
    return value
