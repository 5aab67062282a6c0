"""Special-function layer: harmonics, spherical Bessel functions, radial moments.

Frozen oracle: the l=0 radial moment at k=1 has the closed form
sqrt(2/pi) (sin 1 - cos 1); everything else is checked against scipy or
against recurrence residuals.
"""

import math

import numpy as np
import pytest
from scipy.special import spherical_jn, spherical_yn

from wavefocus.errors import NumericsError
from wavefocus.specfun import (
    QuadratureRule1D,
    assoc_legendre,
    radial_bessel_moment,
    sph_bessel_j,
    sph_bessel_y,
    sph_harm,
    sph_harm_table,
    sph_hankel1,
)

G_HALF_AT_1 = 0.24029783912342698  # sqrt(2/pi) (sin 1 - cos 1)


def test_quadrature_rule_integrates_polynomials_exactly():
    rule = QuadratureRule1D.gauss_legendre(8, 0.0, 2.0)
    # degree 15 is the exactness edge for 8 nodes
    val = rule.integrate(lambda x: x**15)
    assert val == pytest.approx(2.0**16 / 16.0, rel=1e-13)
    assert rule.order == 8


def test_quadrature_rule_rejects_degenerate_interval():
    with pytest.raises(ValueError):
        QuadratureRule1D.gauss_legendre(4, 1.0, 1.0)


@pytest.mark.parametrize("l,m", [(0, 0), (1, 0), (1, 1), (3, 2), (6, 6), (10, 4)])
def test_assoc_legendre_matches_scipy(l, m):
    from scipy.special import lpmv

    for x in np.linspace(-0.99, 0.99, 7):
        assert assoc_legendre(l, m, x) == pytest.approx(float(lpmv(m, l, x)), rel=1e-11, abs=1e-12)


def test_sph_harm_low_degree_closed_forms():
    # Y00 = 1/sqrt(4pi); Y10 = sqrt(3/4pi) cos(theta); Y11 = -sqrt(3/8pi) sin(theta) e^{i phi}
    th, ph = 0.7, 1.3
    assert sph_harm(0, 0, th, ph) == pytest.approx(1.0 / math.sqrt(4 * math.pi), abs=1e-14)
    assert sph_harm(1, 0, th, ph) == pytest.approx(
        math.sqrt(3 / (4 * math.pi)) * math.cos(th), abs=1e-14
    )
    expected = -math.sqrt(3 / (8 * math.pi)) * math.sin(th) * np.exp(1j * ph)
    assert sph_harm(1, 1, th, ph) == pytest.approx(expected, abs=1e-14)


def test_sph_harm_conjugation_symmetry():
    rng = np.random.default_rng(11)
    for _ in range(40):
        l = int(rng.integers(0, 9))
        m = int(rng.integers(-l, l + 1)) if l else 0
        th = float(rng.uniform(0.0, math.pi))
        ph = float(rng.uniform(0.0, 2 * math.pi))
        lhs = np.conj(sph_harm(l, m, th, ph))
        rhs = (-1.0) ** m * sph_harm(l, -m, th, ph)
        assert abs(lhs - rhs) <= 1e-12


def test_sph_harm_parity_symmetry():
    rng = np.random.default_rng(12)
    for _ in range(40):
        l = int(rng.integers(0, 9))
        m = int(rng.integers(-l, l + 1)) if l else 0
        th = float(rng.uniform(0.0, math.pi))
        ph = float(rng.uniform(0.0, 2 * math.pi))
        # antipode: theta -> pi - theta, phi -> phi + pi
        direct = sph_harm(l, m, math.pi - th, ph + math.pi)
        assert abs(direct - (-1.0) ** l * sph_harm(l, m, th, ph)) <= 1e-12


def test_sph_harm_table_column_layout():
    th = np.array([0.4, 2.2])
    ph = np.array([0.1, 5.0])
    table = sph_harm_table(3, th, ph)
    assert table.shape == (2, 16)
    for l in range(4):
        for m in range(-l, l + 1):
            col = l * l + l + m
            for i in range(2):
                assert table[i, col] == pytest.approx(
                    sph_harm(l, m, float(th[i]), float(ph[i])), abs=1e-14
                )


def test_sph_harm_rejects_bad_orders():
    with pytest.raises(ValueError):
        sph_harm(-1, 0, 0.0, 0.0)
    with pytest.raises(ValueError):
        sph_harm(2, 3, 0.0, 0.0)


def test_sph_bessel_j_matches_scipy_over_wide_range():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(300):
        l = int(rng.integers(0, 41))
        x = float(rng.uniform(1e-3, 80.0))
        ref = float(spherical_jn(l, x))
        got = sph_bessel_j(l, x)
        scale = max(1.0, abs(ref))
        worst = max(worst, abs(got - ref) / scale)
    assert worst <= 1e-12


def test_sph_bessel_j_small_argument_series():
    # j_l(x) ~ x^l / (2l+1)!! deep in the decaying regime
    for l, x in [(6, 1e-4), (10, 1e-3), (3, 1e-5)]:
        dfact = 1.0
        for n in range(1, 2 * l + 2, 2):
            dfact *= n
        assert sph_bessel_j(l, x) == pytest.approx(x**l / dfact, rel=1e-8)


def test_sph_bessel_j_at_zero():
    assert sph_bessel_j(0, 0.0) == 1.0
    for l in range(1, 8):
        assert sph_bessel_j(l, 0.0) == 0.0


def test_sph_bessel_recurrence_residual():
    # j_{l-1}(x) + j_{l+1}(x) = (2l+1)/x j_l(x)
    rng = np.random.default_rng(6)
    for _ in range(100):
        l = int(rng.integers(1, 30))
        x = float(rng.uniform(0.05, 40.0))
        lhs = sph_bessel_j(l - 1, x) + sph_bessel_j(l + 1, x)
        rhs = (2 * l + 1) / x * sph_bessel_j(l, x)
        scale = max(abs(lhs), abs(rhs), 1e-30)
        assert abs(lhs - rhs) / scale <= 1e-10


def test_sph_bessel_y_matches_scipy():
    rng = np.random.default_rng(7)
    for _ in range(200):
        l = int(rng.integers(0, 31))
        x = float(rng.uniform(0.2, 60.0))
        ref = float(spherical_yn(l, x))
        got = sph_bessel_y(l, x)
        assert abs(got - ref) <= 1e-11 * max(1.0, abs(ref))


def test_sph_hankel_combines_j_and_y():
    for l, x in [(0, 1.0), (2, 3.7), (5, 12.0)]:
        h = sph_hankel1(l, x)
        assert h.real == pytest.approx(sph_bessel_j(l, x), abs=1e-14)
        assert h.imag == pytest.approx(sph_bessel_y(l, x), abs=1e-14)


def test_sph_hankel_outgoing_asymptotics():
    # h1_0(x) = -i e^{ix} / x
    x = 25.0
    assert sph_hankel1(0, x) == pytest.approx(-1j * np.exp(1j * x) / x, rel=1e-12)


def test_radial_moment_l0_closed_form():
    assert radial_bessel_moment(1.0, 0.5, 1.0) == pytest.approx(G_HALF_AT_1, abs=1e-12)


def test_radial_moment_decays_with_degree():
    vals = [abs(radial_bessel_moment(1.0, l + 0.5, 1.0)) for l in range(9)]
    for lo, hi in zip(vals[1:], vals[:-1]):
        assert lo < hi
    # the decade-per-degree collapse that makes the inversion ill posed
    assert vals[7] < 1e-6 * vals[0]


def test_radial_moment_validates_arguments():
    with pytest.raises(ValueError):
        radial_bessel_moment(1.0, 0.5, -2.0)
    with pytest.raises(ValueError):
        radial_bessel_moment(1.0, 1.0, 1.0)  # not half-integral
    with pytest.raises(ValueError):
        radial_bessel_moment(-2.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        radial_bessel_moment(1.0, 0.5, 1.0, tol=0.0)


def test_radial_moment_larger_wavenumber_cross_check():
    # independent fixed-order quadrature at k=3, l=2
    rule = QuadratureRule1D.gauss_legendre(200, 0.0, 1.0)
    ref = rule.integrate(
        lambda x: x**1.5 * np.sqrt(2 * 3.0 * x / math.pi) * spherical_jn(2, 3.0 * x)
    )
    assert radial_bessel_moment(1.0, 2.5, 3.0) == pytest.approx(float(ref.real), rel=1e-10)
