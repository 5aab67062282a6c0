"""Sphere grid, transform pair, and target sampling."""

import math

import numpy as np
import pytest

from wavefocus.errors import ConfigError
from wavefocus.sphergrid import (
    ShCoefficients,
    SphereGrid,
    analyze,
    cone_target,
    synthesize,
    tail_energy,
)


def test_weights_sum_to_full_solid_angle():
    grid = SphereGrid.gauss_uniform(10, 21)
    assert grid.weights.sum() == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert grid.n_nodes == 210


def test_orthonormality_through_analysis():
    """Projecting each basis function returns a unit vector: the Gram matrix
    of the basis under the discrete inner product is the identity."""
    band = 12
    grid = SphereGrid.gauss_uniform(2 * band + 2, 4 * band + 4)
    n = (band + 1) ** 2
    worst = 0.0
    for flat in range(n):
        coeffs = ShCoefficients(band, np.eye(n, dtype=complex)[flat])
        back = analyze(synthesize(coeffs, grid), band)
        worst = max(worst, float(np.max(np.abs(back.entries - coeffs.entries))))
    assert worst <= 1e-10


def test_analyze_synthesize_round_trip_random():
    band = 8
    grid = SphereGrid.gauss_uniform(2 * band + 2, 4 * band + 4)
    rng = np.random.default_rng(0)
    entries = rng.standard_normal((band + 1) ** 2) + 1j * rng.standard_normal((band + 1) ** 2)
    coeffs = ShCoefficients(band, entries)
    back = analyze(synthesize(coeffs, grid), band)
    assert np.max(np.abs(back.entries - entries)) <= 1e-12 * np.max(np.abs(entries))


def test_analysis_exact_on_oversampled_grid():
    # exactness does not depend on hitting the minimal grid
    band = 4
    grid = SphereGrid.gauss_uniform(31, 45)
    rng = np.random.default_rng(1)
    entries = rng.standard_normal((band + 1) ** 2) + 0j
    back = analyze(synthesize(ShCoefficients(band, entries), grid), band)
    assert np.max(np.abs(back.entries - entries)) <= 1e-12


def test_under_resolved_grid_is_rejected():
    grid = SphereGrid.gauss_uniform(6, 30)
    valued = grid.with_values(np.ones(grid.n_nodes, dtype=complex))
    with pytest.raises(ConfigError):
        analyze(valued, 6)  # n_theta must exceed the band limit
    with pytest.raises(ConfigError):
        analyze(
            SphereGrid.gauss_uniform(8, 12).with_values(np.ones(96, dtype=complex)), 6
        )  # n_phi must exceed twice the band limit


def test_analyze_requires_values():
    with pytest.raises(ValueError):
        analyze(SphereGrid.gauss_uniform(8, 16), 3)


def test_real_field_coefficient_conjugation():
    # real samples force c_{l,-m} = (-1)^m conj(c_{l,m})
    band = 5
    grid = SphereGrid.gauss_uniform(2 * band + 2, 4 * band + 4)
    values = np.cos(3.0 * grid.thetas) * np.sin(grid.phis) + 0.25
    coeffs = analyze(grid.with_values(values.astype(complex)), band)
    for l in range(band + 1):
        for m in range(1, l + 1):
            lhs = coeffs.get(l, -m)
            rhs = (-1.0) ** m * np.conj(coeffs.get(l, m))
            assert abs(lhs - rhs) <= 1e-12


def test_coefficient_container_accessors():
    coeffs = ShCoefficients.zeros(3)
    assert coeffs.entries.shape == (16,)
    updated = coeffs.with_entry(2, -1, 1.5 + 0.5j)
    assert updated.get(2, -1) == 1.5 + 0.5j
    assert coeffs.get(2, -1) == 0.0  # original untouched
    assert updated.norm() == pytest.approx(abs(1.5 + 0.5j))
    with pytest.raises(ValueError):
        coeffs.get(2, 3)
    degrees = updated.degrees()
    assert degrees.tolist() == [0, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3]


def test_truncation_and_tail_energy_partition():
    rng = np.random.default_rng(2)
    entries = rng.standard_normal(49) + 1j * rng.standard_normal(49)
    coeffs = ShCoefficients(6, entries)
    cut = coeffs.truncated(3)
    assert cut.band_limit == 3
    assert np.array_equal(cut.entries, entries[:16])
    tail = tail_energy(coeffs, 3)
    assert tail == pytest.approx(float(np.linalg.norm(entries[16:])), rel=1e-14)
    # energies split exactly
    assert coeffs.norm() ** 2 == pytest.approx(cut.norm() ** 2 + tail**2, rel=1e-13)
    assert tail_energy(coeffs, 6) == 0.0
    assert tail_energy(coeffs, 9) == 0.0
    with pytest.raises(ValueError):
        tail_energy(coeffs, -1)


def test_cone_target_bounds_inclusive():
    grid = SphereGrid.gauss_uniform(20, 40)
    lo = float(grid.thetas.min())
    hi = float(np.sort(np.unique(grid.thetas))[4])
    target = cone_target(grid, lo, hi, amplitude=2.0)
    inside = (grid.thetas >= lo) & (grid.thetas <= hi)
    assert np.all(target.values[inside] == 2.0)
    assert np.all(target.values[~inside] == 0.0)


def test_cone_target_solid_angle_converges():
    # quadrature area of the indicator approaches 2 pi (1 - cos theta_hi)
    hi = math.pi / 4.0
    exact = 2.0 * math.pi * (1.0 - math.cos(hi))
    areas = []
    for n_theta in (20, 80, 320):
        grid = SphereGrid.gauss_uniform(n_theta, 8)
        target = cone_target(grid, 0.0, hi)
        areas.append(float(np.sum(grid.weights * np.abs(target.values) ** 2)))
    errs = [abs(a - exact) for a in areas]
    assert errs[2] < errs[0]
    assert errs[2] <= 5e-3 * exact


def test_cone_target_rejects_bad_bounds():
    grid = SphereGrid.gauss_uniform(8, 16)
    with pytest.raises(ValueError):
        cone_target(grid, 0.5, 0.5)
    with pytest.raises(ValueError):
        cone_target(grid, -0.1, 1.0)
    with pytest.raises(ValueError):
        cone_target(grid, 0.0, 3.3)


def test_grid_norm_of_constant():
    grid = SphereGrid.gauss_uniform(12, 24)
    ones = grid.with_values(np.ones(grid.n_nodes, dtype=complex))
    assert ones.norm() == pytest.approx(math.sqrt(4.0 * math.pi), rel=1e-14)


def test_unit_vectors_are_unit():
    grid = SphereGrid.gauss_uniform(9, 17)
    u = grid.unit_vectors()
    assert np.max(np.abs(np.linalg.norm(u, axis=1) - 1.0)) <= 1e-14
    # z component is cos(theta)
    assert np.max(np.abs(u[:, 2] - np.cos(grid.thetas))) <= 1e-14
