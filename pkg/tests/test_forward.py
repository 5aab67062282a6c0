"""Forward scattering solve, amplitude quadrature, misfit and focusing metrics."""

import math

import numpy as np
import pytest

from wavefocus.errors import SolverConvergenceError
from wavefocus.forward import (
    KernelSpec,
    amplitude_from_source,
    focusing_metrics,
    ls_solve,
    misfit,
    scattering_amplitude,
)
from wavefocus.nystrom import VolumeKernelOperator
from wavefocus.potential import BallGrid, PotentialField, reconstruct_q, volume_potential
from wavefocus.sphergrid import ShCoefficients, SphereGrid, analyze, cone_target
from wavefocus.synthesis import HExpansion, predicted_amplitude, solve_h_coeffs

Z_AXIS = np.array([0.0, 0.0, 1.0])


def potential_from_values(grid, q_values):
    dummy = HExpansion(ShCoefficients(0, np.zeros(1, dtype=complex)))
    denom = np.ones(grid.n_nodes, dtype=complex)
    return PotentialField(grid, q_values, denom, dummy)


def smooth_profile(grid, seed=0):
    pts = grid.cartesian()
    return np.exp(-2.0 * np.sum(pts**2, axis=1)) * (1.0 + 0.2 * pts[:, 1])


# ------------------------------------------------------------- kernel spec


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(0.0)
    with pytest.raises(ValueError):
        KernelSpec(1.0, (0.0, 0.0, 2.0))
    spec = KernelSpec(2.0, (0.0, 1.0, 0.0))
    pts = np.array([[0.0, 0.5, 0.0]])
    assert spec.incident(pts)[0] == pytest.approx(np.exp(1j), rel=1e-14)


# ------------------------------------------------------------------ solves


def test_zero_potential_returns_the_incident_wave():
    grid = BallGrid.product(1.0, 6, 6, 8)
    kernel = KernelSpec(1.0)
    field = potential_from_values(grid, np.zeros(grid.n_nodes, dtype=complex))
    total = ls_solve(field, kernel)
    assert np.array_equal(total.u_values, kernel.incident(grid.cartesian()))
    assert total.residual <= 1e-14

    sphere = SphereGrid.gauss_uniform(8, 16)
    amp = scattering_amplitude(field, total, kernel, sphere)
    assert np.max(np.abs(amp.values)) == 0.0


def test_manufactured_solution_recovery():
    # f* := u* + W[q u*]; solving with rhs f* must return u*
    grid = BallGrid.product(1.0, 10, 10, 20)
    k = 1.0
    pts = grid.cartesian()
    r2 = np.sum(pts**2, axis=1)
    q = 0.8 * np.exp(-3.0 * r2) * (1.0 + 0.3 * pts[:, 0])
    u_star = np.exp(1j * k * pts[:, 2]) * np.cos(0.7 * r2)
    op = VolumeKernelOperator(grid, k, mode="full")
    f_star = u_star + op.apply(q * u_star)

    from scipy.sparse.linalg import LinearOperator, gmres

    lin = LinearOperator(
        (grid.n_nodes, grid.n_nodes), matvec=lambda u: u + op.apply(q * u), dtype=complex
    )
    solution, info = gmres(lin, f_star, rtol=1e-12, atol=0.0)
    assert info == 0
    rel = np.linalg.norm(solution - u_star) / np.linalg.norm(u_star)
    assert rel <= 1e-10


def test_born_regime_error_is_second_order():
    grid = BallGrid.product(1.0, 12, 12, 24)
    kernel = KernelSpec(1.0)
    op = VolumeKernelOperator(grid, 1.0, mode="full")
    u0 = kernel.incident(grid.cartesian())
    profile = smooth_profile(grid)
    errs = []
    for eps in (1e-3, 1e-2):
        field = potential_from_values(grid, eps * profile.astype(complex))
        total = ls_solve(field, kernel, tol=1e-12, max_iterations=400)
        born = u0 - op.apply(eps * profile * u0)
        errs.append(grid.l2_norm(total.u_values - born) / grid.l2_norm(u0))
    order = math.log10(errs[1] / errs[0])
    assert order >= 1.8


def test_residual_history_is_monotone_and_final_residual_small():
    grid = BallGrid.product(1.0, 8, 8, 12)
    kernel = KernelSpec(1.0)
    field = potential_from_values(grid, (2.0 * smooth_profile(grid)).astype(complex))
    total = ls_solve(field, kernel, tol=1e-10)
    assert total.residual <= 1e-10
    hist = np.asarray(total.residual_history)
    assert hist.size >= 2
    assert np.all(np.diff(hist) <= 1e-12)
    assert total.method == "gmres-full"
    assert total.retried is False


def test_axial_fast_path_matches_full_operator_solve():
    grid = BallGrid.product(1.0, 8, 8, 12)
    kernel = KernelSpec(1.0)
    pts = grid.cartesian()
    q = (5.0 * np.exp(-2.0 * (pts[:, 2] ** 2 + pts[:, 0] ** 2 + pts[:, 1] ** 2))).astype(
        complex
    )
    field = potential_from_values(grid, q)
    fast = ls_solve(field, kernel, tol=1e-11, axisymmetric=True)
    slow = ls_solve(field, kernel, tol=1e-11, axisymmetric=False)
    assert fast.method == "gmres-axial"
    assert slow.method == "gmres-full"
    rel = grid.l2_norm(fast.u_values - slow.u_values) / grid.l2_norm(slow.u_values)
    assert rel <= 1e-9


def test_axial_path_is_selected_automatically():
    grid = BallGrid.product(1.0, 6, 6, 8)
    pts = grid.cartesian()
    q = np.exp(-np.sum(pts**2, axis=1)).astype(complex)
    total = ls_solve(potential_from_values(grid, q), KernelSpec(1.0))
    assert total.method == "gmres-axial"
    # phi-dependent data must refuse the forced axial path
    q_bad = q * (1.0 + 0.1 * np.cos(grid.phis))
    with pytest.raises(ValueError):
        ls_solve(potential_from_values(grid, q_bad), KernelSpec(1.0), axisymmetric=True)
    # off-axis incidence cannot use it either
    with pytest.raises(ValueError):
        ls_solve(
            potential_from_values(grid, q),
            KernelSpec(1.0, (1.0, 0.0, 0.0)),
            axisymmetric=True,
        )


def test_solver_error_carries_history():
    grid = BallGrid.product(1.0, 6, 6, 8)
    kernel = KernelSpec(1.0)
    rng = np.random.default_rng(60)
    q = 1e3 * (rng.standard_normal(grid.n_nodes) + 1j * rng.standard_normal(grid.n_nodes))
    with pytest.raises(SolverConvergenceError) as err:
        ls_solve(potential_from_values(grid, q), kernel, tol=1e-12, max_iterations=3)
    assert err.value.exit_code == 6
    assert err.value.residual > 1e-12
    assert len(err.value.residual_history) >= 3


def test_ls_solve_validates_tolerance():
    grid = BallGrid.product(1.0, 4, 4, 6)
    field = potential_from_values(grid, np.zeros(grid.n_nodes, dtype=complex))
    with pytest.raises(ValueError):
        ls_solve(field, KernelSpec(1.0), tol=0.0)


# --------------------------------------------------------------- amplitude


def test_design_amplitude_matches_prediction_through_the_solver():
    """Independent round trip: build q from a compliant source, forward-solve,
    and compare the far field against the coefficient-space prediction."""
    k = 1.0
    band = 4
    rng = np.random.default_rng(61)
    n = (band + 1) ** 2
    entries = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    entries *= 1.5 / np.linalg.norm(entries)  # well inside the smallness regime
    h = HExpansion(ShCoefficients(band, entries))
    grid = BallGrid.product(1.0, 16, 16, 32)
    v = volume_potential(h, k, grid)
    field = reconstruct_q(h, v, k, Z_AXIS, grid)
    total = ls_solve(field, KernelSpec(k), tol=1e-10)
    sphere = SphereGrid.gauss_uniform(2 * band + 2, 4 * band + 4)
    amp = scattering_amplitude(field, total, KernelSpec(k), sphere)
    got = analyze(amp, band)
    want = predicted_amplitude(h, k)
    rel = np.linalg.norm(got.entries - want.entries) / np.linalg.norm(want.entries)
    assert rel <= 1e-2  # solver + quadrature tolerance


def test_amplitude_norm_is_rotation_invariant():
    grid = BallGrid.product(1.0, 12, 12, 24)
    pts = grid.cartesian()
    src = smooth_profile(grid) * np.exp(1j * pts[:, 2])
    sphere = SphereGrid.gauss_uniform(16, 32)
    base = amplitude_from_source(src, grid, 1.0, sphere)

    ang = 0.7
    rot = np.array(
        [
            [math.cos(ang), 0.0, math.sin(ang)],
            [0.0, 1.0, 0.0],
            [-math.sin(ang), 0.0, math.cos(ang)],
        ]
    )
    u_rot = sphere.unit_vectors() @ rot.T
    import dataclasses

    rotated_grid = dataclasses.replace(
        sphere,
        thetas=np.arccos(np.clip(u_rot[:, 2], -1.0, 1.0)),
        phis=np.arctan2(u_rot[:, 1], u_rot[:, 0]),
        values=None,
    )
    rotated = amplitude_from_source(src, grid, 1.0, rotated_grid)
    assert abs(base.norm() - rotated.norm()) <= 1e-8 * base.norm()


def test_amplitude_grid_mismatch_is_rejected():
    grid_a = BallGrid.product(1.0, 4, 4, 6)
    grid_b = BallGrid.product(1.0, 5, 5, 6)
    field = potential_from_values(grid_a, np.zeros(grid_a.n_nodes, dtype=complex))
    total = ls_solve(field, KernelSpec(1.0))
    field_b = potential_from_values(grid_b, np.zeros(grid_b.n_nodes, dtype=complex))
    with pytest.raises(ValueError):
        scattering_amplitude(field_b, total, KernelSpec(1.0), SphereGrid.gauss_uniform(4, 8))


# ------------------------------------------------------------------ misfit


def test_misfit_zero_when_attained_equals_target():
    grid = SphereGrid.gauss_uniform(10, 20)
    f = cone_target(grid, 0.0, math.pi / 4.0)
    report = misfit(f, f)
    assert report.l2_misfit == 0.0
    assert report.relative_misfit == 0.0
    assert report.bound is None


def test_misfit_of_zero_amplitude_is_the_target_norm():
    # quadrature norm of the unit cone converges to sqrt(2 pi (1 - cos(pi/4)))
    # at the O(1/n_theta) rate an indicator edge allows
    exact = math.sqrt(2.0 * math.pi * (1.0 - math.cos(math.pi / 4.0)))
    errs = []
    for n_theta in (200, 800):
        grid = SphereGrid.gauss_uniform(n_theta, 8)
        f = cone_target(grid, 0.0, math.pi / 4.0)
        zero = grid.with_values(np.zeros(grid.n_nodes, dtype=complex))
        report = misfit(f, zero)
        assert report.relative_misfit == 1.0
        errs.append(abs(report.l2_misfit - exact) / exact)
    assert errs[1] < errs[0]
    assert errs[1] <= 2e-3


def test_misfit_zero_target_conventions():
    grid = SphereGrid.gauss_uniform(6, 12)
    zero = grid.with_values(np.zeros(grid.n_nodes, dtype=complex))
    assert misfit(zero, zero).relative_misfit == 0.0
    ones = grid.with_values(np.ones(grid.n_nodes, dtype=complex))
    assert misfit(zero, ones).relative_misfit == math.inf


def test_misfit_bound_report_chain():
    grid = SphereGrid.gauss_uniform(8, 16)
    f = cone_target(grid, 0.0, math.pi / 4.0)
    zero = grid.with_values(np.zeros(grid.n_nodes, dtype=complex))
    volume = 4.0 * math.pi / 3.0
    report = misfit(f, zero, epsilon_h=2.0, solver_slack=0.0, domain_volume=volume)
    bound = report.bound
    assert bound.cs_bound == pytest.approx(2.0)
    assert bound.theory_bound == pytest.approx(2.0 * (1.0 + 1.0 / 3.0))
    assert bound.cs_satisfied  # ||f|| ~ 1.36 <= 2
    assert bound.theory_satisfied
    tight = misfit(f, zero, epsilon_h=0.5, solver_slack=0.0, domain_volume=volume)
    assert not tight.bound.cs_satisfied


def test_misfit_rejects_mismatched_grids():
    a = SphereGrid.gauss_uniform(6, 12)
    b = SphereGrid.gauss_uniform(8, 12)
    va = a.with_values(np.zeros(a.n_nodes, dtype=complex))
    vb = b.with_values(np.zeros(b.n_nodes, dtype=complex))
    with pytest.raises(ValueError):
        misfit(va, vb)
    with pytest.raises(ValueError):
        misfit(a, va)


# ---------------------------------------------------------------- focusing


def test_focusing_metrics_on_indicator_patterns():
    grid = SphereGrid.gauss_uniform(40, 80)
    hi = math.pi / 4.0
    pattern = cone_target(grid, 0.0, hi)
    report = focusing_metrics(pattern, 0.0, hi)
    assert report.in_cone_fraction == 1.0
    assert report.isotropic_fraction == pytest.approx(0.5 * (1.0 - math.cos(hi)), rel=1e-14)
    assert report.peak_theta <= hi
    assert report.total_power == pytest.approx(
        2.0 * math.pi * (1.0 - math.cos(hi)), rel=5e-2
    )

    fine = SphereGrid.gauss_uniform(400, 8)
    uniform = fine.with_values(np.ones(fine.n_nodes, dtype=complex))
    iso = focusing_metrics(uniform, 0.2 * math.pi, 0.5 * math.pi)
    # a flat pattern scores the isotropic baseline, up to the indicator edge
    assert iso.in_cone_fraction == pytest.approx(iso.isotropic_fraction, rel=3e-3)


def test_focusing_metrics_rejects_zero_and_bad_bounds():
    grid = SphereGrid.gauss_uniform(8, 16)
    zero = grid.with_values(np.zeros(grid.n_nodes, dtype=complex))
    with pytest.raises(ValueError):
        focusing_metrics(zero, 0.0, 1.0)
    ones = grid.with_values(np.ones(grid.n_nodes, dtype=complex))
    with pytest.raises(ValueError):
        focusing_metrics(ones, 1.0, 0.5)
    with pytest.raises(ValueError):
        focusing_metrics(SphereGrid.gauss_uniform(8, 16), 0.0, 1.0)
