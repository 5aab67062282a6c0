"""Discrete volume-kernel operator: self cell, block compression, fast paths."""

import numpy as np
import pytest
from scipy.integrate import quad

from wavefocus.nystrom import VolumeKernelOperator, self_cell_integral
from wavefocus.potential import BallGrid, volume_potential
from wavefocus.sphergrid import ShCoefficients
from wavefocus.synthesis import HExpansion, evaluate_h


def random_field(grid, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(grid.n_nodes) + 1j * rng.standard_normal(grid.n_nodes)


@pytest.mark.parametrize("k,rho", [(1.0, 0.05), (1.0, 0.4), (3.2, 0.17)])
def test_self_cell_closed_form_matches_quadrature(k, rho):
    want = quad(lambda r: r * np.exp(1j * k * r), 0.0, rho, complex_func=True)[0]
    got = complex(self_cell_integral(k, np.array([rho]))[0])
    assert abs(got - want) <= 1e-14


def test_self_cell_small_radius_expansion():
    # int_0^rho r e^{ikr} dr = rho^2/2 + O(rho^3)
    rho = 1e-5
    got = complex(self_cell_integral(1.0, np.array([rho]))[0])
    assert got.real == pytest.approx(rho**2 / 2.0, rel=1e-4)
    assert abs(got.imag) <= rho**3


def test_apply_matches_dense_matrix():
    grid = BallGrid.product(1.0, 4, 5, 6)
    op = VolumeKernelOperator(grid, 1.0, mode="full")
    dense = op.dense()
    assert dense.shape == (grid.n_nodes, grid.n_nodes)
    for seed in (50, 51):
        z = random_field(grid, seed)
        fast = op.apply(z)
        slow = dense @ z
        scale = float(np.max(np.abs(slow)))
        assert np.max(np.abs(fast - slow)) <= 1e-13 * max(1.0, scale)


def test_dense_kernel_entries_off_diagonal():
    grid = BallGrid.product(1.0, 3, 3, 4)
    k = 1.3
    op = VolumeKernelOperator(grid, k, mode="full")
    dense = op.dense()
    pts = grid.cartesian()
    i, j = 2, 17
    d = float(np.linalg.norm(pts[i] - pts[j]))
    want = grid.weights[j] * np.exp(1j * k * d) / (4.0 * np.pi * d)
    assert dense[i, j] == pytest.approx(want, rel=1e-12)


def test_diagonal_uses_cell_averaged_kernel():
    grid = BallGrid.product(1.0, 3, 3, 4)
    op = VolumeKernelOperator(grid, 2.0, mode="full")
    dense = op.dense()
    cells = grid.cell_radii()
    want = self_cell_integral(2.0, cells)
    assert np.max(np.abs(np.diag(dense) - want)) <= 1e-14


def test_axial_block_agrees_with_full_operator():
    grid = BallGrid.product(1.0, 5, 6, 8)
    full = VolumeKernelOperator(grid, 1.0, mode="full")
    axial = VolumeKernelOperator(grid, 1.0, mode="axial")
    rng = np.random.default_rng(52)
    z_m = rng.standard_normal(axial.n_meridian) + 1j * rng.standard_normal(axial.n_meridian)
    z_full = np.repeat(z_m, grid.n_phi)
    got_m = axial.apply_meridian(z_m)
    got_full = full.apply(z_full).reshape(axial.n_meridian, grid.n_phi)
    # a phi-independent input stays phi independent
    assert np.max(np.abs(got_full - got_full[:, :1])) <= 1e-12 * np.max(np.abs(got_full))
    assert np.max(np.abs(got_m - got_full[:, 0])) <= 1e-12 * np.max(np.abs(got_m))


def test_axial_mode_has_no_full_blocks():
    grid = BallGrid.product(1.0, 4, 4, 6)
    axial = VolumeKernelOperator(grid, 1.0, mode="axial")
    assert axial.blocks is None
    with pytest.raises(ValueError):
        VolumeKernelOperator(grid, 1.0, mode="sideways")


def test_operator_converges_to_the_analytic_potential():
    """Independent route check: the Nystrom quadrature of the kernel applied
    to source samples approaches the semi-analytic expansion potential."""
    rng = np.random.default_rng(53)
    entries = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    h = HExpansion(ShCoefficients(2, entries))
    errs = []
    for dims in ((8, 8, 12), (16, 16, 24)):
        grid = BallGrid.product(1.0, *dims)
        z = evaluate_h(h, grid.cartesian())
        op = VolumeKernelOperator(grid, 1.0, mode="full")
        got = op.apply(z)
        want = volume_potential(h, 1.0, grid)
        errs.append(grid.l2_norm(got - want) / grid.l2_norm(want))
    assert errs[1] < errs[0]
    assert errs[1] <= 2e-2
