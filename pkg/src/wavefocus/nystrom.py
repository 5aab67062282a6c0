"""Discretization of the volume integral operator z -> int g(x,y) z(y) dy.

On a product ball grid the kernel between nodes depends on the azimuthal
indices only through their difference, so the full Nystrom matrix is block
circulant in phi.  Storing one (n_r*n_theta)^2 block per nonnegative phi
frequency and applying FFTs along phi gives the exact dense matvec at a
fraction of the memory (the mirror frequencies reuse the same blocks).

The singular self-interaction is handled by replacing the diagonal entry
with the kernel integrated over the equal-volume ball of the node's cell:
int_0^rho r e^{ikr} dr with rho = (3w/4pi)^{1/3}.

For axisymmetric data only the zeroth frequency block acts; ``mode="axial"``
assembles just that block and the solver then works on meridian vectors.
"""

from __future__ import annotations

import numpy as np

from .potential import BallGrid

__all__ = ["VolumeKernelOperator", "self_cell_integral"]

_ROW_CHUNK = 48


def self_cell_integral(k: float, rho: np.ndarray) -> np.ndarray:
    """int_0^rho r e^{ikr} dr = e^{ik rho}(1/k^2 - i rho/k) - 1/k^2."""
    rho = np.asarray(rho, dtype=float)
    return np.exp(1j * k * rho) * (1.0 / k**2 - 1j * rho / k) - 1.0 / k**2


class VolumeKernelOperator:
    """Nystrom matrix of the outgoing Helmholtz volume kernel on a BallGrid.

    mode="full" stores frequency blocks for arbitrary data; mode="axial"
    stores only the phi-average block, enough for phi-independent data.
    """

    def __init__(self, grid: BallGrid, k: float, mode: str = "full"):
        if mode not in ("full", "axial"):
            raise ValueError(f"unknown operator mode {mode!r}")
        self.grid = grid
        self.k = float(k)
        self.mode = mode
        n_m = grid.n_r * grid.n_theta
        self.n_meridian = n_m
        # meridian geometry: cylindrical radius, height, quadrature weight
        r = np.repeat(grid.r_axis, grid.n_theta)
        ct = np.tile(grid.t_axis, grid.n_r)
        st = np.sqrt(np.maximum(0.0, 1.0 - ct**2))
        self._rho = r * st
        self._zz = r * ct
        w_phi = 2.0 * np.pi / grid.n_phi
        self._wm = np.repeat(grid.r_weights, grid.n_theta) * np.tile(
            grid.t_weights, grid.n_r
        )
        self._w_phi = w_phi
        cell = (3.0 * self._wm * w_phi / (4.0 * np.pi)) ** (1.0 / 3.0)
        self._diag = self_cell_integral(self.k, cell)
        # cos of the azimuthal gap, symmetrized so lag d and n_phi - d agree
        # bit for bit (the mirror-block reuse in apply() relies on it)
        n_phi = grid.n_phi
        gaps = np.minimum(np.arange(n_phi), n_phi - np.arange(n_phi))
        self._cos_gap = np.cos(2.0 * np.pi * gaps / n_phi)
        if mode == "axial":
            self._block0 = self._assemble_axial()
            self.blocks = None
        else:
            self.blocks = self._assemble_full()
            self._block0 = self.blocks[0]

    # -- assembly -----------------------------------------------------------

    def _lag_kernel_rows(self, rows: slice) -> np.ndarray:
        """Kernel block K[rows, :, d] for every azimuthal lag d."""
        rho_r = self._rho[rows][:, None]
        zz_r = self._zz[rows][:, None]
        base = (zz_r - self._zz[None, :]) ** 2 + rho_r**2 + self._rho[None, :] ** 2
        cross = 2.0 * rho_r * self._rho[None, :]
        w_col = self._wm[None, :] * self._w_phi
        out = np.empty((base.shape[0], self.n_meridian, self.grid.n_phi), dtype=complex)
        for d in range(self.grid.n_phi):
            dist = np.sqrt(np.maximum(base - cross * self._cos_gap[d], 0.0))
            if d == 0:
                # self pairs sit on the diagonal of the lag-0 block
                lo = rows.start or 0
                idx = np.arange(base.shape[0])
                dist[idx, lo + idx] = 1.0  # placeholder, overwritten below
            kern = np.exp(1j * self.k * dist) / (4.0 * np.pi * dist) * w_col
            if d == 0:
                kern[idx, lo + idx] = self._diag[lo + idx]
            out[:, :, d] = kern
        return out

    def _assemble_axial(self) -> np.ndarray:
        block = np.zeros((self.n_meridian, self.n_meridian), dtype=complex)
        for start in range(0, self.n_meridian, _ROW_CHUNK):
            rows = slice(start, min(start + _ROW_CHUNK, self.n_meridian))
            block[rows] = self._lag_kernel_rows(rows).sum(axis=2)
        return block

    def _assemble_full(self) -> np.ndarray:
        n_half = self.grid.n_phi // 2 + 1
        blocks = np.empty((n_half, self.n_meridian, self.n_meridian), dtype=complex)
        for start in range(0, self.n_meridian, _ROW_CHUNK):
            rows = slice(start, min(start + _ROW_CHUNK, self.n_meridian))
            lag = self._lag_kernel_rows(rows)
            hat = np.fft.fft(lag, axis=2)[:, :, :n_half]
            blocks[:, rows, :] = np.moveaxis(hat, 2, 0)
        return blocks

    # -- application --------------------------------------------------------

    def apply(self, z: np.ndarray) -> np.ndarray:
        """Exact dense matvec through the circulant structure."""
        if self.mode != "full":
            raise ValueError("apply() needs mode='full'; use apply_meridian for axial")
        n_phi = self.grid.n_phi
        z2 = np.asarray(z, dtype=complex).reshape(self.n_meridian, n_phi)
        zhat = np.fft.fft(z2, axis=1)
        out = np.empty_like(zhat)
        n_half = n_phi // 2 + 1
        for mu in range(n_phi):
            block = self.blocks[mu if mu < n_half else n_phi - mu]
            out[:, mu] = block @ zhat[:, mu]
        return np.fft.ifft(out, axis=1).ravel()

    def apply_meridian(self, z_m: np.ndarray) -> np.ndarray:
        """Matvec restricted to phi-independent data (meridian vector)."""
        return self._block0 @ np.asarray(z_m, dtype=complex)

    # -- oracle -------------------------------------------------------------

    def dense(self) -> np.ndarray:
        """Explicit N x N matrix; for small grids and cross-checks only."""
        grid = self.grid
        n = grid.n_nodes
        if n > 6000:
            raise ValueError(f"dense matrix for {n} nodes would be enormous")
        pts = grid.cartesian()
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=2))
        np.fill_diagonal(dist, 1.0)
        mat = np.exp(1j * self.k * dist) / (4.0 * np.pi * dist) * grid.weights[None, :]
        cell = grid.cell_radii()
        np.fill_diagonal(mat, self_cell_integral(self.k, cell))
        return mat
