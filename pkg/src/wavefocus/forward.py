"""Independent forward verification of a reconstructed potential.

Solves the interior field equation u = u0 - W[q u] with the Nystrom
operator W from :mod:`wavefocus.nystrom` (GMRES, with one coarse-seeded
retry), evaluates the far-field amplitude by quadrature of

    A(beta) = -(1/4 pi) int_D e^{-i k beta . x} q(x) u(x) dx,

and reports pattern misfits against a target.  Nothing here reuses the
synthesis-side moment relation, so agreement between the attained and
designed patterns is a genuine round-trip check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres
from scipy.spatial import cKDTree

from .errors import SolverConvergenceError
from .nystrom import VolumeKernelOperator
from .potential import BallGrid, PotentialField, incident_wave
from .sphergrid import SphereGrid

__all__ = [
    "KernelSpec",
    "TotalField",
    "MisfitReport",
    "BoundReport",
    "FocusingReport",
    "ls_solve",
    "scattering_amplitude",
    "amplitude_from_source",
    "misfit",
    "focusing_metrics",
]

_AXISYM_RTOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """Wavenumber and incident direction of the scattering problem."""

    k: float
    alpha: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        a = np.asarray(self.alpha, dtype=float)
        if a.shape != (3,) or abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("incident direction must be a unit 3-vector")
        object.__setattr__(self, "alpha", (float(a[0]), float(a[1]), float(a[2])))

    def incident(self, points: np.ndarray) -> np.ndarray:
        return incident_wave(self.k, np.asarray(self.alpha), points)


@dataclass
class TotalField:
    """Solution of the interior field equation on a ball grid."""

    grid: BallGrid
    u_values: np.ndarray
    residual: float
    iterations: int
    residual_history: list[float]
    method: str
    retried: bool = False


def _phi_deviation(values: np.ndarray, grid: BallGrid) -> float:
    v2 = values.reshape(grid.n_r * grid.n_theta, grid.n_phi)
    return float(np.max(np.abs(v2 - v2.mean(axis=1, keepdims=True))))


def _gmres_solve(op, rhs, x0, tol, max_iterations):
    history: list[float] = []
    solution, info = gmres(
        op,
        rhs,
        x0=x0,
        rtol=tol,
        atol=0.0,
        restart=min(max_iterations, rhs.size),
        maxiter=1,
        callback=history.append,
        callback_type="pr_norm",
    )
    return solution, info, history


def _coarse_guess(q_field: PotentialField, kernel: KernelSpec, tol, max_iterations):
    """Initial guess from a solve on a roughly half-resolution grid."""
    grid = q_field.grid
    coarse = BallGrid.product(
        grid.radius,
        max(4, grid.n_r // 2),
        max(4, grid.n_theta // 2),
        max(8, grid.n_phi // 2),
    )
    fine_pts = grid.cartesian()
    coarse_pts = coarse.cartesian()
    q_coarse = q_field.q_values[cKDTree(fine_pts).query(coarse_pts)[1]]
    op = VolumeKernelOperator(coarse, kernel.k, mode="full")
    u0 = kernel.incident(coarse_pts)

    def matvec(u):
        return u + op.apply(q_coarse * u)

    lin = LinearOperator((coarse.n_nodes, coarse.n_nodes), matvec=matvec, dtype=complex)
    u_coarse, _info, _hist = _gmres_solve(lin, u0, u0, tol, max_iterations)
    return u_coarse[cKDTree(coarse_pts).query(fine_pts)[1]]


def ls_solve(
    q_field: PotentialField,
    kernel: KernelSpec,
    tol: float = 1e-8,
    max_iterations: int = 500,
    axisymmetric: bool | None = None,
) -> TotalField:
    """Solve u + W[q u] = u0 on the grid carried by ``q_field``.

    For phi-independent q and axis-aligned incidence the system decouples
    by azimuthal frequency and only the zeroth block is solved (the other
    frequency components of the solution vanish identically); otherwise the
    full block-circulant operator is used.  ``axisymmetric=None`` selects
    automatically.  On an iteration-cap miss the solve retries once from an
    initial guess interpolated off a coarser grid, then raises
    :class:`SolverConvergenceError` carrying the residual history.
    """
    if tol <= 0.0:
        raise ValueError(f"solver tolerance must be positive, got {tol}")
    grid = q_field.grid
    q = q_field.q_values
    scale = float(np.max(np.abs(q))) if q.size else 0.0
    alpha_axial = kernel.alpha[0] == 0.0 and kernel.alpha[1] == 0.0
    deviation = _phi_deviation(q, grid)
    if axisymmetric is None:
        axisymmetric = alpha_axial and deviation <= _AXISYM_RTOL * (scale + 1.0)
    elif axisymmetric:
        if not alpha_axial:
            raise ValueError("axisymmetric solve needs the incident direction on the z axis")
        if deviation > 1e-9 * (scale + 1.0):
            raise ValueError(
                f"potential varies across phi by {deviation:.3e}; not axisymmetric"
            )

    pts = grid.cartesian()
    u0_full = kernel.incident(pts)

    if axisymmetric:
        op = VolumeKernelOperator(grid, kernel.k, mode="axial")
        n_m = op.n_meridian
        q_m = q.reshape(n_m, grid.n_phi).mean(axis=1)
        u0_m = u0_full.reshape(n_m, grid.n_phi)[:, 0]

        def matvec(u):
            return u + op.apply_meridian(q_m * u)

        lin = LinearOperator((n_m, n_m), matvec=matvec, dtype=complex)
        rhs = u0_m
        method = "gmres-axial"
    else:
        op = VolumeKernelOperator(grid, kernel.k, mode="full")

        def matvec(u):
            return u + op.apply(q * u)

        lin = LinearOperator((grid.n_nodes, grid.n_nodes), matvec=matvec, dtype=complex)
        rhs = u0_full
        method = "gmres-full"

    solution, info, history = _gmres_solve(lin, rhs, rhs, tol, max_iterations)
    retried = False
    if info != 0 and not axisymmetric:
        retried = True
        guess = _coarse_guess(q_field, kernel, tol, max_iterations)
        solution, info, history2 = _gmres_solve(lin, rhs, guess, tol, max_iterations)
        history = history + history2
    elif info != 0 and axisymmetric:
        # meridian systems are small; retry simply restarts from the result
        retried = True
        solution, info, history2 = _gmres_solve(lin, rhs, solution, tol, max_iterations)
        history = history + history2

    residual = float(
        np.linalg.norm(rhs - lin.matvec(solution)) / np.linalg.norm(rhs)
    )
    if info != 0 and residual > tol:
        raise SolverConvergenceError(residual, tol, history)

    if axisymmetric:
        u_values = np.repeat(solution, grid.n_phi)
    else:
        u_values = solution
    return TotalField(grid, u_values, residual, len(history), history, method, retried)


def amplitude_from_source(
    source_values: np.ndarray, grid: BallGrid, k: float, sphere: SphereGrid
) -> SphereGrid:
    """A(beta) = -(1/4 pi) int e^{-ik beta.x} s(x) dx by ball quadrature."""
    pts = grid.cartesian()
    weighted = grid.weights * source_values
    betas = sphere.unit_vectors()
    out = np.empty(sphere.n_nodes, dtype=complex)
    chunk = max(1, 4_000_000 // max(1, grid.n_nodes))
    for start in range(0, sphere.n_nodes, chunk):
        stop = min(start + chunk, sphere.n_nodes)
        phases = np.exp(-1j * k * (betas[start:stop] @ pts.T))
        out[start:stop] = phases @ weighted
    return sphere.with_values(-out / (4.0 * np.pi))


def scattering_amplitude(
    q_field: PotentialField, total: TotalField, kernel: KernelSpec, sphere: SphereGrid
) -> SphereGrid:
    """Far-field amplitude of the verified solution on the sphere grid."""
    if total.grid is not q_field.grid and total.grid.n_nodes != q_field.grid.n_nodes:
        raise ValueError("total field and potential live on different grids")
    return amplitude_from_source(
        q_field.q_values * total.u_values, q_field.grid, kernel.k, sphere
    )


@dataclass(frozen=True)
class BoundReport:
    """Misfit bound diagnostics.

    ``epsilon_h`` is the synthesis-stage pattern residual ||f - A_h|| with
    A_h the amplitude the source h itself radiates (computed by the same
    ball quadrature as the attained amplitude).  The Cauchy-Schwarz chain

        ||f - A|| <= epsilon_h + sqrt(|D|/(4 pi)) ||q u - h||_{L2(D)}

    holds exactly in the discrete norms, so ``cs_satisfied`` failing means
    an implementation bug, not a modeling gap.  ``theory_bound`` quotes the
    coarser a-priori form epsilon_h * (1 + |D|/(4 pi)) for reference; it
    assumes the solver slack is also below epsilon_h, which small
    discretization residue can violate when epsilon_h is tiny.
    """

    epsilon_h: float
    solver_slack: float
    domain_volume: float
    cs_bound: float
    cs_satisfied: bool
    theory_bound: float
    theory_satisfied: bool


@dataclass(frozen=True)
class MisfitReport:
    l2_misfit: float
    relative_misfit: float
    target_norm: float
    bound: BoundReport | None = None


def misfit(
    target: SphereGrid,
    attained: SphereGrid,
    *,
    epsilon_h: float | None = None,
    solver_slack: float | None = None,
    domain_volume: float | None = None,
) -> MisfitReport:
    """Quadrature L2 misfit between two valued sphere grids.

    The optional scalars activate the bound report; see
    :class:`BoundReport` for their meaning.
    """
    if target.values is None or attained.values is None:
        raise ValueError("both grids must carry values")
    if target.n_nodes != attained.n_nodes:
        raise ValueError("target and attained grids have different node counts")
    diff = target.values - attained.values
    l2 = float(np.sqrt(np.sum(target.weights * np.abs(diff) ** 2)))
    t_norm = target.norm()
    if t_norm > 0.0:
        rel = l2 / t_norm
    else:
        rel = 0.0 if l2 == 0.0 else math.inf
    bound = None
    if epsilon_h is not None and solver_slack is not None and domain_volume is not None:
        factor = math.sqrt(domain_volume / (4.0 * math.pi))
        cs = epsilon_h + factor * solver_slack
        theory = epsilon_h * (1.0 + domain_volume / (4.0 * math.pi))
        slack_eps = 1e-10 * (1.0 + cs)
        bound = BoundReport(
            epsilon_h=epsilon_h,
            solver_slack=solver_slack,
            domain_volume=domain_volume,
            cs_bound=cs,
            cs_satisfied=l2 <= cs + slack_eps,
            theory_bound=theory,
            theory_satisfied=l2 <= theory + slack_eps,
        )
    return MisfitReport(l2, rel, t_norm, bound)


@dataclass(frozen=True)
class FocusingReport:
    in_cone_fraction: float
    isotropic_fraction: float
    peak_theta: float
    peak_phi: float
    total_power: float


def focusing_metrics(
    attained: SphereGrid, theta_lo: float, theta_hi: float
) -> FocusingReport:
    """Fraction of radiated power inside the polar annulus plus the peak node.

    ``isotropic_fraction`` is the annulus solid angle over 4 pi, the score a
    direction-blind radiator would get.  Raises ValueError on a vanishing
    pattern (the fraction is undefined).
    """
    if attained.values is None:
        raise ValueError("grid carries no values")
    if not (0.0 <= theta_lo < theta_hi <= np.pi):
        raise ValueError(
            f"annulus must satisfy 0 <= lo < hi <= pi, got [{theta_lo}, {theta_hi}]"
        )
    power = attained.weights * np.abs(attained.values) ** 2
    total = float(power.sum())
    if total <= 0.0:
        raise ValueError("pattern is identically zero; cone fraction undefined")
    inside = (attained.thetas >= theta_lo) & (attained.thetas <= theta_hi)
    peak = int(np.argmax(np.abs(attained.values)))
    return FocusingReport(
        in_cone_fraction=float(power[inside].sum() / total),
        isotropic_fraction=float(
            0.5 * (math.cos(theta_lo) - math.cos(theta_hi))
        ),
        peak_theta=float(attained.thetas[peak]),
        peak_phi=float(attained.phis[peak]),
        total_power=total,
    )
