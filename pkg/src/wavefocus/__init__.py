"""Acoustic material design: focus a plane wave into a prescribed pattern.

The package synthesizes a scattering potential (and the particle density
realizing it) whose far field matches a desired pattern on the unit
sphere, then verifies the design by solving the forward scattering problem
independently.  See :mod:`wavefocus.pipeline` for the end-to-end flow and
:mod:`wavefocus.cli` for the command line.
"""

from .errors import (
    ConfigError,
    DegenerateDenominatorError,
    IllPosedFloorError,
    NumericsError,
    OutputLockError,
    PerturbationBudgetError,
    SolverConvergenceError,
    WaveFocusError,
)
from .forward import (
    BoundReport,
    FocusingReport,
    KernelSpec,
    MisfitReport,
    TotalField,
    amplitude_from_source,
    focusing_metrics,
    ls_solve,
    misfit,
    scattering_amplitude,
)
from .particles import (
    CapacitanceModel,
    ParticleDensityField,
    ValidityReport,
    density_from_potential,
    impedance_capacitance,
    sphere_capacitance,
    validity_report,
)
from .potential import (
    BallGrid,
    DenominatorReport,
    PerturbationReport,
    PotentialField,
    check_denominator,
    incident_wave,
    perturb_h,
    reconstruct_q,
    volume_potential,
    volume_potential_at,
)
from .specfun import (
    QuadratureRule1D,
    assoc_legendre,
    radial_bessel_moment,
    sph_bessel_j,
    sph_bessel_y,
    sph_hankel1,
    sph_harm,
)
from .sphergrid import (
    ShCoefficients,
    SphereGrid,
    analyze,
    cone_target,
    synthesize,
    tail_energy,
)
from .synthesis import (
    HExpansion,
    clip_coeffs,
    evaluate_h,
    moment_factors,
    predicted_amplitude,
    solve_h_coeffs,
)
from .config import DesignConfig, load_config
from .io import Manifest, output_lock
from .pipeline import (
    DesignBundle,
    load_bundle,
    run_analyze,
    run_design,
    run_plot,
    run_sweep,
    run_verify,
)

__version__ = "0.1.0"
