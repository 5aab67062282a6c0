"""End-to-end orchestration: design, verify, sweep, analyze, plot.

``run_design`` carries a target pattern through source synthesis, clipping,
potential reconstruction, and particle conversion, writing every artifact
plus a hashed manifest.  ``run_verify`` is the independent check: it rereads
the potential, solves the forward scattering problem, and compares the
attained far field against the stored target.  The two legs share no
intermediate state beyond the files, so a verify pass is evidence, not
bookkeeping.
"""

from __future__ import annotations

import contextlib
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import DesignConfig, config_overrides
from .errors import ConfigError, WaveFocusError
from .figures import render_contour_figure, render_pattern_figure
from .forward import (
    KernelSpec,
    amplitude_from_source,
    focusing_metrics,
    ls_solve,
    misfit,
    scattering_amplitude,
)
from .io import (
    Manifest,
    output_lock,
    read_json,
    read_coefficients_json,
    read_contour_csv,
    read_h_json,
    read_pattern_csv,
    read_q_csv,
    read_sphere_field_csv,
    write_coefficients_json,
    write_contour_csv,
    write_density_csv,
    write_h_json,
    write_json,
    write_pattern_csv,
    write_q_csv,
    write_sphere_field_csv,
    write_sweep_csv,
)
from .particles import (
    CapacitanceModel,
    ParticleDensityField,
    ValidityReport,
    density_from_potential,
    validity_report,
)
from .potential import (
    BallGrid,
    DenominatorReport,
    PerturbationReport,
    PotentialField,
    check_denominator,
    perturb_h,
    reconstruct_q,
    volume_potential,
)
from .sphergrid import ShCoefficients, SphereGrid, analyze, cone_target, synthesize
from .synthesis import (
    HExpansion,
    clip_coeffs,
    evaluate_h,
    predicted_amplitude,
    solve_h_coeffs,
)

PATTERN_SECTION_POINTS = 720


@dataclass
class DesignBundle:
    """Everything one design run produced, in memory plus on disk."""

    config: DesignConfig
    directory: Path
    target: ShCoefficients
    target_samples: SphereGrid
    h: HExpansion
    q_field: PotentialField
    density: ParticleDensityField
    validity: ValidityReport
    denominator: DenominatorReport
    perturbation: PerturbationReport
    design_report: dict
    manifest: Manifest


def _zero_m_nonzero(coeffs: ShCoefficients) -> ShCoefficients:
    """Drop the m != 0 coefficients.

    Polar-cap targets are rotation symmetric about the z axis, so their
    nonzero-m analysis output is pure quadrature noise (|c| ~ 1e-16).
    Removing it keeps the designed potential exactly axisymmetric, which
    the forward solver exploits.
    """
    entries = coeffs.entries.copy()
    for l in range(coeffs.band_limit + 1):
        for m in range(-l, l + 1):
            if m != 0:
                entries[ShCoefficients.flat_index(l, m)] = 0.0
    return ShCoefficients(coeffs.band_limit, entries)


def _coeff_l2(a: ShCoefficients, b: ShCoefficients | None = None) -> float:
    """L2(S^2) norm via orthonormality: ||sum c Y|| = ||c||_2."""
    delta = a.entries if b is None else a.entries - b.entries
    return float(np.linalg.norm(delta))


def _build_target(
    config: DesignConfig,
) -> tuple[ShCoefficients, SphereGrid, float]:
    """Target coefficients, raw samples on the analysis grid, tail size.

    The tail is ||raw - band-L truncation||_{L2(S^2)} estimated on the
    analysis grid; it is the irreducible part of any later misfit.
    """
    L = config.band_limit
    grid = SphereGrid.gauss_uniform(*config.resolved_target_sphere_grid())
    if config.target_kind == "cone":
        raw = cone_target(grid, config.theta_lo, config.theta_hi, config.amplitude)
        coeffs = _zero_m_nonzero(analyze(raw, L))
        raw_sq = float(np.sum(raw.weights * np.abs(raw.values) ** 2))
        tail_sq = max(0.0, raw_sq - _coeff_l2(coeffs) ** 2)
        return coeffs, raw, math.sqrt(tail_sq)
    if config.target_kind == "zero":
        coeffs = ShCoefficients.zeros(L)
        return coeffs, grid.with_values(np.zeros(grid.n_nodes, complex)), 0.0
    loaded = read_coefficients_json(config.coefficient_file)
    if loaded.band_limit > L:
        tail = math.sqrt(
            max(0.0, _coeff_l2(loaded) ** 2 - _coeff_l2(loaded.truncated(L)) ** 2)
        )
        coeffs = loaded.truncated(L)
    else:
        tail = 0.0
        entries = np.zeros((L + 1) ** 2, dtype=complex)
        entries[: loaded.entries.size] = loaded.entries
        coeffs = ShCoefficients(L, entries)
    return coeffs, synthesize(coeffs, grid), tail


def _particle_model(config: DesignConfig) -> CapacitanceModel:
    if config.capacitance is not None:
        return CapacitanceModel(config.capacitance, config.particle_radius)
    return CapacitanceModel.soft_sphere(config.particle_radius)


def run_design(
    config: DesignConfig,
    out_dir: str | Path,
    *,
    lock: bool = True,
) -> DesignBundle:
    """Execute the design leg and write its artifacts into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    guard = output_lock(out_dir) if lock else contextlib.nullcontext()
    with guard:
        manifest = Manifest(out_dir, config.echo(), config.deterministic)
        manifest.seeds["perturbation"] = config.perturbation_seed
        try:
            bundle = _design_into(config, out_dir, manifest)
        except WaveFocusError as exc:
            manifest.status = "failed"
            manifest.error = f"{type(exc).__name__}: {exc}"
            manifest.save()
            raise
        return bundle


def _design_into(
    config: DesignConfig, out_dir: Path, manifest: Manifest
) -> DesignBundle:
    k = config.wavenumber
    alpha = config.alpha
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    target, target_samples, truncation_epsilon = _build_target(config)
    timings["target_analysis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    h_raw = solve_h_coeffs(target, k, support_radius=config.radius)
    h = clip_coeffs(h_raw, config.clip_bound)
    clipped_count = int(np.count_nonzero(h.clip_mask))
    timings["source_synthesis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    grid = BallGrid.product(config.radius, *config.ball_grid)
    v = volume_potential(h, k, grid)
    denominator = check_denominator(v, k, alpha, grid)
    if denominator.min_modulus > config.denominator_floor:
        perturbation = PerturbationReport(
            applied=False,
            attempts=0,
            seed=config.perturbation_seed,
            min_modulus=denominator.min_modulus,
            shift_norm=0.0,
            budget=config.perturbation_scale * h.l2_norm(),
        )
    else:
        h, perturbation = perturb_h(
            h,
            config.perturbation_scale * h.l2_norm(),
            config.perturbation_seed,
            k=k,
            alpha=alpha,
            grid=grid,
            denominator_floor=config.denominator_floor,
            max_attempts=config.perturbation_attempts,
        )
        v = volume_potential(h, k, grid)
        denominator = check_denominator(v, k, alpha, grid)
    q_field = reconstruct_q(
        h, v, k, alpha, grid, denominator_floor=config.denominator_floor
    )
    timings["potential"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    model = _particle_model(config)
    background_q0 = k**2 * (1.0 - config.background_index)
    density = density_from_potential(q_field, background_q0, model)
    validity = validity_report(
        density,
        config.particle_radius,
        k,
        n0_max=config.background_index,
        ka_threshold=config.ka_threshold,
        spacing_threshold=config.spacing_threshold,
    )
    timings["particles"] = time.perf_counter() - t0

    predicted = predicted_amplitude(h, k)
    epsilon_h = _coeff_l2(target, predicted)
    target_norm = _coeff_l2(target)
    smallness = math.sqrt(config.radius) / math.sqrt(4.0 * math.pi) * h.l2_norm()

    design_report = {
        "max_abs_q": q_field.max_abs_q,
        "min_denominator": denominator.min_modulus,
        "denominator_argmin": {
            "r": denominator.argmin_node[0],
            "theta": denominator.argmin_node[1],
            "phi": denominator.argmin_node[2],
        },
        "clip_bound": config.clip_bound,
        "clipped_count": clipped_count,
        "perturbation": {
            "applied": perturbation.applied,
            "attempts": perturbation.attempts,
            "seed": perturbation.seed,
            "min_modulus": perturbation.min_modulus,
            "shift_norm": perturbation.shift_norm,
            "budget": perturbation.budget,
        },
        "epsilon_h": epsilon_h,
        "truncation_epsilon": truncation_epsilon,
        "predicted_misfit": {
            "l2": epsilon_h,
            "relative": epsilon_h / target_norm if target_norm > 0.0 else 0.0,
        },
        "h_l2_norm": h.l2_norm(),
        "h_max_coeff": h.max_abs_coeff(),
        "smallness": smallness,
        "smallness_ok": smallness < 0.5,
        "target_norm": target_norm,
        "density": {
            "max_density": density.max_density,
            "negative_fraction": density.negative_fraction,
            "max_abs_imag": density.max_abs_imag,
            "capacitance": {
                "re": complex(density.capacitance).real,
                "im": complex(density.capacitance).imag,
            },
        },
    }

    write_sphere_field_csv(out_dir / "target_samples.csv", target_samples)
    write_coefficients_json(out_dir / "target_coefficients.json", target)
    write_h_json(out_dir / "h_coefficients.json", h)
    write_q_csv(out_dir / "q_field.csv", q_field)
    write_density_csv(out_dir / "density.csv", density)
    write_json(out_dir / "design_report.json", design_report)
    write_json(
        out_dir / "validity_report.json",
        {
            "k0": validity.k0,
            "particle_radius": validity.particle_radius,
            "d_min": validity.d_min,
            "ka_ratio": validity.ka_ratio,
            "spacing_ratio": validity.spacing_ratio,
            "volume_fraction": validity.volume_fraction,
            "ka_threshold": validity.ka_threshold,
            "spacing_threshold": validity.spacing_threshold,
            "passed": validity.passed,
            "failures": list(validity.failures),
        },
    )
    for name in (
        "target_samples.csv",
        "target_coefficients.json",
        "h_coefficients.json",
        "q_field.csv",
        "density.csv",
        "design_report.json",
        "validity_report.json",
    ):
        manifest.record_file(out_dir / name)
    manifest.record_stage("design")
    manifest.timings.update({f"design.{k_}": v_ for k_, v_ in timings.items()})
    manifest.status = "ok"
    manifest.save()

    return DesignBundle(
        config=config,
        directory=out_dir,
        target=target,
        target_samples=target_samples,
        h=h,
        q_field=q_field,
        density=density,
        validity=validity,
        denominator=denominator,
        perturbation=perturbation,
        design_report=design_report,
        manifest=manifest,
    )


def config_from_echo(echo: dict) -> DesignConfig:
    """Rebuild the validated config from a manifest's config echo."""
    try:
        target = echo["target"]
        grids = echo["grids"]
        safeguards = echo["safeguards"]
        particles = echo["particles"]
        solver = echo["solver"]
        output = echo["output"]
        return DesignConfig(
            wavenumber=float(echo["wavenumber"]),
            incident_direction=tuple(float(c) for c in echo["incident_direction"]),
            band_limit=int(echo["band_limit"]),
            clip_bound=float(echo["clip_bound"]),
            radius=float(echo["radius"]),
            target_kind=str(target["kind"]),
            theta_lo=float(target["theta_lo"]),
            theta_hi=float(target["theta_hi"]),
            amplitude=float(target["amplitude"]),
            coefficient_file=target.get("coefficient_file"),
            ball_grid=tuple(int(n) for n in grids["ball"]),
            sphere_grid=tuple(int(n) for n in grids["sphere"]),
            target_sphere_grid=tuple(int(n) for n in grids["target_sphere"]),
            denominator_floor=float(safeguards["denominator_floor"]),
            perturbation_scale=float(safeguards["perturbation_scale"]),
            perturbation_seed=int(safeguards["perturbation_seed"]),
            perturbation_attempts=int(safeguards["perturbation_attempts"]),
            particle_radius=float(particles["particle_radius"]),
            capacitance=(
                None
                if particles["capacitance"] is None
                else float(particles["capacitance"])
            ),
            background_index=float(particles["background_index"]),
            ka_threshold=float(particles["ka_threshold"]),
            spacing_threshold=float(particles["spacing_threshold"]),
            solver_tolerance=float(solver["tolerance"]),
            solver_max_iterations=int(solver["max_iterations"]),
            axisymmetric=solver["axisymmetric"],
            output_directory=output.get("directory"),
            deterministic=bool(output["deterministic"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"manifest config echo is incomplete: {exc}") from None


def load_bundle(directory: str | Path) -> DesignBundle:
    """Reconstruct a design bundle from its on-disk artifacts."""
    directory = Path(directory)
    manifest = Manifest.load(directory)
    config = config_from_echo(manifest.config_echo)
    h = read_h_json(directory / "h_coefficients.json")
    grid = BallGrid.product(config.radius, *config.ball_grid)
    q_field = read_q_csv(directory / "q_field.csv", grid, h)
    target = read_coefficients_json(directory / "target_coefficients.json")
    target_samples = read_sphere_field_csv(directory / "target_samples.csv")
    density = density_from_potential(
        q_field,
        config.wavenumber**2 * (1.0 - config.background_index),
        _particle_model(config),
    )
    validity = validity_report(
        density,
        config.particle_radius,
        config.wavenumber,
        n0_max=config.background_index,
        ka_threshold=config.ka_threshold,
        spacing_threshold=config.spacing_threshold,
    )
    mods = np.abs(q_field.denom_values)
    argmin = int(np.argmin(mods))
    denominator = DenominatorReport(
        float(mods[argmin]),
        argmin,
        (
            float(grid.radii[argmin]),
            float(grid.thetas[argmin]),
            float(grid.phis[argmin]),
        ),
    )
    design_report = {}
    report_path = directory / "design_report.json"
    if report_path.is_file():
        design_report = read_json(report_path)
    return DesignBundle(
        config=config,
        directory=directory,
        target=target,
        target_samples=target_samples,
        h=h,
        q_field=q_field,
        density=density,
        validity=validity,
        denominator=denominator,
        perturbation=PerturbationReport(
            applied=bool(
                design_report.get("perturbation", {}).get("applied", False)
            ),
            attempts=int(design_report.get("perturbation", {}).get("attempts", 0)),
            seed=int(design_report.get("perturbation", {}).get("seed", 0)),
            min_modulus=float(
                design_report.get("perturbation", {}).get("min_modulus", math.nan)
            ),
            shift_norm=float(
                design_report.get("perturbation", {}).get("shift_norm", 0.0)
            ),
            budget=float(design_report.get("perturbation", {}).get("budget", 0.0)),
        ),
        design_report=design_report,
        manifest=manifest,
    )


def _section_directions(n_points: int) -> tuple[np.ndarray, SphereGrid]:
    """Signed-theta sweep through the phi = 0 / phi = pi meridian plane."""
    theta_signed = np.linspace(-math.pi, math.pi, n_points + 1)
    thetas = np.abs(theta_signed)
    phis = np.where(theta_signed < 0.0, math.pi, 0.0)
    section = SphereGrid(
        n_theta=theta_signed.size,
        n_phi=1,
        thetas=thetas,
        phis=phis,
        weights=np.ones(theta_signed.size),
    )
    return theta_signed, section


def _raw_target_section(config: DesignConfig, thetas: np.ndarray) -> np.ndarray:
    if config.target_kind == "cone":
        inside = (thetas >= config.theta_lo) & (thetas <= config.theta_hi)
        return np.where(inside, config.amplitude, 0.0)
    return np.full(thetas.shape, math.nan)


def _contour_section(q_field: PotentialField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, z, |q|) on the two half-planes phi ~ 0 and phi ~ pi."""
    g = q_field.grid
    phi_axis = np.unique(g.phis)
    near0 = phi_axis[np.argmin(np.minimum(phi_axis, 2.0 * math.pi - phi_axis))]
    near_pi = phi_axis[np.argmin(np.abs(phi_axis - math.pi))]
    xs, zs, qs = [], [], []
    for phi_val, sign in ((near0, 1.0), (near_pi, -1.0)):
        mask = g.phis == phi_val
        xs.append(sign * g.radii[mask] * np.sin(g.thetas[mask]))
        zs.append(g.radii[mask] * np.cos(g.thetas[mask]))
        qs.append(np.abs(q_field.q_values[mask]))
    return np.concatenate(xs), np.concatenate(zs), np.concatenate(qs)


def run_verify(
    bundle: DesignBundle | str | Path,
    *,
    lock: bool = True,
) -> dict:
    """Forward-solve the stored potential and compare against the target."""
    if not isinstance(bundle, DesignBundle):
        bundle = load_bundle(bundle)
    config = bundle.config
    out_dir = bundle.directory
    manifest = bundle.manifest
    guard = output_lock(out_dir) if lock else contextlib.nullcontext()
    with guard:
        try:
            report = _verify_into(bundle, config, out_dir, manifest)
        except WaveFocusError as exc:
            manifest.status = "failed"
            manifest.error = f"{type(exc).__name__}: {exc}"
            manifest.save()
            raise
        return report


def _verify_into(
    bundle: DesignBundle, config: DesignConfig, out_dir: Path, manifest: Manifest
) -> dict:
    k = config.wavenumber
    kernel = KernelSpec(k, tuple(config.incident_direction))
    grid = bundle.q_field.grid
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    total = ls_solve(
        bundle.q_field,
        kernel,
        tol=config.solver_tolerance,
        max_iterations=config.solver_max_iterations,
        axisymmetric=config.axisymmetric,
    )
    timings["forward_solve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sphere = SphereGrid.gauss_uniform(*config.resolved_sphere_grid())
    attained = scattering_amplitude(bundle.q_field, total, kernel, sphere)
    target_on_sphere = synthesize(bundle.target, sphere)

    h_nodes = evaluate_h(bundle.h, grid.cartesian())
    source = bundle.q_field.q_values * total.u_values
    solver_slack = float(
        np.sqrt(np.sum(grid.weights * np.abs(source - h_nodes) ** 2))
    )
    epsilon_h = float(bundle.design_report.get("epsilon_h", math.nan))
    if math.isnan(epsilon_h):
        epsilon_h = _coeff_l2(bundle.target, predicted_amplitude(bundle.h, k))
    report_misfit = misfit(
        target_on_sphere,
        attained,
        epsilon_h=epsilon_h,
        solver_slack=solver_slack,
        domain_volume=grid.volume,
    )
    amplitude_norm = attained.norm()
    if config.target_kind == "cone" and amplitude_norm > 0.0:
        focusing = focusing_metrics(attained, config.theta_lo, config.theta_hi)
        focusing_payload = {
            "in_cone_fraction": focusing.in_cone_fraction,
            "isotropic_fraction": focusing.isotropic_fraction,
            "peak_theta": focusing.peak_theta,
            "peak_phi": focusing.peak_phi,
            "total_power": focusing.total_power,
        }
    else:
        focusing_payload = None
    timings["amplitude"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    theta_signed, section = _section_directions(PATTERN_SECTION_POINTS)
    attained_section = amplitude_from_source(source, grid, k, section)
    band_section = synthesize(bundle.target, section)
    raw_section = _raw_target_section(config, section.thetas)
    write_pattern_csv(
        out_dir / "pattern_section.csv",
        theta_signed,
        raw_section,
        np.abs(band_section.values),
        np.abs(attained_section.values),
    )
    x, z, abs_q = _contour_section(bundle.q_field)
    write_contour_csv(out_dir / "contour_section.csv", x, z, abs_q)
    render_pattern_figure(
        out_dir / "pattern.svg",
        theta_signed,
        np.abs(band_section.values),
        np.abs(attained_section.values),
    )
    render_contour_figure(out_dir / "contour.svg", x, z, abs_q, config.radius)
    timings["sections"] = time.perf_counter() - t0

    bound = report_misfit.bound
    verification = {
        "l2_misfit": report_misfit.l2_misfit,
        "relative_misfit": report_misfit.relative_misfit,
        "target_norm": report_misfit.target_norm,
        "amplitude_norm": amplitude_norm,
        "bound": {
            "epsilon_h": bound.epsilon_h,
            "solver_slack": bound.solver_slack,
            "domain_volume": bound.domain_volume,
            "cs_bound": bound.cs_bound,
            "cs_satisfied": bound.cs_satisfied,
            "theory_bound": bound.theory_bound,
            "theory_satisfied": bound.theory_satisfied,
        },
        "solver": {
            "method": total.method,
            "residual": total.residual,
            "iterations": total.iterations,
            "retried": total.retried,
            "residual_history": list(total.residual_history),
        },
        "focusing": focusing_payload,
    }
    write_sphere_field_csv(out_dir / "amplitude_samples.csv", attained)
    write_json(out_dir / "verification_report.json", verification)
    for name in (
        "amplitude_samples.csv",
        "verification_report.json",
        "pattern_section.csv",
        "contour_section.csv",
        "pattern.svg",
        "contour.svg",
    ):
        manifest.record_file(out_dir / name)
    manifest.record_stage("verify")
    manifest.timings.update({f"verify.{k_}": v_ for k_, v_ in timings.items()})
    manifest.status = "ok"
    manifest.save()
    return verification


def run_sweep(
    config: DesignConfig,
    clip_bounds: list[float],
    out_dir: str | Path,
) -> list[dict]:
    """Design + verify per clip bound; failures become rows, not aborts."""
    if len(clip_bounds) < 2:
        raise ConfigError("sweep needs at least two clip bounds")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    with output_lock(out_dir):
        manifest = Manifest(out_dir, config.echo(), config.deterministic)
        for index, bound in enumerate(clip_bounds):
            sub = out_dir / f"clip_{index:02d}"
            row: dict = {"clip_bound": bound, "status": "ok", "message": ""}
            try:
                sub_config = config_overrides(
                    config, clip_bound=float(bound), output_directory=str(sub)
                )
                bundle = run_design(sub_config, sub, lock=False)
                row["max_abs_q"] = bundle.q_field.max_abs_q
                verification = run_verify(bundle, lock=False)
                row["l2_misfit"] = verification["l2_misfit"]
                row["relative_misfit"] = verification["relative_misfit"]
                focusing = verification["focusing"]
                row["in_cone_fraction"] = (
                    None if focusing is None else focusing["in_cone_fraction"]
                )
            except WaveFocusError as exc:
                row["status"] = "error"
                row["message"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
        write_sweep_csv(out_dir / "sweep.csv", rows)
        manifest.record_file(out_dir / "sweep.csv")
        manifest.record_stage("sweep")
        manifest.status = "ok"
        manifest.save()
    return rows


def run_analyze(
    samples_csv: str | Path, band_limit: int, output_json: str | Path | None
) -> dict:
    """Expand a sampled sphere field into coefficients; report per-degree energy."""
    grid = read_sphere_field_csv(Path(samples_csv))
    coeffs = analyze(grid, band_limit)
    per_degree = []
    for l in range(band_limit + 1):
        energy = sum(
            abs(coeffs.get(l, m)) ** 2 for m in range(-l, l + 1)
        )
        per_degree.append(energy)
    field_norm = grid.norm()
    captured = math.sqrt(sum(per_degree))
    summary = {
        "band_limit": band_limit,
        "grid": [grid.n_theta, grid.n_phi],
        "field_norm": field_norm,
        "captured_norm": captured,
        "residual_norm": math.sqrt(max(0.0, field_norm**2 - captured**2)),
        "degree_energy": per_degree,
    }
    if output_json is not None:
        write_coefficients_json(Path(output_json), coeffs)
    return summary


def run_plot(directory: str | Path, figure: str) -> Path:
    """Re-render one figure from the stored cross-section CSV."""
    directory = Path(directory)
    manifest = Manifest.load(directory)
    config = config_from_echo(manifest.config_echo)
    with output_lock(directory):
        if figure == "pattern":
            data = read_pattern_csv(directory / "pattern_section.csv")
            path = render_pattern_figure(
                directory / "pattern.svg", data[:, 0], data[:, 2], data[:, 3]
            )
        elif figure == "contour":
            csv_path = directory / "contour_section.csv"
            if csv_path.is_file():
                data = read_contour_csv(csv_path)
                x, z, abs_q = data[:, 0], data[:, 1], data[:, 2]
            else:
                bundle = load_bundle(directory)
                x, z, abs_q = _contour_section(bundle.q_field)
                write_contour_csv(csv_path, x, z, abs_q)
                manifest.record_file(csv_path)
            path = render_contour_figure(
                directory / "contour.svg", x, z, abs_q, config.radius
            )
        else:
            raise ConfigError(f"unknown figure {figure!r} (pattern or contour)")
        manifest.record_file(path)
        manifest.record_stage("plot")
        manifest.save()
    return path
