"""Run configuration: INI files parsed into one validated dataclass.

The format is deliberately strict.  Unknown sections or keys are hard
errors so a typo in ``clip_bound`` cannot silently fall back to a default,
and the clip bound itself has no default at all: every design must state
its regularization level.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError

_KNOWN_KEYS: dict[str, set[str]] = {
    "design": {"wavenumber", "incident_direction", "band_limit", "clip_bound", "radius"},
    "target": {"kind", "theta_lo", "theta_hi", "amplitude", "coefficient_file"},
    "grids": {"ball", "sphere", "target_sphere"},
    "safeguards": {
        "denominator_floor",
        "perturbation_scale",
        "perturbation_seed",
        "perturbation_attempts",
    },
    "particles": {
        "particle_radius",
        "capacitance",
        "background_index",
        "ka_threshold",
        "spacing_threshold",
    },
    "solver": {"tolerance", "max_iterations", "axisymmetric"},
    "output": {"directory", "deterministic"},
}


def parse_number(text: str) -> float:
    """Float parser that accepts a trailing ``pi`` multiplier.

    ``0.25pi`` and ``pi`` are accepted alongside plain decimals, because
    cone bounds are naturally stated as multiples of pi and decimal
    expansions of them invite copy-paste drift.
    """
    token = text.strip().lower().replace(" ", "")
    if token.endswith("pi"):
        head = token[:-2]
        factor = 1.0 if head in ("", "+", "-") else None
        if head == "-":
            factor = -1.0
        if factor is None:
            try:
                factor = float(head)
            except ValueError:
                raise ConfigError(f"cannot parse angle {text!r}") from None
        return factor * math.pi
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"cannot parse number {text!r}") from None


def _parse_bool(text: str, key: str) -> bool:
    token = text.strip().lower()
    if token in ("1", "true", "yes", "on"):
        return True
    if token in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {text!r}")


def _parse_ints(text: str, key: str, count: int) -> tuple[int, ...]:
    parts = text.replace(",", " ").split()
    if len(parts) != count:
        raise ConfigError(f"{key} needs {count} integers, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key} needs integers, got {text!r}") from None


@dataclass(frozen=True)
class DesignConfig:
    """Validated pipeline settings, one instance per run."""

    wavenumber: float = 1.0
    incident_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    band_limit: int = 6
    clip_bound: float = math.nan  # required; nan marks "not provided"
    radius: float = 1.0

    target_kind: str = "cone"
    theta_lo: float = 0.0
    theta_hi: float = math.pi / 4.0
    amplitude: float = 1.0
    coefficient_file: str | None = None

    ball_grid: tuple[int, int, int] = (24, 24, 48)
    sphere_grid: tuple[int, int] | None = None  # None: (2L + 2, 4L + 4)
    target_sphere_grid: tuple[int, int] | None = None  # None: (4L + 4, 8L + 8)

    denominator_floor: float = 1e-3
    perturbation_scale: float = 0.05  # budget as a fraction of ||h||
    perturbation_seed: int = 0
    perturbation_attempts: int = 64

    particle_radius: float = 0.01
    capacitance: float | None = None  # None: soft-sphere value 4 pi a
    background_index: float = 1.0
    ka_threshold: float = 0.1
    spacing_threshold: float = 0.1

    solver_tolerance: float = 1e-8
    solver_max_iterations: int = 500
    axisymmetric: bool | None = None  # None: detect from the potential

    output_directory: str | None = None
    deterministic: bool = True

    source_path: str | None = None

    def __post_init__(self) -> None:
        if not (self.wavenumber > 0.0):
            raise ConfigError(f"wavenumber must be positive, got {self.wavenumber}")
        if self.band_limit < 0:
            raise ConfigError(f"band_limit must be >= 0, got {self.band_limit}")
        if math.isnan(self.clip_bound):
            raise ConfigError("clip_bound is required and has no default")
        if not (self.clip_bound > 0.0):
            raise ConfigError(f"clip_bound must be positive, got {self.clip_bound}")
        if not (self.radius > 0.0):
            raise ConfigError(f"radius must be positive, got {self.radius}")
        direction = np.asarray(self.incident_direction, dtype=float)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
            raise ConfigError(
                f"incident_direction must be a unit vector, |.| = {np.linalg.norm(direction)!r}"
            )
        if self.target_kind not in ("cone", "coefficients", "zero"):
            raise ConfigError(f"unknown target kind {self.target_kind!r}")
        if self.target_kind == "cone":
            if not (0.0 <= self.theta_lo < self.theta_hi <= math.pi):
                raise ConfigError(
                    f"cone bounds must satisfy 0 <= lo < hi <= pi, got "
                    f"[{self.theta_lo}, {self.theta_hi}]"
                )
        if self.target_kind == "coefficients" and not self.coefficient_file:
            raise ConfigError("coefficient targets need coefficient_file")
        if any(n < 2 for n in self.ball_grid):
            raise ConfigError(f"ball grid axes must be >= 2, got {self.ball_grid}")
        if not (self.denominator_floor >= 0.0):
            raise ConfigError(
                f"denominator_floor must be nonnegative, got {self.denominator_floor}"
            )
        if not (self.perturbation_scale > 0.0):
            raise ConfigError(
                f"perturbation_scale must be positive, got {self.perturbation_scale}"
            )
        if self.perturbation_attempts < 1:
            raise ConfigError(
                f"perturbation_attempts must be >= 1, got {self.perturbation_attempts}"
            )
        if not (self.particle_radius > 0.0):
            raise ConfigError(
                f"particle_radius must be positive, got {self.particle_radius}"
            )
        if self.capacitance is not None and not (self.capacitance > 0.0):
            raise ConfigError(f"capacitance must be positive, got {self.capacitance}")
        if not (self.solver_tolerance > 0.0):
            raise ConfigError(
                f"solver tolerance must be positive, got {self.solver_tolerance}"
            )
        if self.solver_max_iterations < 1:
            raise ConfigError(
                f"solver max_iterations must be >= 1, got {self.solver_max_iterations}"
            )

    @property
    def alpha(self) -> np.ndarray:
        return np.asarray(self.incident_direction, dtype=float)

    def resolved_sphere_grid(self) -> tuple[int, int]:
        if self.sphere_grid is not None:
            return self.sphere_grid
        return (2 * self.band_limit + 2, 4 * self.band_limit + 4)

    def resolved_target_sphere_grid(self) -> tuple[int, int]:
        """Analysis grid for the raw target.

        Cone indicators are not band limited, so their analysis runs at
        twice the pipeline resolution to keep aliasing out of the retained
        coefficients.
        """
        if self.target_sphere_grid is not None:
            return self.target_sphere_grid
        return (4 * self.band_limit + 4, 8 * self.band_limit + 8)

    def echo(self) -> dict:
        """JSON-ready view of every setting, defaults resolved."""
        return {
            "wavenumber": self.wavenumber,
            "incident_direction": list(self.incident_direction),
            "band_limit": self.band_limit,
            "clip_bound": self.clip_bound,
            "radius": self.radius,
            "target": {
                "kind": self.target_kind,
                "theta_lo": self.theta_lo,
                "theta_hi": self.theta_hi,
                "amplitude": self.amplitude,
                "coefficient_file": self.coefficient_file,
            },
            "grids": {
                "ball": list(self.ball_grid),
                "sphere": list(self.resolved_sphere_grid()),
                "target_sphere": list(self.resolved_target_sphere_grid()),
            },
            "safeguards": {
                "denominator_floor": self.denominator_floor,
                "perturbation_scale": self.perturbation_scale,
                "perturbation_seed": self.perturbation_seed,
                "perturbation_attempts": self.perturbation_attempts,
            },
            "particles": {
                "particle_radius": self.particle_radius,
                "capacitance": self.capacitance,
                "background_index": self.background_index,
                "ka_threshold": self.ka_threshold,
                "spacing_threshold": self.spacing_threshold,
            },
            "solver": {
                "tolerance": self.solver_tolerance,
                "max_iterations": self.solver_max_iterations,
                "axisymmetric": self.axisymmetric,
            },
            "output": {
                "directory": self.output_directory,
                "deterministic": self.deterministic,
            },
        }


def _section(parser: configparser.ConfigParser, name: str) -> dict[str, str]:
    if not parser.has_section(name):
        return {}
    return dict(parser.items(name))


def load_config(path: str | Path) -> DesignConfig:
    """Parse and validate an INI config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    kwargs: dict = {"source_path": str(path)}

    design = _section(parser, "design")
    if "wavenumber" in design:
        kwargs["wavenumber"] = parse_number(design["wavenumber"])
    if "incident_direction" in design:
        parts = design["incident_direction"].replace(",", " ").split()
        if len(parts) != 3:
            raise ConfigError(
                f"incident_direction needs 3 components, got {design['incident_direction']!r}"
            )
        kwargs["incident_direction"] = tuple(parse_number(p) for p in parts)
    if "band_limit" in design:
        kwargs["band_limit"] = _parse_ints(design["band_limit"], "band_limit", 1)[0]
    if "clip_bound" in design:
        kwargs["clip_bound"] = parse_number(design["clip_bound"])
    if "radius" in design:
        kwargs["radius"] = parse_number(design["radius"])

    target = _section(parser, "target")
    if "kind" in target:
        kwargs["target_kind"] = target["kind"].strip().lower()
    if "theta_lo" in target:
        kwargs["theta_lo"] = parse_number(target["theta_lo"])
    if "theta_hi" in target:
        kwargs["theta_hi"] = parse_number(target["theta_hi"])
    if "amplitude" in target:
        kwargs["amplitude"] = parse_number(target["amplitude"])
    if "coefficient_file" in target:
        raw = target["coefficient_file"].strip()
        # relative paths resolve against the config file, not the cwd
        kwargs["coefficient_file"] = str((path.parent / raw).resolve())

    grids = _section(parser, "grids")
    if "ball" in grids:
        kwargs["ball_grid"] = _parse_ints(grids["ball"], "ball", 3)
    if "sphere" in grids:
        kwargs["sphere_grid"] = _parse_ints(grids["sphere"], "sphere", 2)
    if "target_sphere" in grids:
        kwargs["target_sphere_grid"] = _parse_ints(grids["target_sphere"], "target_sphere", 2)

    safeguards = _section(parser, "safeguards")
    if "denominator_floor" in safeguards:
        kwargs["denominator_floor"] = parse_number(safeguards["denominator_floor"])
    if "perturbation_scale" in safeguards:
        kwargs["perturbation_scale"] = parse_number(safeguards["perturbation_scale"])
    if "perturbation_seed" in safeguards:
        kwargs["perturbation_seed"] = _parse_ints(
            safeguards["perturbation_seed"], "perturbation_seed", 1
        )[0]
    if "perturbation_attempts" in safeguards:
        kwargs["perturbation_attempts"] = _parse_ints(
            safeguards["perturbation_attempts"], "perturbation_attempts", 1
        )[0]

    particles = _section(parser, "particles")
    if "particle_radius" in particles:
        kwargs["particle_radius"] = parse_number(particles["particle_radius"])
    if "capacitance" in particles:
        kwargs["capacitance"] = parse_number(particles["capacitance"])
    if "background_index" in particles:
        kwargs["background_index"] = parse_number(particles["background_index"])
    if "ka_threshold" in particles:
        kwargs["ka_threshold"] = parse_number(particles["ka_threshold"])
    if "spacing_threshold" in particles:
        kwargs["spacing_threshold"] = parse_number(particles["spacing_threshold"])

    solver = _section(parser, "solver")
    if "tolerance" in solver:
        kwargs["solver_tolerance"] = parse_number(solver["tolerance"])
    if "max_iterations" in solver:
        kwargs["solver_max_iterations"] = _parse_ints(
            solver["max_iterations"], "max_iterations", 1
        )[0]
    if "axisymmetric" in solver:
        token = solver["axisymmetric"].strip().lower()
        if token == "auto":
            kwargs["axisymmetric"] = None
        else:
            kwargs["axisymmetric"] = _parse_bool(token, "axisymmetric")

    output = _section(parser, "output")
    if "directory" in output:
        raw = output["directory"].strip()
        kwargs["output_directory"] = str((path.parent / raw).resolve())
    if "deterministic" in output:
        kwargs["deterministic"] = _parse_bool(output["deterministic"], "deterministic")

    return DesignConfig(**kwargs)


def config_overrides(config: DesignConfig, **changes) -> DesignConfig:
    """Copy with validated field changes (used by the sweep driver)."""
    valid = {f.name for f in fields(DesignConfig)}
    for name in changes:
        if name not in valid:
            raise ConfigError(f"unknown config field {name!r}")
    current = {f.name: getattr(config, f.name) for f in fields(DesignConfig)}
    current.update(changes)
    return DesignConfig(**current)
