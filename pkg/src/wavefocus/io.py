"""File formats: delimited field dumps, JSON reports, and the run manifest.

Every numeric cell is written with ``repr(float(x))`` so a reread float
compares bit-equal to the one in memory; determinism tests diff these
files byte for byte.  All JSON is emitted with sorted keys and a trailing
newline for the same reason.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, OutputLockError
from .potential import BallGrid, PotentialField
from .sphergrid import ShCoefficients, SphereGrid
from .synthesis import HExpansion

LOCK_NAME = ".wavefocus.lock"
MANIFEST_NAME = "manifest.json"


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_rows(path: Path, expected_header: list[str]) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected_header:
            raise ConfigError(
                f"{path} has header {header}, expected {expected_header}"
            )
        try:
            data = [[float(cell) for cell in row] for row in reader if row]
        except ValueError as exc:
            raise ConfigError(f"{path} has a non-numeric cell: {exc}") from None
    if not data:
        raise ConfigError(f"{path} contains no data rows")
    return np.asarray(data, dtype=float)


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _jsonable(value):
    """Recursive conversion of numpy scalars/arrays for json.dump."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, float) and (np.isnan(value) or np.isinf(value)):
        return None  # JSON has no nan/inf; absent beats unparseable
    return value


# ---------------------------------------------------------------------------
# sphere fields and coefficient tables


SPHERE_FIELD_HEADER = ["theta", "phi", "re", "im"]


def write_sphere_field_csv(path: Path, grid: SphereGrid) -> None:
    if grid.values is None:
        raise ValueError("grid carries no values")
    rows = (
        [_fmt(t), _fmt(p), _fmt(v.real), _fmt(v.imag)]
        for t, p, v in zip(grid.thetas, grid.phis, grid.values)
    )
    _write_rows(path, SPHERE_FIELD_HEADER, rows)


def read_sphere_field_csv(path: Path) -> SphereGrid:
    """Rebuild a valued grid from a sampler dump.

    The (theta, phi) columns must form the product rule written by
    :func:`write_sphere_field_csv`; quadrature weights are recovered by
    matching the theta axis against the Gauss rule of the same size.
    """
    data = _read_rows(Path(path), SPHERE_FIELD_HEADER)
    thetas, phis = data[:, 0], data[:, 1]
    theta_axis = np.unique(thetas)
    phi_axis = np.unique(phis)
    n_theta, n_phi = theta_axis.size, phi_axis.size
    if n_theta * n_phi != data.shape[0]:
        raise ConfigError(
            f"{path}: {data.shape[0]} rows do not form a "
            f"{n_theta} x {n_phi} product grid"
        )
    grid = SphereGrid.gauss_uniform(n_theta, n_phi)
    order = np.lexsort((phis, thetas))
    ref_order = np.lexsort((grid.phis, grid.thetas))
    if not (
        np.allclose(thetas[order], grid.thetas[ref_order], atol=1e-9)
        and np.allclose(phis[order], grid.phis[ref_order], atol=1e-9)
    ):
        raise ConfigError(
            f"{path}: nodes are not the Gauss x uniform rule of size "
            f"{n_theta} x {n_phi}"
        )
    values = np.empty(grid.n_nodes, dtype=complex)
    values[ref_order] = data[order, 2] + 1j * data[order, 3]
    return grid.with_values(values)


def write_coefficients_json(path: Path, coeffs: ShCoefficients) -> None:
    entries = []
    for l in range(coeffs.band_limit + 1):
        for m in range(-l, l + 1):
            c = coeffs.get(l, m)
            entries.append({"l": l, "m": m, "re": c.real, "im": c.imag})
    write_json(path, {"band_limit": coeffs.band_limit, "entries": entries})


def read_coefficients_json(path: Path) -> ShCoefficients:
    payload = read_json(Path(path))
    try:
        band_limit = int(payload["band_limit"])
        coeffs = ShCoefficients.zeros(band_limit)
        entries = np.array(coeffs.entries)
        for item in payload["entries"]:
            idx = ShCoefficients.flat_index(int(item["l"]), int(item["m"]))
            entries[idx] = float(item["re"]) + 1j * float(item["im"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path} is not a coefficient table: {exc}") from None
    return ShCoefficients(band_limit, entries)


def write_h_json(path: Path, h: HExpansion) -> None:
    entries = []
    mask = h.clip_mask
    for l in range(h.coeffs.band_limit + 1):
        for m in range(-l, l + 1):
            idx = ShCoefficients.flat_index(l, m)
            c = h.coeffs.entries[idx]
            entries.append(
                {
                    "l": l,
                    "m": m,
                    "re": c.real,
                    "im": c.imag,
                    "clipped": bool(mask[idx]) if mask is not None else False,
                }
            )
    write_json(
        path,
        {
            "band_limit": h.coeffs.band_limit,
            "support_radius": h.support_radius,
            "clip_bound": h.clip_bound,
            "clipped": h.clipped,
            "entries": entries,
        },
    )


def read_h_json(path: Path) -> HExpansion:
    payload = read_json(Path(path))
    try:
        band_limit = int(payload["band_limit"])
        entries = np.zeros((band_limit + 1) ** 2, dtype=complex)
        mask = np.zeros((band_limit + 1) ** 2, dtype=bool)
        for item in payload["entries"]:
            idx = ShCoefficients.flat_index(int(item["l"]), int(item["m"]))
            entries[idx] = float(item["re"]) + 1j * float(item["im"])
            mask[idx] = bool(item.get("clipped", False))
        clip_bound = payload.get("clip_bound")
        return HExpansion(
            ShCoefficients(band_limit, entries),
            support_radius=float(payload["support_radius"]),
            clipped=bool(payload.get("clipped", False)),
            clip_bound=None if clip_bound is None else float(clip_bound),
            clip_mask=mask,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path} is not an h expansion: {exc}") from None


# ---------------------------------------------------------------------------
# ball fields


Q_FIELD_HEADER = [
    "r",
    "theta",
    "phi",
    "re_q",
    "im_q",
    "abs_q",
    "re_denom",
    "im_denom",
]


def write_q_csv(path: Path, field_: PotentialField) -> None:
    g = field_.grid
    rows = (
        [
            _fmt(r),
            _fmt(t),
            _fmt(p),
            _fmt(q.real),
            _fmt(q.imag),
            _fmt(abs(q)),
            _fmt(d.real),
            _fmt(d.imag),
        ]
        for r, t, p, q, d in zip(
            g.radii, g.thetas, g.phis, field_.q_values, field_.denom_values
        )
    )
    _write_rows(path, Q_FIELD_HEADER, rows)


def read_q_csv(path: Path, grid: BallGrid, source: HExpansion) -> PotentialField:
    """Reload a potential dump onto a freshly built grid.

    The caller reconstructs the grid from the manifest config; node
    coordinates are cross-checked so a mismatched grid cannot be silently
    reinterpreted.
    """
    data = _read_rows(Path(path), Q_FIELD_HEADER)
    if data.shape[0] != grid.n_nodes:
        raise ConfigError(
            f"{path} holds {data.shape[0]} nodes, grid expects {grid.n_nodes}"
        )
    for col, ref, name in ((0, grid.radii, "r"), (1, grid.thetas, "theta"), (2, grid.phis, "phi")):
        if not np.allclose(data[:, col], ref, atol=1e-12, rtol=0.0):
            raise ConfigError(f"{path}: column {name} does not match the grid nodes")
    q_values = data[:, 3] + 1j * data[:, 4]
    denom = data[:, 6] + 1j * data[:, 7]
    return PotentialField(grid, q_values, denom, source)


DENSITY_HEADER = ["r", "theta", "phi", "density", "negative"]


def write_density_csv(path: Path, density_field) -> None:
    g = density_field.grid
    rows = (
        [_fmt(r), _fmt(t), _fmt(p), _fmt(n), str(int(neg))]
        for r, t, p, n, neg in zip(
            g.radii,
            g.thetas,
            g.phis,
            density_field.n_values,
            density_field.negative_mask,
        )
    )
    _write_rows(path, DENSITY_HEADER, rows)


# ---------------------------------------------------------------------------
# cross-section exports for the two figures


PATTERN_HEADER = ["theta_signed", "target_raw", "target_band", "attained_abs"]


def write_pattern_csv(
    path: Path,
    theta_signed: np.ndarray,
    target_raw: np.ndarray,
    target_band: np.ndarray,
    attained_abs: np.ndarray,
) -> None:
    rows = (
        [_fmt(t), _fmt(a), _fmt(b), _fmt(c)]
        for t, a, b, c in zip(theta_signed, target_raw, target_band, attained_abs)
    )
    _write_rows(path, PATTERN_HEADER, rows)


def read_pattern_csv(path: Path) -> np.ndarray:
    return _read_rows(Path(path), PATTERN_HEADER)


CONTOUR_HEADER = ["x", "z", "abs_q"]


def write_contour_csv(path: Path, x: np.ndarray, z: np.ndarray, abs_q: np.ndarray) -> None:
    rows = ([_fmt(a), _fmt(b), _fmt(c)] for a, b, c in zip(x, z, abs_q))
    _write_rows(path, CONTOUR_HEADER, rows)


def read_contour_csv(path: Path) -> np.ndarray:
    return _read_rows(Path(path), CONTOUR_HEADER)


SWEEP_HEADER = [
    "clip_bound",
    "max_abs_q",
    "l2_misfit",
    "relative_misfit",
    "in_cone_fraction",
    "status",
    "message",
]


def write_sweep_csv(path: Path, rows: list[dict]) -> None:
    def cells(row: dict):
        def num(key):
            value = row.get(key)
            return "" if value is None else _fmt(value)

        return [
            _fmt(row["clip_bound"]),
            num("max_abs_q"),
            num("l2_misfit"),
            num("relative_misfit"),
            num("in_cone_fraction"),
            row["status"],
            row.get("message", ""),
        ]

    _write_rows(path, SWEEP_HEADER, (cells(r) for r in rows))


# ---------------------------------------------------------------------------
# manifest and locking


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return f"sha256:{digest.hexdigest()}"


@dataclass
class Manifest:
    """Run record: config echo, environment, artifact hashes, status.

    File entries are keyed by path relative to the output directory, so
    two runs into different directories produce byte-identical manifests
    when their artifacts match.  Timings are recorded only outside
    deterministic mode for the same reason.
    """

    directory: Path
    config_echo: dict
    deterministic: bool
    status: str = "incomplete"
    error: str | None = None
    stages: list[str] = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    @property
    def path(self) -> Path:
        return self.directory / MANIFEST_NAME

    def record_file(self, path: Path) -> None:
        rel = os.path.relpath(path, self.directory)
        if os.path.isabs(rel) or rel.startswith(".."):
            raise ValueError(f"{path} is outside the output directory")
        self.files[rel] = file_digest(path)

    def record_stage(self, name: str) -> None:
        if name not in self.stages:
            self.stages.append(name)

    def payload(self) -> dict:
        import matplotlib
        import scipy

        from . import __version__

        body = {
            "package": "wavefocus",
            "version": __version__,
            "environment": {
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "matplotlib": matplotlib.__version__,
            },
            "deterministic": self.deterministic,
            "status": self.status,
            "error": self.error,
            "stages": list(self.stages),
            "seeds": dict(self.seeds),
            "config": self.config_echo,
            "files": dict(self.files),
        }
        if not self.deterministic:
            body["timings"] = dict(self.timings)
        return _jsonable(body)

    def save(self) -> None:
        write_json(self.path, self.payload())

    @classmethod
    def load(cls, directory: Path) -> "Manifest":
        directory = Path(directory)
        path = directory / MANIFEST_NAME
        if not path.is_file():
            raise ConfigError(f"no manifest found in {directory}")
        payload = read_json(path)
        try:
            manifest = cls(
                directory=directory,
                config_echo=payload["config"],
                deterministic=bool(payload["deterministic"]),
                status=payload["status"],
                error=payload.get("error"),
                stages=list(payload.get("stages", [])),
                seeds=dict(payload.get("seeds", {})),
                timings=dict(payload.get("timings", {})),
                files=dict(payload.get("files", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path} is not a run manifest: {exc}") from None
        return manifest

    def verify_hashes(self) -> list[str]:
        """Paths whose on-disk content no longer matches the recorded hash."""
        stale = []
        for rel, recorded in sorted(self.files.items()):
            target = self.directory / rel
            if not target.is_file() or file_digest(target) != recorded:
                stale.append(rel)
        return stale


class output_lock:
    """Exclusive marker file guarding an output directory.

    Creation uses O_EXCL so two concurrent invocations cannot both win;
    the loser gets :class:`OutputLockError`.  Stale locks from killed runs
    must be removed by hand, which the error message spells out.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.lock_path = self.directory / LOCK_NAME
        self._fd: int | None = None

    def __enter__(self) -> "output_lock":
        self.directory.mkdir(parents=True, exist_ok=True)
        try:
            self._fd = os.open(
                self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY, 0o644
            )
        except FileExistsError:
            raise OutputLockError(self.lock_path) from None
        os.write(self._fd, f"pid={os.getpid()}\n".encode())
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
        try:
            os.unlink(self.lock_path)
        except FileNotFoundError:
            pass
