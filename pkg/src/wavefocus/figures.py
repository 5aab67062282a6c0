"""Static SVG figures for the report path.

Two plots are produced: the polar radiation-pattern section through the
incident axis, and the |q| contour map on the xz cross-section.  Both are
rendered through the Agg backend with a pinned hash salt and no embedded
date so deterministic runs emit byte-identical SVG files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "wavefocus"

_SAVE_KWARGS = {"format": "svg", "metadata": {"Date": None}, "bbox_inches": "tight"}


def render_pattern_figure(
    path: Path,
    theta_signed: np.ndarray,
    target_band: np.ndarray,
    attained_abs: np.ndarray,
) -> Path:
    """Polar section |A(theta)| (solid) against the band target (dotted).

    ``theta_signed`` runs over [-pi, pi]; positive values are the phi = 0
    half-plane, negative values phi = pi, so the incident direction points
    at the top of the dial.
    """
    fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(5.0, 5.0))
    ax.set_theta_zero_location("N")
    ax.set_theta_direction(-1)
    ax.plot(
        theta_signed,
        np.abs(target_band),
        linestyle=":",
        color="0.35",
        linewidth=1.4,
        label="band-limited target",
    )
    ax.plot(
        theta_signed,
        attained_abs,
        linestyle="-",
        color="black",
        linewidth=1.2,
        label="attained |A|",
    )
    ax.set_rlabel_position(135.0)
    ax.tick_params(labelsize=8)
    ax.legend(loc="lower left", bbox_to_anchor=(-0.12, -0.12), fontsize=8, frameon=False)
    ax.set_title("far-field section through the incident axis", fontsize=10)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return Path(path)


def render_contour_figure(
    path: Path,
    x: np.ndarray,
    z: np.ndarray,
    abs_q: np.ndarray,
    radius: float,
) -> Path:
    """Filled |q| contours on the xz section; darker means larger."""
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    tri = ax.tricontourf(x, z, abs_q, levels=14, cmap="Greys")
    circle = plt.Circle((0.0, 0.0), radius, fill=False, color="black", linewidth=0.8)
    ax.add_patch(circle)
    ax.set_xlim(-1.05 * radius, 1.05 * radius)
    ax.set_ylim(-1.05 * radius, 1.05 * radius)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.set_title("|q| on the xz cross-section", fontsize=10)
    fig.colorbar(tri, ax=ax, shrink=0.9)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return Path(path)
