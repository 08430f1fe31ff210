"""Figure rendering for aggregates, coverage curves, and density profiles.

Everything is written as SVG with a pinned hash salt and no embedded date,
so rendering the same data twice gives byte-identical files and the run
manifest digests stay meaningful.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import InputError  # noqa: E402
from .idla import Aggregate, ShapeResult  # noqa: E402
from .lattice import DensityProfile  # noqa: E402

plt.rcParams["svg.hashsalt"] = "idlalab"

_SVG_META = {"Date": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def _paint_plane(ax, pts: np.ndarray, order: np.ndarray, lim: float):
    """Unit squares at integer points, colored by settle order."""
    if pts.shape[0]:
        side = int(2 * lim + 1)
        img = np.full((side, side), np.nan)
        img[pts[:, 1] + int(lim), pts[:, 0] + int(lim)] = order
        cmap = plt.get_cmap("viridis").copy()
        cmap.set_bad(alpha=0.0)
        ax.imshow(
            img,
            origin="lower",
            extent=(-lim - 0.5, lim + 0.5, -lim - 0.5, lim + 0.5),
            cmap=cmap,
            interpolation="nearest",
        )
    ax.set_xlim(-lim - 0.5, lim + 0.5)
    ax.set_ylim(-lim - 0.5, lim + 0.5)
    ax.set_aspect("equal")


def _draw_rings(ax, rings, center=(0.0, 0.0)):
    for r in rings:
        ax.add_patch(
            plt.Circle(center, r, fill=False, color="crimson", linewidth=1.0)
        )


def render_aggregate(aggregate: Aggregate, path, rings=()) -> str:
    """Draw the occupied set, colored by settle order, origin marked.

    Two dimensions give a single panel; three give the three axis-aligned
    coordinate planes through the origin.  Higher dimensions have no
    faithful picture and are refused.
    """
    g = aggregate.graph
    coords = g.coords[aggregate.settle].astype(np.int64)
    origin = g.coords[aggregate.origin].astype(np.int64)
    rel = coords - origin
    order = np.arange(aggregate.n, dtype=np.float64)
    lim = float(max(1, np.abs(rel).max() if aggregate.n else 1, *rings) + 2)

    if g.dim == 2:
        fig, ax = plt.subplots(figsize=(6.0, 6.0))
        _paint_plane(ax, rel, order, lim)
        _draw_rings(ax, rings)
        ax.plot([0.0], [0.0], marker="+", color="black", markersize=8.0)
        ax.set_title(f"{aggregate.n} particles")
        return _save(fig, path)

    if g.dim == 3:
        fig, axes = plt.subplots(1, 3, figsize=(15.0, 5.0))
        labels = ("yz", "xz", "xy")
        for a, ax in enumerate(axes):
            on_plane = rel[:, a] == 0
            keep = [i for i in range(3) if i != a]
            _paint_plane(ax, rel[on_plane][:, keep], order[on_plane], lim)
            _draw_rings(ax, rings)
            ax.plot([0.0], [0.0], marker="+", color="black", markersize=8.0)
            ax.set_title(f"{labels[a]} plane")
        fig.suptitle(f"{aggregate.n} particles, axis planes through the origin")
        return _save(fig, path)

    raise InputError(f"no rendering for dimension {g.dim}")


def render_coverage(result: ShapeResult, path, level: float = 0.99) -> str:
    """Coverage of the shrunken ball per run, with per-radius means."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    by_r = result.by_radius()
    for R, runs in sorted(by_r.items()):
        ys = [r.coverage for r in runs]
        ax.plot([R] * len(ys), ys, linestyle="", marker="o",
                markersize=3.0, alpha=0.5, color="steelblue")
    radii = sorted(by_r)
    means = [float(np.mean([r.coverage for r in by_r[R]])) for R in radii]
    ax.plot(radii, means, color="black", marker="s", label="mean")
    ax.axhline(level, color="crimson", linewidth=0.8, linestyle="--")
    ax.set_xlabel("ball radius R")
    ax.set_ylabel(f"coverage of the (1 - {result.eps:g}) R ball")
    ax.set_ylim(0.0, 1.02)
    ax.legend()
    return _save(fig, path)


def render_density(profile: DensityProfile, path) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(profile.radii, profile.densities, marker="o", markersize=3.0)
    ax.set_xlabel("radius")
    ax.set_ylabel(f"vertex density ({profile.kind} normalization)")
    ax.set_ylim(0.0, 1.05)
    return _save(fig, path)
