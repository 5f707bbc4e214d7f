"""Snapshot images of agent states.

Grid graphs are drawn as ``rows x cols`` cell images in the column-major
vertex order used by :func:`lqpattern.graphs.grid_graph`: vertex ``v``
sits at row ``(v-1) % rows``, column ``(v-1) // rows``. Positive states
are black. Other graphs get a plain-text sign list.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from numpy.typing import ArrayLike, NDArray  # noqa: E402

from .graphs import Graph  # noqa: E402

__all__ = ["state_to_grid", "sign_image", "render_snapshot", "CELL_PIXELS", "NO_PATTERN_TOL"]

CELL_PIXELS = 24
NO_PATTERN_TOL = 1e-9
MIDTONE = 0.5


def state_to_grid(x: ArrayLike, rows: int, cols: int) -> NDArray[np.float64]:
    """Reshape a state vector into its ``rows x cols`` grid (column-major)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != rows * cols:
        raise ValueError(f"state of length {x.size} does not fill a {rows}x{cols} grid")
    return x.reshape((rows, cols), order="F")


def _is_blank(x: NDArray, zero_tol: float) -> bool:
    return float(np.max(np.abs(x), initial=0.0)) <= zero_tol


def sign_image(x: ArrayLike, rows: int, cols: int, zero_tol: float = NO_PATTERN_TOL,
               cell: int = CELL_PIXELS) -> NDArray[np.float64]:
    """Grey-level image: 0 (black) for positive, 1 (white) for non-positive cells.

    A state within ``zero_tol`` of the origin gives a uniform midtone.
    """
    grid = state_to_grid(x, rows, cols)
    if _is_blank(grid, zero_tol):
        img = np.full(grid.shape, MIDTONE)
    else:
        img = np.where(grid > 0, 0.0, 1.0)
    return np.kron(img, np.ones((cell, cell)))


def render_snapshot(
    x: ArrayLike,
    graph: Graph,
    out: str | Path,
    zero_tol: float = NO_PATTERN_TOL,
) -> dict[str, Path]:
    """Write sign and magnitude images (or a sign list) with path prefix ``out``.

    Returns the written files keyed by ``"sign"``, ``"magnitude"`` or ``"text"``.
    """
    x = np.asarray(x, dtype=float).ravel()
    out = Path(out)
    if x.size != graph.n:
        raise ValueError(f"state of length {x.size} for a graph with {graph.n} vertices")
    blank = _is_blank(x, zero_tol)

    if graph.shape is None:
        path = out.with_name(out.name + "_signs.txt")
        lines = [f"x{v}\t{'+' if x[v - 1] > 0 else '-'}\t{x[v - 1]:.6g}" for v in range(1, graph.n + 1)]
        if blank:
            lines.insert(0, "# no pattern: state is at the origin")
        path.write_text("\n".join(lines) + "\n")
        return {"text": path}

    rows, cols = graph.shape
    sign_path = out.with_name(out.name + "_sign.png")
    plt.imsave(sign_path, sign_image(x, rows, cols, zero_tol), cmap="gray", vmin=0.0, vmax=1.0)

    mag_path = out.with_name(out.name + "_magnitude.png")
    grid = state_to_grid(x, rows, cols)
    fig, ax = plt.subplots(figsize=(1.0 + 0.5 * cols, 0.8 + 0.5 * rows), dpi=100)
    try:
        if blank:
            ax.imshow(np.full(grid.shape, MIDTONE), cmap="gray", vmin=0.0, vmax=1.0)
            ax.text(0.5, 0.5, "no pattern", transform=ax.transAxes, ha="center", va="center")
        else:
            lim = float(np.max(np.abs(grid)))
            im = ax.imshow(grid, cmap="RdBu_r", vmin=-lim, vmax=lim)
            fig.colorbar(im, ax=ax, label="x")
        ax.set_xticks(range(cols))
        ax.set_yticks(range(rows))
        ax.set_xticklabels(range(1, cols + 1))
        ax.set_yticklabels(range(1, rows + 1))
        # fixed metadata keeps the files byte-identical across runs
        fig.savefig(mag_path, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return {"sign": sign_path, "magnitude": mag_path}
