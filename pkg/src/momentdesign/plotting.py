"""SVG figures of a design: the set, the atoms and the Christoffel level set."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .christoffel import levelset_samples  # noqa: E402
from .design import Design  # noqa: E402
from .errors import UnsupportedDimension  # noqa: E402
from .moments import MomentSequence  # noqa: E402
from .semialg import SemiAlgebraicSet  # noqa: E402

# fixed ids and no timestamp: identical inputs give identical files
matplotlib.rcParams["svg.hashsalt"] = "momentdesign"


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_design(X: SemiAlgebraicSet, y: MomentSequence, d: int, design: Optional[Design], path,
                level: float, reduction=None, points: int = 401) -> Path:
    """Christoffel polynomial against its contact level (n = 1) or its level curve over X (n = 2)."""
    if X.n > 2:
        raise UnsupportedDimension("plots are drawn for n <= 2; use the atom CSV for n = 3")
    table = levelset_samples(y, d, X, points, reduction)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    if X.n == 1:
        x, val, inside = table[:, 0], table[:, 1], table[:, 2] > 0
        ax.plot(x[inside], val[inside], color="tab:blue", lw=1.2, label=f"Christoffel polynomial, degree {2 * d}")
        ax.axhline(level, color="0.4", lw=0.8, ls="--", label=f"level {level:g}")
        if design is not None:
            ax.plot(design.atoms[:, 0], np.full(len(design), level), "o", color="tab:red", ms=5, label="atoms")
        ax.set_xlabel("x")
        ax.set_ylim(0, 1.15 * max(level, float(val[inside].max())))
    else:
        k = points
        xs = table[:, 0].reshape(k, k)
        ys = table[:, 1].reshape(k, k)
        val = table[:, 2].reshape(k, k)
        inside = table[:, 3].reshape(k, k)
        ax.contour(xs, ys, inside, levels=[0.5], colors="black", linewidths=1.6)
        ax.contour(xs, ys, val, levels=[level], colors="tab:blue", linewidths=0.8)
        if design is not None:
            ax.scatter(design.atoms[:, 0], design.atoms[:, 1], s=12 + 300 * design.weights,
                       color="tab:red", zorder=3, label="atoms (area ~ weight)")
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    ax.set_title(f"{X.name or 'design space'}, d = {d}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    return Path(path)
