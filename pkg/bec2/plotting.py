"""
Optional SVG figures. Cosmetic only; CSV files are the results.
"""

import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

# fixed salt and no date so repeated runs write identical files
_SVG_RC = {"svg.hashsalt": "bec2", "svg.fonttype": "none"}
_SVG_METADATA = {"Date": None}


def _save(fig, path: Path) -> Path:
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path


def line_plot(path: Path, x: Sequence[float], y: Sequence[float], xlabel: str, ylabel: str, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(np.asarray(x), np.asarray(y), linewidth=1.0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def heatmap(
    path: Path,
    grid: np.ndarray,
    x: Sequence[float],
    y: Sequence[float],
    xlabel: str,
    ylabel: str,
    colorbar_label: str,
) -> Path:
    """
    grid[i, j] is plotted at (x[j], y[i]).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    mesh = ax.pcolormesh(np.asarray(x), np.asarray(y), grid, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=colorbar_label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return _save(fig, path)
