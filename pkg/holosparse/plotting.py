"""
Static figures from result CSVs: NMSE curves and wavenumber variance maps.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .errors import InvalidParameterError  # noqa: E402

logger = logging.getLogger(__name__)

_MARKERS = {"LS": "s", "WD-OMP": "o", "AD-OMP": "^", "WD-CoSaMP": "D", "AD-CoSaMP": "v"}


def plot_results(results_csv: str | Path, out_png: str | Path, xlabel: str = "sweep value") -> Path:
    """One NMSE (dB) curve per estimator against the sweep column."""
    frame = pd.read_csv(results_csv)
    missing = {"sweep", "estimator", "nmse_db"} - set(frame.columns)
    if missing:
        raise InvalidParameterError(f"{results_csv} lacks columns {sorted(missing)}")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, group in frame.groupby("estimator", sort=False):
        group = group.sort_values("sweep")
        ax.plot(group["sweep"], group["nmse_db"], marker=_MARKERS.get(name, "x"), label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("NMSE (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    logger.info("wrote %s", out_png)
    return out_png


def plot_variance_map(map_csv: str | Path, out_png: str | Path) -> Path:
    """Heat map of σ² over (l_x, l_y), one panel per side present in the file."""
    frame = pd.read_csv(map_csv)
    if "side" not in frame.columns:
        frame = frame.assign(side="receive")
    sides = list(dict.fromkeys(frame["side"]))
    fig, axes = plt.subplots(1, len(sides), figsize=(5 * len(sides), 4.5), squeeze=False)
    for ax, side in zip(axes[0], sides):
        part = frame[frame["side"] == side]
        lx = np.arange(part["l_x"].min(), part["l_x"].max() + 1)
        ly = np.arange(part["l_y"].min(), part["l_y"].max() + 1)
        image = np.full((ly.size, lx.size), np.nan)
        image[part["l_y"].to_numpy() - ly[0], part["l_x"].to_numpy() - lx[0]] = part["sigma2"].to_numpy()
        mesh = ax.imshow(image, origin="lower", extent=(lx[0] - 0.5, lx[-1] + 0.5, ly[0] - 0.5, ly[-1] + 0.5))
        ax.set_title(side)
        ax.set_xlabel("l_x")
        ax.set_ylabel("l_y")
        fig.colorbar(mesh, ax=ax)
    fig.tight_layout()
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    logger.info("wrote %s", out_png)
    return out_png
