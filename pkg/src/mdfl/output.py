"""CSV and PGM writers for grids and tables."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .crlb import GridSpec

PGM_CLAMP_M = (0.0, 2.0)


def _fmt(v: float) -> str:
    return "inf" if np.isinf(v) else f"{v:.9g}"


def write_grid_csv(path, grid: GridSpec, values: np.ndarray) -> None:
    """One row per grid point: x_m, y_m, rmse_m (``inf`` where singular)."""
    pts = grid.points()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_m", "y_m", "rmse_m"])
        for (x, y), v in zip(pts, np.asarray(values).ravel()):
            w.writerow([f"{x:.6f}", f"{y:.6f}", _fmt(v)])


def read_grid_csv(path) -> np.ndarray:
    with open(path) as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array([[float(c) for c in r] for r in rows])


def write_pgm(path, values: np.ndarray, clamp=PGM_CLAMP_M) -> None:
    """8-bit binary PGM; 0 = ``clamp[0]`` m (black), 255 = ``clamp[1]`` m or singular.

    Row 0 of ``values`` is the smallest y; the image is flipped so north is up.
    """
    lo, hi = clamp
    v = np.where(np.isfinite(values), values, hi)
    img = np.round(255 * (np.clip(v, lo, hi) - lo) / (hi - lo)).astype(np.uint8)[::-1]
    h, w = img.shape
    header = f"P5\n# rmse bound in meters, linear clamp [{lo:g}, {hi:g}]\n{w} {h}\n255\n"
    Path(path).write_bytes(header.encode("ascii") + img.tobytes())


def write_table_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) if isinstance(x, float) else x for x in r])
