"""Traffic-matrix ingestion, tensorization, and file formats.

A dataset is a headerless CSV matrix: one row per sensor, ``time * days``
columns in day-major order (all time slots of day 1, then day 2, ...).
Missing values appear as empty cells and mark those entries as pre-masked.
Values are written with Python's shortest round-trip float rendering so a
write/read cycle is lossless at full 64-bit precision.

Tensorization stacks the per-day column blocks: entry ``(m, i, j)`` of the
tensor is column ``j * time + i`` of row ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TrafficMatrix:
    """Sensor-by-(time*days) value matrix with its day layout."""

    values: np.ndarray
    time_per_day: int
    days: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("traffic matrix must be 2-D")
        expected = self.time_per_day * self.days
        if self.values.shape[1] != expected:
            raise ValueError(
                f"matrix has {self.values.shape[1]} columns, expected "
                f"time_per_day * days = {expected}"
            )

    @property
    def sensors(self) -> int:
        return self.values.shape[0]


def tensorize(y: TrafficMatrix) -> np.ndarray:
    """Reshape the matrix into a (sensors, time, days) tensor."""
    m = y.sensors
    return np.ascontiguousarray(
        y.values.reshape(m, y.days, y.time_per_day).swapaxes(1, 2)
    )


def inverse_tensorize(x) -> TrafficMatrix:
    """Exact inverse of :func:`tensorize`."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError("expected a 3rd-order (sensors, time, days) tensor")
    m, time_per_day, days = x.shape
    values = np.ascontiguousarray(x.swapaxes(1, 2)).reshape(m, time_per_day * days)
    return TrafficMatrix(values=values, time_per_day=time_per_day, days=days)


def load_matrix_csv(path):
    """Read a headerless CSV matrix; empty cells become NaN.

    Returns ``(values, observed)`` where ``observed`` flags the non-empty
    cells.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if line == "" and not rows:
                continue
            cells = line.split(",")
            try:
                rows.append(
                    [float(c) if c.strip() != "" else np.nan for c in cells]
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: empty matrix")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows (widths {sorted(widths)})")
    values = np.asarray(rows, dtype=np.float64)
    return values, ~np.isnan(values)


def save_matrix_csv(path, values, observed=None) -> None:
    """Write a matrix as headerless CSV; unobserved cells become empty."""
    values = np.asarray(values, dtype=np.float64)
    if observed is None:
        observed = np.isfinite(values)
    observed = np.asarray(observed, dtype=bool)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row, row_obs in zip(np.atleast_2d(values), np.atleast_2d(observed)):
            fh.write(
                ",".join(repr(float(v)) if o else "" for v, o in zip(row, row_obs))
                + "\n"
            )
