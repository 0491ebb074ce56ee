"""Reproducible observation-mask generators for imputation experiments.

Three mechanisms over a (sensors, time-of-day, days) tensor:

* random missing (RM): cells dropped uniformly at random;
* non-random missing (NM): randomly chosen (sensor, day) fibers lose a
  contiguous block of time slots, drawn until the target ratio is reached;
* black-out missing (BM): contiguous time windows, shared by all sensors,
  removed from each affected day.

All generators are driven by an explicit seed and never touch global random
state, so a (dims, params, seed) triple always reproduces the same mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ObservationMask:
    """Boolean observation flags plus the scenario that produced them."""

    dims: tuple
    observed: np.ndarray
    scenario: str = "external"
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.observed.shape != self.dims:
            raise ValueError(
                f"observed array shape {self.observed.shape} does not match dims {self.dims}"
            )

    @property
    def missing(self) -> np.ndarray:
        return ~self.observed

    @property
    def n_observed(self) -> int:
        return int(self.observed.sum())

    @property
    def n_missing(self) -> int:
        return int(self.observed.size - self.observed.sum())

    @property
    def missing_ratio(self) -> float:
        return self.n_missing / self.observed.size


def mask_rm(dims, missing_ratio: float, seed: int) -> ObservationMask:
    """Uniform random missingness: exactly ``round(ratio * size)`` cells dropped."""
    if not 0.0 <= missing_ratio <= 1.0:
        raise ValueError("missing_ratio must be in [0, 1]")
    dims = tuple(int(d) for d in dims)
    size = int(np.prod(dims))
    n_missing = int(round(missing_ratio * size))
    order = np.random.default_rng(seed).permutation(size)
    observed = np.ones(size, dtype=bool)
    observed[order[:n_missing]] = False
    return ObservationMask(
        dims=dims,
        observed=observed.reshape(dims),
        scenario="RM",
        params={"missing_ratio": missing_ratio},
        seed=seed,
    )


def mask_nm(dims, missing_ratio: float, block_hours: int, seed: int) -> ObservationMask:
    """Fiber-block missingness: (sensor, day) pairs each lose a contiguous time block.

    Pairs and block starts are drawn (with replacement) until the number of
    missing cells reaches the target, so the achieved ratio overshoots by at
    most one block.
    """
    if not 0.0 <= missing_ratio <= 1.0:
        raise ValueError("missing_ratio must be in [0, 1]")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError("NM masks are defined on (sensors, time, days) tensors")
    sensors, slots, days = dims
    block_hours = int(block_hours)
    if not 1 <= block_hours <= slots:
        raise ValueError(f"block length {block_hours} infeasible for time extent {slots}")
    size = sensors * slots * days
    target = int(round(missing_ratio * size))
    rng = np.random.default_rng(seed)
    observed = np.ones(dims, dtype=bool)
    missing = 0
    # generous cap: expected draws are ~target/block plus overlap waste
    max_draws = 100 * (size // block_hours + 1)
    draws = 0
    while missing < target:
        if draws >= max_draws:
            raise RuntimeError("NM mask generation did not reach the target ratio")
        draws += 1
        sensor = int(rng.integers(sensors))
        day = int(rng.integers(days))
        start = int(rng.integers(slots - block_hours + 1))
        fiber = observed[sensor, start:start + block_hours, day]
        missing += int(fiber.sum())
        fiber[:] = False
    return ObservationMask(
        dims=dims,
        observed=observed,
        scenario="NM",
        params={"missing_ratio": missing_ratio, "block_hours": block_hours},
        seed=seed,
    )


def mask_bm(dims, window_fraction: float, seed: int) -> ObservationMask:
    """Black-out missingness: per-day contiguous windows shared by all sensors.

    The number of missing time slots is ``round(fraction * slots * days)``,
    split as evenly as possible over the days; each affected day gets one
    seeded window start. Every sensor loses the same windows.
    """
    if not 0.0 < window_fraction < 1.0:
        raise ValueError("window_fraction must be in (0, 1)")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError("BM masks are defined on (sensors, time, days) tensors")
    _, slots, days = dims
    total_slots = slots * days
    n_remove = int(round(window_fraction * total_slots))
    rng = np.random.default_rng(seed)
    base, extra = divmod(n_remove, days)
    day_order = rng.permutation(days)
    observed = np.ones(dims, dtype=bool)
    for rank, day in enumerate(day_order):
        length = base + (1 if rank < extra else 0)
        if length == 0:
            continue
        if length > slots:
            raise ValueError(
                f"window of {length} slots infeasible for time extent {slots}"
            )
        start = int(rng.integers(slots - length + 1))
        observed[:, start:start + length, day] = False
    return ObservationMask(
        dims=dims,
        observed=observed,
        scenario="BM",
        params={"window_fraction": window_fraction},
        seed=seed,
    )


def save_mask(mask: ObservationMask, path) -> None:
    """Write the observed coordinate list as CSV, one 1-based coordinate per line."""
    coords = np.argwhere(mask.observed)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for coord in coords:
            fh.write(",".join(str(int(c) + 1) for c in coord) + "\n")


def load_mask(path, dims) -> ObservationMask:
    """Read a coordinate-list CSV (1-based) back into a mask over ``dims``."""
    dims = tuple(int(d) for d in dims)
    observed = np.zeros(dims, dtype=bool)
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(dims):
                raise ValueError(
                    f"{path}:{line_no}: expected {len(dims)} coordinates, got {len(parts)}"
                )
            coord = tuple(int(p) - 1 for p in parts)
            if any(not 0 <= c < d for c, d in zip(coord, dims)):
                raise ValueError(f"{path}:{line_no}: coordinate {parts} out of range")
            observed[coord] = True
    return ObservationMask(dims=dims, observed=observed, scenario="external")
