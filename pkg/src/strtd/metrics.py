"""Imputation error metrics and data diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

_ZERO_EPS = 1e-8


@dataclass
class MetricReport:
    """Error summary over one evaluation set."""

    mape: float | None
    nmae: float
    rse: float
    evaluated_count: int
    excluded_zero_truth: int

    def to_dict(self) -> dict:
        return asdict(self)


def _select(truth, estimate, eval_mask):
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise ValueError("truth and estimate shapes differ")
    if eval_mask is None:
        return truth.ravel(), estimate.ravel()
    eval_mask = np.asarray(eval_mask, dtype=bool)
    if eval_mask.shape != truth.shape:
        raise ValueError("evaluation mask shape differs from data")
    return truth[eval_mask], estimate[eval_mask]


def mape(truth, estimate, eval_mask=None) -> float:
    """Mean absolute percentage error, in percent.

    Entries whose true value is within 1e-8 of zero are excluded (the
    relative error is undefined there); if nothing is left the metric itself
    is undefined and a ValueError is raised.
    """
    y, y_hat = _select(truth, estimate, eval_mask)
    if y.size == 0:
        raise ValueError("empty evaluation set")
    keep = np.abs(y) > _ZERO_EPS
    if not keep.any():
        raise ValueError("MAPE undefined: every evaluated true value is zero")
    return float(np.mean(np.abs((y[keep] - y_hat[keep]) / y[keep])) * 100.0)


def nmae(truth, estimate, eval_mask=None) -> float:
    """Normalized mean absolute error: sum |y - y_hat| / sum |y|."""
    y, y_hat = _select(truth, estimate, eval_mask)
    if y.size == 0:
        raise ValueError("empty evaluation set")
    denom = float(np.sum(np.abs(y)))
    if denom == 0.0:
        raise ValueError("NMAE undefined: zero total magnitude on the evaluation set")
    return float(np.sum(np.abs(y - y_hat)) / denom)


def rse(truth, estimate, eval_mask=None) -> float:
    """Relative error in the Frobenius sense: ||y_hat - y|| / ||y||."""
    y, y_hat = _select(truth, estimate, eval_mask)
    if y.size == 0:
        raise ValueError("empty evaluation set")
    denom = float(np.linalg.norm(y))
    if denom == 0.0:
        raise ValueError("RSE undefined: zero-norm truth on the evaluation set")
    return float(np.linalg.norm(y_hat - y) / denom)


def evaluate(truth, estimate, eval_mask=None) -> MetricReport:
    """All metrics over one evaluation set, with exclusion accounting."""
    y, _ = _select(truth, estimate, eval_mask)
    excluded = int(np.sum(np.abs(y) <= _ZERO_EPS))
    try:
        mape_val = mape(truth, estimate, eval_mask)
    except ValueError:
        mape_val = None
    return MetricReport(
        mape=mape_val,
        nmae=nmae(truth, estimate, eval_mask),
        rse=rse(truth, estimate, eval_mask),
        evaluated_count=int(y.size),
        excluded_zero_truth=excluded,
    )


def spatial_correlation_cdf(rows):
    """Sorted pairwise correlation coefficients of sensor rows.

    Returns ``(values, excluded_pairs)``; pairs involving a constant row are
    excluded since their correlation is undefined.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise ValueError("need a matrix with at least 2 sensor rows")
    centered = rows - rows.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    valid = norms > 0
    values = []
    excluded = 0
    n = rows.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if not (valid[i] and valid[j]):
                excluded += 1
                continue
            values.append(float(centered[i] @ centered[j] / (norms[i] * norms[j])))
    return np.sort(np.asarray(values)), excluded


def increment_rate_cdf(rows):
    """Sorted step-to-step relative changes |y_{t+1} - y_t| / |y_t|.

    Returns ``(values, skipped)``; steps starting at a (near-)zero value are
    skipped and counted.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[1] < 2:
        raise ValueError("need at least 2 time columns")
    prev = rows[:, :-1]
    nxt = rows[:, 1:]
    ok = np.abs(prev) > _ZERO_EPS
    rates = np.abs(nxt[ok] - prev[ok]) / np.abs(prev[ok])
    skipped = int(ok.size - ok.sum())
    return np.sort(rates), skipped
