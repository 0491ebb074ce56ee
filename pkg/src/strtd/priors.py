"""Construction of per-mode constraint matrices.

Spatial modes get a k-nearest-neighbour Gaussian-kernel similarity graph and
its combinatorial Laplacian ``L = D - W``; temporal modes get a forward
difference operator ``T`` with rows ``(..., -1, +1, ...)``. Both carry a
cached spectral norm (of ``L``, respectively ``T^T T``) used for the
regularization weight rule ``beta = 1 / (0.2 * norm)`` and for the solver's
gradient step sizes.

Note on the graph penalty: with the symmetrized weight convention used here
(``W = max(W, W^T)``), the pairwise sum ``sum_ij w_ij ||u_i - u_j||^2``
equals ``2 * tr(U^T L U)``, i.e. the quadratic form carries a factor 2
relative to the trace. The solver only ever uses ``tr(U^T L U)`` so the
constant is absorbed by the weight ``beta``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

_POWER_SEED = 20240913


@dataclass
class GraphPriorConfig:
    """kNN similarity graph parameters.

    ``neighbors`` is the number of nearest neighbours kept per node and
    ``bandwidth`` the squared kernel width (1.0 = uniform divergence).
    """

    neighbors: int = 5
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.neighbors < 0:
            raise ValueError("neighbors must be >= 0")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")


@dataclass
class PriorMatrix:
    """A per-mode constraint matrix with its cached spectral norm.

    ``kind`` is 'laplacian' or 'temporal'. For the temporal kind the cached
    norm is that of the Gram matrix ``T^T T`` (the quantity entering both the
    weight rule and the Lipschitz constants); ``gram`` caches ``T^T T``
    itself.
    """

    kind: str
    matrix: np.ndarray
    spectral_norm: float
    gram: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("laplacian", "temporal"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.kind == "temporal" and self.gram is None:
            self.gram = self.matrix.T @ self.matrix

    @property
    def grad_matrix(self) -> np.ndarray:
        """Matrix ``M`` such that the penalty gradient is ``beta * M @ U``."""
        return self.matrix if self.kind == "laplacian" else self.gram


def power_iteration(m, v0=None, tol: float = 1e-14, max_iter: int = 50000):
    """Largest singular value of ``m`` by power iteration on ``m^T m``.

    Returns ``(sigma, v)`` where ``v`` is the final unit iterate, reusable as
    a warm start. The start vector is drawn from a fixed-seed generator so
    results are deterministic; a random direction avoids starting inside the
    null space (the all-ones vector would, for any graph Laplacian).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("power iteration expects a matrix")
    n = m.shape[1]
    if m.size == 0 or not np.any(m):
        return 0.0, np.zeros(n)
    if v0 is not None and np.linalg.norm(v0) > 0:
        v = np.asarray(v0, dtype=np.float64) / np.linalg.norm(v0)
    else:
        v = np.random.default_rng(_POWER_SEED).standard_normal(n)
        v /= np.linalg.norm(v)
    sigma_sq = 0.0
    for _ in range(max_iter):
        w = m.T @ (m @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # v landed in the null space; restart from a fresh direction
            v = np.random.default_rng(_POWER_SEED + 1).standard_normal(n)
            v /= np.linalg.norm(v)
            continue
        new_sigma_sq = v @ w
        v = w / norm_w
        if abs(new_sigma_sq - sigma_sq) <= tol * max(1.0, abs(new_sigma_sq)):
            sigma_sq = new_sigma_sq
            break
        sigma_sq = new_sigma_sq
    return float(np.sqrt(max(sigma_sq, 0.0))), v


def spectral_norm(m, v0=None) -> float:
    """Largest singular value of ``m`` (see :func:`power_iteration`)."""
    return power_iteration(m, v0=v0)[0]


def similarity_matrix(rows, mask=None, cfg: GraphPriorConfig | None = None) -> np.ndarray:
    """Symmetric kNN Gaussian-kernel similarity matrix over row vectors.

    ``rows`` is a nodes-by-features matrix; ``mask`` flags which entries are
    observed (all observed when None). Pairwise squared distances use only
    columns observed in both rows, rescaled by ``total / common`` so rows
    with few shared observations are not artificially close. Each node keeps
    its ``cfg.neighbors`` nearest neighbours; the result is symmetrized with
    an elementwise max and has a zero diagonal.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("rows must be a 2-D matrix of node feature vectors")
    n, cols = rows.shape
    if n < 2:
        raise ValueError("need at least 2 nodes to build a similarity graph")
    cfg = cfg or GraphPriorConfig()
    if cfg.neighbors >= n:
        raise ValueError(f"neighbors={cfg.neighbors} must be < node count {n}")
    if mask is None:
        mask = np.ones_like(rows, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != rows.shape:
            raise ValueError("mask shape must match rows")

    # pairwise squared distances over commonly observed columns, via masked
    # Gram matrices: sum_c m_ic m_jc (r_ic - r_jc)^2
    masked = np.where(mask, rows, 0.0)
    masked_sq = masked * masked
    m_f = mask.astype(np.float64)
    common = m_f @ m_f.T
    cross = masked @ masked.T
    sq_i = masked_sq @ m_f.T
    raw = np.maximum(sq_i + sq_i.T - 2.0 * cross, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dist_sq = np.where(common > 0, raw * (cols / common), np.inf)
    np.fill_diagonal(dist_sq, np.inf)

    iu = np.triu_indices(n, k=1)
    disconnected = int(np.sum(common[iu] == 0))
    if disconnected:
        warnings.warn(
            f"{disconnected} node pair(s) share no observed columns; "
            "their similarity is set to 0",
            stacklevel=2,
        )

    w = np.zeros((n, n))
    if cfg.neighbors > 0:
        for i in range(n):
            order = np.argsort(dist_sq[i], kind="stable")
            order = order[order != i][: cfg.neighbors]
            for j in order:
                if np.isfinite(dist_sq[i, j]):
                    w[i, j] = np.exp(-dist_sq[i, j] / cfg.bandwidth)
        w = np.maximum(w, w.T)
    np.fill_diagonal(w, 0.0)
    return w


def laplacian(w) -> PriorMatrix:
    """Combinatorial graph Laplacian ``L = D - W`` of a similarity matrix."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("similarity matrix must be square")
    if not np.allclose(w, w.T, rtol=0.0, atol=1e-12):
        raise ValueError("similarity matrix must be symmetric")
    if np.any(w < 0):
        raise ValueError("similarity matrix must be nonnegative")
    if np.any(np.diag(w) != 0):
        raise ValueError("similarity matrix must have a zero diagonal")
    lap = np.diag(w.sum(axis=1)) - w
    return PriorMatrix(kind="laplacian", matrix=lap, spectral_norm=spectral_norm(lap))


def temporal_operator(extent: int) -> PriorMatrix:
    """First-order forward difference operator of shape ``(extent-1, extent)``.

    ``(T u)_j = u_{j+1} - u_j``; constants map to zero and the rows are
    linearly independent. The cached spectral norm is of ``T^T T``.
    """
    extent = int(extent)
    if extent < 2:
        raise ValueError("temporal operator needs extent >= 2")
    t = np.zeros((extent - 1, extent))
    idx = np.arange(extent - 1)
    t[idx, idx] = -1.0
    t[idx, idx + 1] = 1.0
    gram = t.T @ t
    return PriorMatrix(
        kind="temporal", matrix=t, spectral_norm=spectral_norm(gram), gram=gram
    )


def beta_from_prior(prior: PriorMatrix) -> float:
    """Regularization weight from the cached norm: ``1 / (0.2 * norm)``."""
    if prior.spectral_norm <= 0:
        raise ValueError("regularizer inactive: prior has zero spectral norm")
    return 1.0 / (0.2 * prior.spectral_norm)


def export_matrix_csv(matrix, path) -> None:
    """Write a matrix as plain CSV (one row per line) for inspection."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in np.atleast_2d(matrix):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
