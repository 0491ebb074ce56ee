"""Spatiotemporal tensor completion via regularized Tucker decomposition.

The package imputes missing entries of third-order (sensors, time, days)
tensors by fitting a Tucker product with nonnegative factors and a sparse
core, regularized by a kNN-graph Laplacian on spatial modes and a difference
operator on temporal modes, and solved with an alternating proximal gradient
method with momentum and restart.
"""

from strtd.kernels import backend_name
from strtd.metrics import MetricReport, evaluate, mape, nmae, rse
from strtd.priors import (
    GraphPriorConfig,
    PriorMatrix,
    beta_from_prior,
    laplacian,
    similarity_matrix,
    spectral_norm,
    temporal_operator,
)
from strtd.scenarios import ObservationMask, mask_bm, mask_nm, mask_rm
from strtd.solver import (
    ExtrapolationState,
    FactorSet,
    ModeRegularizer,
    SolverConfig,
    SolverState,
    StopReason,
    solve,
)
from strtd.tensor import (
    fold,
    frobenius_norm,
    masked_project,
    mode_product,
    multi_mode_product,
    reconstruct,
    unfold,
)

__version__ = "0.1.0"

__all__ = [
    "GraphPriorConfig",
    "PriorMatrix",
    "ObservationMask",
    "MetricReport",
    "ExtrapolationState",
    "FactorSet",
    "ModeRegularizer",
    "SolverConfig",
    "SolverState",
    "StopReason",
    "backend_name",
    "beta_from_prior",
    "evaluate",
    "fold",
    "frobenius_norm",
    "laplacian",
    "mape",
    "mask_bm",
    "mask_nm",
    "mask_rm",
    "masked_project",
    "mode_product",
    "multi_mode_product",
    "nmae",
    "reconstruct",
    "rse",
    "similarity_matrix",
    "solve",
    "spectral_norm",
    "temporal_operator",
    "unfold",
]
