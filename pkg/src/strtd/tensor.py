"""Dense N-way tensor algebra: unfolding, mode products, norms, masking.

Conventions
-----------
Tensors are plain ``numpy.ndarray`` objects in float64. Modes are 0-based,
matching numpy axis numbering. The mode-``n`` unfolding maps entry
``(i_0, ..., i_{N-1})`` to row ``i_n`` and a column index in which the
remaining indices vary with the *earliest* mode fastest. Under this layout

    vec(X) = (U_{N-1} kron ... kron U_0) vec(G)

where ``vec`` is column-major (Fortran-order) raveling, so a Tucker product
``X = G x_0 U_0 x_1 U_1 ...`` unfolds as ``X_(n) = U_n G_(n) V_n^T`` with
``V_n`` the Kronecker product of the remaining factors in descending mode
order. ``tests/test_tensor.py`` pins this identity against an explicit
Kronecker oracle.
"""

from __future__ import annotations

import numpy as np


def _as_tensor(t) -> np.ndarray:
    return np.asarray(t, dtype=np.float64)


def _check_mode(ndim: int, mode: int) -> None:
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range for order-{ndim} tensor")


def unfold(t, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding of ``t`` into an ``I_mode x prod(rest)`` matrix."""
    t = _as_tensor(t)
    _check_mode(t.ndim, mode)
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(m, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold`: rebuild the tensor of shape ``dims``."""
    m = np.asarray(m, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    _check_mode(len(dims), mode)
    rest = dims[:mode] + dims[mode + 1:]
    expected = (dims[mode], int(np.prod(rest)) if rest else 1)
    if m.ndim != 2 or m.shape != expected:
        raise ValueError(
            f"matrix of shape {m.shape} cannot fold to dims {dims} at mode {mode}; "
            f"expected {expected}"
        )
    t = np.reshape(m, (dims[mode],) + rest, order="F")
    return np.moveaxis(t, 0, mode)


def mode_product(t, m, mode: int) -> np.ndarray:
    """Mode-``mode`` product: contract ``m`` (rows x I_mode) along axis ``mode``."""
    t = _as_tensor(t)
    m = np.asarray(m, dtype=np.float64)
    _check_mode(t.ndim, mode)
    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix of shape {m.shape} does not match extent {t.shape[mode]} at mode {mode}"
        )
    out = np.tensordot(m, t, axes=(1, mode))
    return np.moveaxis(out, 0, mode)


def multi_mode_product(core, factors, skip: int) -> np.ndarray:
    """Apply every factor except ``factors[skip]`` and unfold at ``skip``.

    Factors are applied in ascending mode order, which keeps intermediate
    tensors as small as possible before they grow along later modes. The
    result equals ``unfold(core, skip) @ V.T`` for the explicit Kronecker
    matrix ``V`` of the remaining factors, without materializing ``V``.
    """
    core = _as_tensor(core)
    if len(factors) != core.ndim:
        raise ValueError(f"expected {core.ndim} factors, got {len(factors)}")
    _check_mode(core.ndim, skip)
    out = core
    for mode, factor in enumerate(factors):
        if mode == skip:
            continue
        out = mode_product(out, factor, mode)
    return unfold(out, skip)


def reconstruct(core, factors) -> np.ndarray:
    """Tucker reconstruction: the core multiplied by every factor in turn."""
    core = _as_tensor(core)
    if len(factors) != core.ndim:
        raise ValueError(f"expected {core.ndim} factors, got {len(factors)}")
    out = core
    for mode, factor in enumerate(factors):
        out = mode_product(out, factor, mode)
    return out


def frobenius_norm(t) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64).ravel()))


def masked_project(t, mask) -> np.ndarray:
    """Keep entries on the observed set, zero elsewhere.

    ``mask`` may be a boolean array or any object with an ``observed``
    boolean array attribute (e.g. :class:`strtd.scenarios.ObservationMask`).
    """
    t = _as_tensor(t)
    observed = np.asarray(getattr(mask, "observed", mask), dtype=bool)
    if observed.shape != t.shape:
        raise ValueError(f"mask shape {observed.shape} does not match tensor {t.shape}")
    return np.where(observed, t, 0.0)
