"""Elementwise solver kernels with a compiled fast path.

At import time the module looks for the Cython extension ``strtd._kernels``
and falls back to pure-numpy implementations when it is absent (or when the
``STRTD_PURE_PYTHON`` environment variable is set). Both backends compute
identical values; the compiled one fuses each operation into a single pass
over the buffers. ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np


class _NumpyKernels:
    """Reference implementations; also the fallback backend."""

    name = "numpy"

    @staticmethod
    def soft_threshold(x, mu):
        return np.sign(x) * np.maximum(np.abs(x) - mu, 0.0)

    @staticmethod
    def shrink_step(point, grad, inv_l, mu):
        return _NumpyKernels.soft_threshold(point - inv_l * grad, mu)

    @staticmethod
    def clamp_step(point, grad, inv_l):
        return np.maximum(point - inv_l * grad, 0.0)

    @staticmethod
    def extrapolate(cur, prev, omega):
        return cur + omega * (cur - prev)

    @staticmethod
    def feedback_combine(x0, x, z, observed, gamma):
        return np.where(observed, x0 + gamma * (x - z), z)

    @staticmethod
    def masked_sq_diff(a, b, observed):
        d = (a - b)[observed]
        return float(d @ d)

    @staticmethod
    def masked_sq_sum(a, observed):
        v = a[observed]
        return float(v @ v)


class _CompiledKernels:
    """Adapters flattening ndarrays onto the 1-D compiled routines."""

    name = "compiled"

    def __init__(self, ext):
        self._ext = ext

    @staticmethod
    def _flat(a):
        return np.ascontiguousarray(a, dtype=np.float64).ravel()

    @staticmethod
    def _flat_mask(m):
        return np.ascontiguousarray(m, dtype=bool).view(np.uint8).ravel()

    def soft_threshold(self, x, mu):
        x = np.asarray(x, dtype=np.float64)
        return self._ext.soft_threshold(self._flat(x), float(mu)).reshape(x.shape)

    def shrink_step(self, point, grad, inv_l, mu):
        point = np.asarray(point, dtype=np.float64)
        out = self._ext.shrink_step(
            self._flat(point), self._flat(grad), float(inv_l), float(mu)
        )
        return out.reshape(point.shape)

    def clamp_step(self, point, grad, inv_l):
        point = np.asarray(point, dtype=np.float64)
        out = self._ext.clamp_step(self._flat(point), self._flat(grad), float(inv_l))
        return out.reshape(point.shape)

    def extrapolate(self, cur, prev, omega):
        cur = np.asarray(cur, dtype=np.float64)
        out = self._ext.extrapolate(self._flat(cur), self._flat(prev), float(omega))
        return out.reshape(cur.shape)

    def feedback_combine(self, x0, x, z, observed, gamma):
        x0 = np.asarray(x0, dtype=np.float64)
        out = self._ext.feedback_combine(
            self._flat(x0), self._flat(x), self._flat(z),
            self._flat_mask(observed), float(gamma),
        )
        return out.reshape(x0.shape)

    def masked_sq_diff(self, a, b, observed):
        return float(
            self._ext.masked_sq_diff(self._flat(a), self._flat(b), self._flat_mask(observed))
        )

    def masked_sq_sum(self, a, observed):
        return float(self._ext.masked_sq_sum(self._flat(a), self._flat_mask(observed)))


numpy_backend = _NumpyKernels()
compiled_backend = None
try:  # pragma: no cover - exercised only when the extension is built
    from strtd import _kernels as _ext_module

    compiled_backend = _CompiledKernels(_ext_module)
except ImportError:
    _ext_module = None

if compiled_backend is not None and not os.environ.get("STRTD_PURE_PYTHON"):
    _active = compiled_backend
else:
    _active = numpy_backend


def backend_name():
    """Name of the backend in use: 'compiled' or 'numpy'."""
    return _active.name


def set_backend(name):
    """Switch backend at runtime ('compiled' or 'numpy'); used by benchmarks."""
    global _active
    if name == "numpy":
        _active = numpy_backend
    elif name == "compiled":
        if compiled_backend is None:
            raise ValueError("compiled kernels are not available in this install")
        _active = compiled_backend
    else:
        raise ValueError(f"unknown backend {name!r}")


def soft_threshold(x, mu):
    """Elementwise shrinkage sign(x) * max(|x| - mu, 0)."""
    return _active.soft_threshold(x, mu)


def shrink_step(point, grad, inv_l, mu):
    """Shrinkage of a gradient step: soft_threshold(point - inv_l * grad, mu)."""
    return _active.shrink_step(point, grad, inv_l, mu)


def clamp_step(point, grad, inv_l):
    """Nonnegative projection of a gradient step."""
    return _active.clamp_step(point, grad, inv_l)


def extrapolate(cur, prev, omega):
    """Momentum point cur + omega * (cur - prev)."""
    return _active.extrapolate(cur, prev, omega)


def feedback_combine(x0, x, z, observed, gamma):
    """Blend observed data back in: x0 + gamma * (x - z) on observed cells, z elsewhere."""
    return _active.feedback_combine(x0, x, z, observed, gamma)


def masked_sq_diff(a, b, observed):
    """Sum of squared differences over observed cells."""
    return _active.masked_sq_diff(a, b, observed)


def masked_sq_sum(a, observed):
    """Sum of squares over observed cells."""
    return _active.masked_sq_sum(a, observed)
