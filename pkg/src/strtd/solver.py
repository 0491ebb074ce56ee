"""Alternating proximal gradient solver for regularized Tucker completion.

The model approximates a partially observed tensor ``X`` by a Tucker product
``Z = G x_0 U_0 ... x_{N-1} U_{N-1}`` with nonnegative factor matrices and a
sparse core, minimizing

    0.5 * ||X - Z||_F^2  +  alpha * ||G||_1
      + sum over graph modes    of  (beta_n / 2) * tr(U_n^T L_n U_n)
      + sum over temporal modes of  (beta_n / 2) * ||T_n U_n||_F^2

subject to ``U_n >= 0`` and the observed entries of ``X`` staying tied to the
data. Blocks are updated in the order core, U_0, ..., U_{N-1}, each by a
prox-linear step at an extrapolated point with the step size given by the
block's Lipschitz constant. A block step whose extrapolation increased the
objective is redone without extrapolation from the last accepted iterate,
which keeps the objective non-increasing. After each sweep the tensor
iterate is refreshed by a feedback rule that re-imposes the observed data
while leaking a fraction ``gamma`` of the current residual.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from strtd import kernels
from strtd.priors import PriorMatrix, beta_from_prior, power_iteration
from strtd.tensor import mode_product, multi_mode_product, reconstruct, unfold

logger = logging.getLogger(__name__)

# restart / descent bookkeeping tolerance, relative to the objective scale
_DESCENT_SLACK = 1e-12


class StopReason(enum.Enum):
    CONTINUE = "continue"
    RSE = "converged-rse"
    OBJECTIVE = "converged-objective"
    MAX_ITERS = "max-iterations"


@dataclass
class ModeRegularizer:
    """Per-mode penalty assignment: none, graph laplacian, or temporal."""

    kind: str = "none"
    prior: PriorMatrix | None = None
    beta: float = 0.0

    @classmethod
    def from_prior(cls, prior: PriorMatrix | None):
        if prior is None:
            return cls()
        return cls(kind=prior.kind, prior=prior, beta=beta_from_prior(prior))


@dataclass
class FactorSet:
    """Factor matrices plus their per-mode regularizer assignment."""

    factors: list
    regularizers: list

    def __post_init__(self):
        if len(self.factors) != len(self.regularizers):
            raise ValueError("one regularizer assignment required per mode")

    @classmethod
    def unregularized(cls, factors):
        return cls(list(factors), [ModeRegularizer() for _ in factors])

    def copy(self):
        return FactorSet([u.copy() for u in self.factors], list(self.regularizers))


@dataclass
class SolverConfig:
    """Solver hyperparameters; defaults follow the standard tuning."""

    alpha: float = 1.0
    gamma: float = 0.2
    tol: float = 1e-4
    max_iters: int = 300
    core_dims: tuple | None = None
    seed: int = 0
    missing_fill: str = "observed-mean"  # or "zero"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.missing_fill not in ("zero", "observed-mean"):
            raise ValueError("missing_fill must be 'zero' or 'observed-mean'")


@dataclass
class ExtrapolationState:
    """Momentum weight sequence t^k = (p + sqrt(r t^2 + q)) / 2, omega = (t_prev - 1) / t."""

    t_prev: float = 1.0
    t_cur: float = 1.0

    P = 0.8
    Q = 0.8
    R = 4.0

    def advance(self) -> float:
        """Advance the sequence once and return the momentum weight."""
        t_new = 0.5 * (self.P + sqrt(self.R * self.t_cur * self.t_cur + self.Q))
        omega = (self.t_cur - 1.0) / t_new
        self.t_prev, self.t_cur = self.t_cur, t_new
        return omega


@dataclass
class TraceRecord:
    iteration: int
    objective: float
    objective_observed: float
    rse: float
    omega: float
    lipschitz: dict
    step_norm: float = 0.0  # sum over blocks of ||new - previous accepted||_F


@dataclass
class SolverState:
    """Iterate history for one solve; returned as the run report."""

    x: np.ndarray
    core: np.ndarray
    factors: FactorSet
    extrapolation: ExtrapolationState = field(default_factory=ExtrapolationState)
    trace: list = field(default_factory=list)
    iteration: int = 0
    stop_reason: StopReason = StopReason.CONTINUE
    recon: np.ndarray | None = None
    core_prev: np.ndarray | None = None
    factors_prev: list = field(default_factory=list)
    _warm: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.core_prev is None:
            self.core_prev = self.core.copy()
        if not self.factors_prev:
            self.factors_prev = [u.copy() for u in self.factors.factors]

    @property
    def objective_trace(self):
        return [r.objective for r in self.trace]

    @property
    def objective_observed_trace(self):
        return [r.objective_observed for r in self.trace]

    @property
    def rse_trace(self):
        return [r.rse for r in self.trace]


def _penalty(factors: FactorSet) -> float:
    total = 0.0
    for u, reg in zip(factors.factors, factors.regularizers):
        if reg.kind == "none":
            continue
        if reg.kind == "laplacian":
            total += 0.5 * reg.beta * float(np.sum(u * (reg.prior.matrix @ u)))
        elif reg.kind == "temporal":
            tu = reg.prior.matrix @ u
            total += 0.5 * reg.beta * float(np.sum(tu * tu))
        else:
            raise ValueError(f"unknown regularizer kind {reg.kind!r}")
    return total


def objective(x, core, factors: FactorSet, alpha: float) -> float:
    """Full objective: fidelity + l1 core penalty + per-mode regularizers."""
    resid = np.asarray(x, dtype=np.float64) - reconstruct(core, factors.factors)
    fid = 0.5 * float(resid.ravel() @ resid.ravel())
    return fid + alpha * float(np.sum(np.abs(core))) + _penalty(factors)


def objective_observed(x, core, factors: FactorSet, alpha: float, observed) -> float:
    """Objective with the fidelity term restricted to observed cells."""
    z = reconstruct(core, factors.factors)
    fid = 0.5 * kernels.masked_sq_diff(np.asarray(x, dtype=np.float64), z, observed)
    return fid + alpha * float(np.sum(np.abs(core))) + _penalty(factors)


def _project_to_core(x, factor_list):
    out = np.asarray(x, dtype=np.float64)
    for mode, u in enumerate(factor_list):
        out = mode_product(out, u.T, mode)
    return out


def grad_core(x, core, factors: FactorSet) -> np.ndarray:
    """Gradient of the fidelity term with respect to the core tensor.

    Evaluated with sequential mode products of the factor Gram matrices;
    the Kronecker system matrix is never formed.
    """
    factor_list = factors.factors
    out = np.asarray(core, dtype=np.float64)
    for mode, u in enumerate(factor_list):
        out = mode_product(out, u.T @ u, mode)
    return out - _project_to_core(x, factor_list)


def lipschitz_core(factors: FactorSet, warm: dict | None = None) -> float:
    """Gradient Lipschitz constant for the core block: prod_n ||U_n^T U_n||_2."""
    prod = 1.0
    for mode, u in enumerate(factors.factors):
        v0 = warm.get(("core", mode)) if warm is not None else None
        sigma, v = power_iteration(u.T @ u, v0=v0)
        if warm is not None:
            warm[("core", mode)] = v
        prod *= sigma
    return prod


def update_core(x, core, factors: FactorSet, alpha: float,
                core_prev=None, omega: float = 0.0, lips: float | None = None) -> np.ndarray:
    """One prox-linear core step: shrinkage of a gradient step at the momentum point."""
    if lips is None:
        lips = lipschitz_core(factors)
    if lips <= 0:
        raise ValueError("degenerate Lipschitz constant for the core block")
    point = np.asarray(core, dtype=np.float64)
    if omega != 0.0:
        if core_prev is None:
            raise ValueError("extrapolation requires the previous core iterate")
        point = kernels.extrapolate(point, core_prev, omega)
    grad = grad_core(x, point, factors)
    return kernels.shrink_step(point, grad, 1.0 / lips, alpha / lips)


def _factor_terms(x, core, factor_list, mode):
    """Shared matrices for the mode-``mode`` factor block.

    Returns ``(gv_gram, cross)`` where ``gv_gram`` is the Gram matrix of the
    core contracted with every other factor and ``cross`` the unfolded data
    times that contraction, so the fidelity gradient is
    ``U @ gv_gram - cross``.
    """
    gv = multi_mode_product(core, factor_list, skip=mode)
    return gv @ gv.T, unfold(x, mode) @ gv.T


def grad_factor(x, core, factors: FactorSet, mode: int, at=None) -> np.ndarray:
    """Gradient of the factor subproblem at ``at`` (default: the current factor)."""
    u = factors.factors[mode] if at is None else np.asarray(at, dtype=np.float64)
    gv_gram, cross = _factor_terms(x, core, factors.factors, mode)
    grad = u @ gv_gram - cross
    reg = factors.regularizers[mode]
    if reg.kind != "none":
        grad = grad + reg.beta * (reg.prior.grad_matrix @ u)
    return grad


def lipschitz_factor(x, core, factors: FactorSet, mode: int,
                     warm: dict | None = None) -> float:
    """Gradient Lipschitz constant for one factor block.

    Spectral norm of the contracted-core Gram matrix, plus the weighted norm
    of the regularizer matrix when the mode carries one.
    """
    gv = multi_mode_product(core, factors.factors, skip=mode)
    v0 = warm.get(("factor", mode)) if warm is not None else None
    sigma, v = power_iteration(gv @ gv.T, v0=v0)
    if warm is not None:
        warm[("factor", mode)] = v
    reg = factors.regularizers[mode]
    if reg.kind != "none":
        sigma += reg.beta * reg.prior.spectral_norm
    return sigma


def update_factor(x, core, factors: FactorSet, mode: int,
                  factor_prev=None, omega: float = 0.0, lips: float | None = None) -> np.ndarray:
    """One prox-linear factor step: nonnegative projection of a gradient step."""
    if lips is None:
        lips = lipschitz_factor(x, core, factors, mode)
    if lips <= 0:
        raise ValueError(f"degenerate Lipschitz constant for factor block {mode}")
    point = np.asarray(factors.factors[mode], dtype=np.float64)
    if omega != 0.0:
        if factor_prev is None:
            raise ValueError("extrapolation requires the previous factor iterate")
        point = kernels.extrapolate(point, factor_prev, omega)
    grad = grad_factor(x, core, factors, mode, at=point)
    return kernels.clamp_step(point, grad, 1.0 / lips)


def feedback_update(x, x0, z, observed, gamma: float) -> np.ndarray:
    """Re-impose observed data with a leaked residual; take the model elsewhere.

    Observed cells become ``x0 + gamma * (x - z)``; missing cells become the
    reconstruction ``z``.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    return kernels.feedback_combine(x0, x, z, observed, gamma)


def check_stop(z, x0, observed, tol: float, objective_trace) -> StopReason:
    """Convergence test on the observed residual and the objective history.

    Converges when the observed-cell relative error of the reconstruction
    drops below ``tol``, or when the last three objective values exist and
    both successive relative changes ``|F_i - F_{i+1}| / (1 + F_i)`` are at
    most ``tol``. With no observed signal the residual test is undefined and
    only the objective test applies.
    """
    den = sqrt(kernels.masked_sq_sum(x0, observed))
    if den > 0.0:
        rse = sqrt(kernels.masked_sq_diff(z, x0, observed)) / den
        if rse < tol:
            return StopReason.RSE
    if len(objective_trace) >= 3:
        f1, f2, f3 = objective_trace[-3:]
        r1 = abs(f1 - f2) / (1.0 + f1)
        r2 = abs(f2 - f3) / (1.0 + f2)
        if r1 <= tol and r2 <= tol:
            return StopReason.OBJECTIVE
    return StopReason.CONTINUE


def observed_rse(z, x0, observed) -> float:
    """Relative error of ``z`` against ``x0`` over observed cells (nan if no signal)."""
    den = sqrt(kernels.masked_sq_sum(x0, observed))
    if den == 0.0:
        return float("nan")
    return sqrt(kernels.masked_sq_diff(z, x0, observed)) / den


def _sweep_blocks(state: SolverState, alpha: float) -> tuple[float, float, dict]:
    """One Gauss-Seidel pass over all blocks at the current tensor iterate.

    Each block takes an extrapolated prox step; if that step increased the
    objective the block is redone without extrapolation from the last
    accepted iterate, which cannot increase it. Returns the objective after
    the pass, the momentum weight used, and the per-block step constants.
    """
    x = state.x
    factors = state.factors
    omega = state.extrapolation.advance()
    lips_record = {}
    step_norm = 0.0
    f_cur = objective(x, state.core, factors, alpha)
    slack = _DESCENT_SLACK * (1.0 + abs(f_cur))

    # core block
    lips = lipschitz_core(factors, warm=state._warm)
    lips_record["core"] = lips
    if lips <= 0.0:
        logger.warning("iteration %d: core block degenerate, skipped", state.iteration)
    else:
        grams = [u.T @ u for u in factors.factors]
        proj = _project_to_core(x, factors.factors)
        inv_l = 1.0 / lips

        def core_step(point):
            grad = point
            for mode, gram in enumerate(grams):
                grad = mode_product(grad, gram, mode)
            grad = grad - proj
            return kernels.shrink_step(point, grad, inv_l, alpha * inv_l)

        point = state.core
        if omega != 0.0:
            point = kernels.extrapolate(state.core, state.core_prev, omega)
        cand = core_step(point)
        f_cand = objective(x, cand, factors, alpha)
        if f_cand > f_cur + slack and omega != 0.0:
            cand = core_step(state.core)
            f_cand = objective(x, cand, factors, alpha)
        step_norm += float(np.linalg.norm((cand - state.core).ravel()))
        state.core_prev = state.core
        state.core = cand
        f_cur = f_cand

    # factor blocks, ascending mode order
    for mode in range(len(factors.factors)):
        gv_gram, cross = _factor_terms(x, state.core, factors.factors, mode)
        v0 = state._warm.get(("factor", mode))
        sigma, v = power_iteration(gv_gram, v0=v0)
        state._warm[("factor", mode)] = v
        reg = factors.regularizers[mode]
        lips = sigma
        if reg.kind != "none":
            lips += reg.beta * reg.prior.spectral_norm
        lips_record[f"factor_{mode}"] = lips
        if lips <= 0.0:
            logger.warning(
                "iteration %d: factor block %d degenerate, skipped",
                state.iteration, mode,
            )
            continue
        inv_l = 1.0 / lips

        def factor_step(point):
            grad = point @ gv_gram - cross
            if reg.kind != "none":
                grad = grad + reg.beta * (reg.prior.grad_matrix @ point)
            return kernels.clamp_step(point, grad, inv_l)

        u_cur = factors.factors[mode]
        point = u_cur
        if omega != 0.0:
            point = kernels.extrapolate(u_cur, state.factors_prev[mode], omega)
        cand = factor_step(point)
        factors.factors[mode] = cand
        f_cand = objective(x, state.core, factors, alpha)
        if f_cand > f_cur + slack and omega != 0.0:
            cand = factor_step(u_cur)
            factors.factors[mode] = cand
            f_cand = objective(x, state.core, factors, alpha)
        step_norm += float(np.linalg.norm(cand - u_cur))
        state.factors_prev[mode] = u_cur
        f_cur = f_cand

    return f_cur, omega, lips_record, step_norm


def initialize_state(x0, observed, priors, cfg: SolverConfig) -> SolverState:
    """Seeded starting point: random unit-column factors, projected core.

    Factor entries are uniform on [0, 1) with each column scaled to unit
    Euclidean norm; the core is the filled tensor contracted with every
    factor transpose; missing cells of the tensor iterate start at zero or
    the observed mean per the config.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    dims = x0.shape
    core_dims = tuple(cfg.core_dims) if cfg.core_dims is not None else dims
    if len(core_dims) != len(dims) or any(
        not 1 <= r for r in core_dims
    ):
        raise ValueError(f"core_dims {core_dims} invalid for tensor dims {dims}")

    rng = np.random.default_rng(cfg.seed)
    factor_list = []
    for extent, rank in zip(dims, core_dims):
        u = rng.random((extent, rank))
        norms = np.linalg.norm(u, axis=0)
        u /= np.where(norms > 0, norms, 1.0)
        factor_list.append(u)

    regularizers = []
    for mode, prior in enumerate(priors):
        reg = ModeRegularizer.from_prior(prior)
        if reg.kind != "none" and reg.prior.grad_matrix.shape != (dims[mode], dims[mode]):
            raise ValueError(
                f"prior at mode {mode} sized {reg.prior.grad_matrix.shape}, "
                f"expected {(dims[mode], dims[mode])}"
            )
        regularizers.append(reg)

    if cfg.missing_fill == "observed-mean":
        fill = float(x0[observed].mean())
    else:
        fill = 0.0
    x = np.where(observed, x0, fill)
    core = _project_to_core(x, factor_list)
    return SolverState(x=x, core=core, factors=FactorSet(factor_list, regularizers))


def solve(x0, mask, priors=None, cfg: SolverConfig | None = None):
    """Impute a partially observed tensor; returns ``(xhat, state)``.

    ``mask`` is a boolean observation array (or an object exposing one as
    ``.observed``); ``priors`` is an optional per-mode sequence of
    :class:`~strtd.priors.PriorMatrix` or None entries. The returned tensor
    carries the observed data unchanged and the final reconstruction on the
    missing cells; ``state.trace`` holds the per-iteration records.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    observed = np.asarray(getattr(mask, "observed", mask), dtype=bool)
    if observed.shape != x0.shape:
        raise ValueError(f"mask shape {observed.shape} does not match tensor {x0.shape}")
    if not observed.any():
        raise ValueError("observation mask is empty; nothing to fit")
    if not np.all(np.isfinite(x0[observed])):
        raise ValueError("observed entries contain non-finite values")
    cfg = cfg or SolverConfig()
    if priors is None:
        priors = [None] * x0.ndim
    if len(priors) != x0.ndim:
        raise ValueError(f"expected {x0.ndim} per-mode priors, got {len(priors)}")

    state = initialize_state(x0, observed, priors, cfg)
    z = reconstruct(state.core, state.factors.factors)
    for _ in range(cfg.max_iters):
        state.iteration += 1
        f_cur, omega, lips_record, step_norm = _sweep_blocks(state, cfg.alpha)
        z = reconstruct(state.core, state.factors.factors)
        if not np.isfinite(f_cur) or not np.all(np.isfinite(z)):
            raise FloatingPointError(
                f"non-finite values at iteration {state.iteration}; "
                "check data scaling and priors"
            )
        f_obs = objective_observed(state.x, state.core, state.factors, cfg.alpha, observed)
        state.trace.append(
            TraceRecord(
                iteration=state.iteration,
                objective=f_cur,
                objective_observed=f_obs,
                rse=observed_rse(z, x0, observed),
                omega=omega,
                lipschitz=lips_record,
                step_norm=step_norm,
            )
        )
        state.x = feedback_update(state.x, x0, z, observed, cfg.gamma)
        reason = check_stop(z, x0, observed, cfg.tol, state.objective_observed_trace)
        if reason is not StopReason.CONTINUE:
            state.stop_reason = reason
            break
    else:
        state.stop_reason = StopReason.MAX_ITERS

    state.recon = z
    xhat = np.where(observed, x0, z)
    return xhat, state
