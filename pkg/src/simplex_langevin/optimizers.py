"""Optimizer steps and run orchestration.

Four update rules over (products of) probability simplices:

* ``lmwu`` — multiplicative weights perturbed by metric Brownian noise with
  its Ito correction drift, resampling draws that would leave the simplex;
* ``linear-mwu`` — deterministic multiplicative weights, linear form;
* ``exp-mwu`` — deterministic multiplicative weights, exponential form;
* ``proj-langevin`` — Euclidean Langevin step followed by exact simplex
  projection (baseline).

``run_optimizer`` drives any of them for a fixed iteration count, recording
every iterate, and ``theoretical_step_bound`` / ``theoretical_iteration_budget``
evaluate the convergence-guarantee formulas for a given constant bundle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import (
    DEFAULT_FLOOR,
    SUM_TOL,
    RetractionFailureError,
    euclidean_simplex_projection,
    lift_to_interior,
    normalize_retraction,
    sample_noise,
    shahshahani_gradient,
)
from .objectives import Objective

__all__ = [
    "Method",
    "LmwuConfig",
    "TheoryBudget",
    "StepResult",
    "StepSizeError",
    "StepFailureError",
    "TrajectoryRecord",
    "Trajectory",
    "mwu_linear_step",
    "mwu_exponential_step",
    "lmwu_step",
    "lmwu_multi_step",
    "projected_langevin_step",
    "run_optimizer",
    "theoretical_step_bound",
    "theoretical_iteration_budget",
]


class Method(str, Enum):
    """Update rules accepted by :func:`run_optimizer` (and the CLI)."""

    LMWU = "lmwu"
    LINEAR_MWU = "linear-mwu"
    EXP_MWU = "exp-mwu"
    PROJECTED_LANGEVIN = "proj-langevin"


STOCHASTIC_METHODS = (Method.LMWU, Method.PROJECTED_LANGEVIN)


class StepSizeError(ValueError):
    """The step size made a multiplicative update factor nonpositive."""


class StepFailureError(RuntimeError):
    """A stochastic step could not produce a valid point.

    ``iteration`` and ``block`` are filled in by the caller that knows them
    (run loop / multi-block dispatcher); both may be None.
    """

    def __init__(self, message: str, iteration: int | None = None,
                 block: int | None = None):
        super().__init__(message)
        self.iteration = iteration
        self.block = block

    def __str__(self) -> str:
        where = []
        if self.iteration is not None:
            where.append(f"iteration {self.iteration}")
        if self.block is not None:
            where.append(f"block {self.block}")
        base = super().__str__()
        return f"{base} ({', '.join(where)})" if where else base


@dataclass(frozen=True)
class LmwuConfig:
    """Run configuration shared by all methods.

    ``beta`` is the inverse temperature (ignored by the deterministic
    methods), ``floor`` the positivity floor used for clamping and degeneracy
    checks, and ``resample_limit`` the number of extra noise draws allowed
    when a draw would push an iterate off the simplex.
    """

    eps: float
    beta: float
    max_iters: int
    seed: int = 0
    floor: float = DEFAULT_FLOOR
    resample_limit: int = 16

    def __post_init__(self) -> None:
        if not (math.isfinite(self.eps) and self.eps > 0.0):
            raise ValueError("eps must be a positive finite float")
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError("beta must be a positive finite float")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not (0.0 < self.floor < 1.0):
            raise ValueError("floor must lie in (0, 1)")
        if self.resample_limit < 0:
            raise ValueError("resample_limit must be >= 0")


@dataclass(frozen=True)
class TheoryBudget:
    """Constant bundle for the convergence-guarantee formulas.

    M, B bound the objective's smoothness/gradient, ``sigma`` the noise
    magnitude, ``alpha`` and ``C`` the log-Sobolev constants, ``delta`` the
    target accuracy. ``m``, ``b``, ``A``, ``K`` are dissipativity/regularity
    constants carried for documentation; only sign validation applies.
    """

    M: float
    B: float
    sigma: float
    alpha: float
    C: float
    delta: float
    m: float = 1.0
    b: float = 0.0
    A: float = 0.0
    K: float = 0.0

    def __post_init__(self) -> None:
        for name in ("M", "B", "sigma", "alpha", "C", "delta", "m", "b", "A", "K"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.M < 0 or self.B < 0 or self.sigma < 0:
            raise ValueError("M, B, sigma must be nonnegative")
        if self.alpha <= 0 or self.C <= 0 or self.delta <= 0:
            raise ValueError("alpha, C, delta must be positive")
        if self.m <= 0 or self.b < 0 or self.A < 0 or self.K < 0:
            raise ValueError("m must be positive; b, A, K nonnegative")


class StepResult(NamedTuple):
    """Point produced by a stochastic step plus what it took to get there."""

    point: np.ndarray
    clamped: bool
    resampled: bool


@dataclass(frozen=True)
class TrajectoryRecord:
    iteration: int
    point: np.ndarray
    f_value: float
    clamped: bool
    resampled: bool


@dataclass(frozen=True)
class Trajectory:
    """Array-backed record of a full run; index 0 is the initial point."""

    points: np.ndarray
    f_values: np.ndarray
    clamped: np.ndarray
    resampled: np.ndarray

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, k: int) -> TrajectoryRecord:
        return TrajectoryRecord(
            iteration=range(len(self))[k],
            point=self.points[k],
            f_value=float(self.f_values[k]),
            clamped=bool(self.clamped[k]),
            resampled=bool(self.resampled[k]),
        )

    @property
    def iters(self) -> int:
        return len(self) - 1

    @property
    def final_point(self) -> np.ndarray:
        return self.points[-1]

    @property
    def final_f(self) -> float:
        return float(self.f_values[-1])

    @property
    def best_f(self) -> float:
        return float(self.f_values.min())


# ---------------------------------------------------------------------------
# single-simplex steps
# ---------------------------------------------------------------------------

def mwu_linear_step(x: np.ndarray, grad: np.ndarray, eps: float) -> np.ndarray:
    """x_i ← x_i (1 − ε g_i) / (1 − ε Σ_j x_j g_j).

    The denominator is computed as the actual sum of the numerators (equal to
    the closed form whenever x sums to 1): dividing by the closed form instead
    lets the float-level sum error grow by a factor 1/denominator every
    iteration, which breaks the simplex invariant after a few hundred steps
    near a vertex.

    Raises:
        StepSizeError: some multiplier 1 − ε g_i is nonpositive, i.e. ``eps``
            is too large for this gradient.
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if x.shape != grad.shape:
        raise ValueError("point and gradient must have the same shape")
    mult = 1.0 - eps * grad
    if mult.min() <= 0.0:
        raise StepSizeError(
            f"eps={eps!r} makes a multiplier nonpositive (min {mult.min():.3e})"
        )
    numer = x * mult
    return numer / numer.sum()


def mwu_exponential_step(x: np.ndarray, grad: np.ndarray, eps: float) -> np.ndarray:
    """x_i ← x_i e^{−ε g_i} / Σ_j x_j e^{−ε g_j} (shift-guarded)."""
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if x.shape != grad.shape:
        raise ValueError("point and gradient must have the same shape")
    e = -eps * grad
    w = x * np.exp(e - e.max())
    return w / w.sum()


def lmwu_step(
    x: np.ndarray,
    grad: np.ndarray,
    cfg: LmwuConfig,
    rng: np.random.Generator,
) -> StepResult:
    """One noisy multiplicative-weights step on a single simplex.

    Numerators x_i − ε x_i g_i + V_i are normalized by their sum (which
    equals the 1 − ε Σ x_j g_j + Σ V_j denominator because x sums to one).
    A draw is rejected and resampled when the sum is <= floor or any
    numerator is nonpositive; after ``cfg.resample_limit`` extra draws the
    last numerator vector is clamped-and-renormalized instead (flagged), or,
    if its sum is still degenerate, the step fails.

    Raises:
        StepFailureError: resample budget exhausted with the component sum
            still <= floor.
    """
    x = np.asarray(x, dtype=float)
    base = x - cfg.eps * shahshahani_gradient(x, grad)
    numer = None
    total = -math.inf
    for attempt in range(cfg.resample_limit + 1):
        draw = sample_noise(x, cfg.eps, cfg.beta, rng, floor=cfg.floor)
        numer = base + draw.values
        total = float(numer.sum())
        if total > cfg.floor and numer.min() > 0.0:
            point, clamped = normalize_retraction(numer, floor=cfg.floor)
            return StepResult(point, clamped, attempt > 0)
    if total > cfg.floor:
        # salvageable: only sign violations remain, clamp them away
        point, _ = normalize_retraction(numer, floor=cfg.floor)
        return StepResult(point, True, True)
    raise StepFailureError(
        f"update denominator {total:.3e} stayed below floor after "
        f"{cfg.resample_limit} resamples"
    )


def lmwu_multi_step(
    x: np.ndarray,
    grad: np.ndarray,
    block_dims: Sequence[int],
    cfg: LmwuConfig,
    rngs: Sequence[np.random.Generator],
) -> StepResult:
    """Apply :func:`lmwu_step` independently to each simplex block.

    Each block consumes its own generator from ``rngs``, so results do not
    depend on block iteration order beyond the fixed block layout. With a
    single block this is bit-identical to ``lmwu_step`` on ``rngs[0]``.
    """
    x = np.asarray(x, dtype=float)
    if sum(block_dims) != x.size:
        raise ValueError("block dimensions must sum to the point dimension")
    if len(rngs) != len(block_dims):
        raise ValueError("need one RNG per block")
    grad = np.asarray(grad, dtype=float)
    out = np.empty_like(x)
    clamped = resampled = False
    start = 0
    for b, (dim, rng) in enumerate(zip(block_dims, rngs)):
        stop = start + dim
        try:
            res = lmwu_step(x[start:stop], grad[start:stop], cfg, rng)
        except StepFailureError as exc:
            exc.block = b
            raise
        out[start:stop] = res.point
        clamped |= res.clamped
        resampled |= res.resampled
        start = stop
    return StepResult(out, clamped, resampled)


def projected_langevin_step(
    x: np.ndarray,
    grad: np.ndarray,
    eps: float,
    beta: float,
    rng: np.random.Generator,
    *,
    floor: float = DEFAULT_FLOOR,
) -> np.ndarray:
    """Euclidean Langevin step, then exact projection back to the simplex.

    y = x − ε·grad + √(2εβ⁻¹)·z with IID standard normal z; the projection
    output has its zeros lifted to ``floor`` so metric operations stay
    defined downstream.
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if x.shape != grad.shape:
        raise ValueError("point and gradient must have the same shape")
    if eps <= 0.0 or beta <= 0.0:
        raise ValueError("eps and beta must be positive")
    y = x - eps * grad + math.sqrt(2.0 * eps / beta) * rng.standard_normal(x.size)
    return lift_to_interior(euclidean_simplex_projection(y), floor=floor)


# ---------------------------------------------------------------------------
# run loop
# ---------------------------------------------------------------------------

def _validate_init(init: np.ndarray, objective: Objective, cfg: LmwuConfig) -> np.ndarray:
    x = np.array(init, dtype=float)
    if x.shape != (objective.dim,):
        raise ValueError(
            f"init has shape {x.shape}, objective {objective.name!r} expects "
            f"({objective.dim},)"
        )
    start = 0
    for dim in objective.block_dims:
        block = x[start:start + dim]
        if not np.isfinite(block).all() or block.min() < cfg.floor:
            raise ValueError("init coordinates must be finite and >= floor")
        if abs(float(block.sum()) - 1.0) > SUM_TOL:
            raise ValueError("each init block must sum to 1 within 1e-9")
        start += dim
    return x


def _check_iterate(x: np.ndarray, block_dims: tuple[int, ...], k: int) -> None:
    start = 0
    for b, dim in enumerate(block_dims):
        block = x[start:start + dim]
        if abs(float(block.sum()) - 1.0) > SUM_TOL or block.min() <= 0.0:
            raise StepFailureError(
                f"iterate left the simplex (block sum {block.sum()!r}, "
                f"min coord {block.min()!r})", iteration=k, block=b,
            )
        start += dim


def run_optimizer(
    method: Method | str,
    objective: Objective,
    init,
    cfg: LmwuConfig,
) -> Trajectory:
    """Run ``method`` on ``objective`` from ``init`` for ``cfg.max_iters`` steps.

    Every iterate (including the initial point) is recorded with its
    objective value and the clamp/resample flags of the step that produced
    it. Runs are deterministic in (method, objective, init, cfg): stochastic
    methods derive one RNG substream per simplex block from ``cfg.seed``.

    Raises:
        StepFailureError: a stochastic step degenerated; carries the
            iteration index (and block, for multi-block objectives).
        StepSizeError: a linear MWU multiplier went nonpositive.
    """
    method = Method(method)
    x = _validate_init(init, objective, cfg)
    block_dims = objective.block_dims
    n_blocks = len(block_dims)

    if method in STOCHASTIC_METHODS:
        if n_blocks == 1:
            # the canonical stream for the seed, so single-simplex runs are
            # reproducible against a plain default_rng(seed) transcription
            rngs = [np.random.default_rng(cfg.seed)]
        else:
            rngs = [
                np.random.default_rng(np.random.SeedSequence([cfg.seed, b]))
                for b in range(n_blocks)
            ]
    else:
        rngs = []

    k_max = cfg.max_iters
    points = np.empty((k_max + 1, objective.dim))
    f_values = np.empty(k_max + 1)
    clamped = np.zeros(k_max + 1, dtype=bool)
    resampled = np.zeros(k_max + 1, dtype=bool)
    points[0] = x
    f_values[0] = objective.value(x)

    single = n_blocks == 1
    for k in range(1, k_max + 1):
        grad = objective.gradient(x)
        try:
            if method is Method.LMWU:
                if single:
                    res = lmwu_step(x, grad, cfg, rngs[0])
                else:
                    res = lmwu_multi_step(x, grad, block_dims, cfg, rngs)
                x, cl, rs = res
            elif method is Method.LINEAR_MWU:
                x = _blockwise(mwu_linear_step, x, grad, block_dims, cfg.eps)
                cl = rs = False
            elif method is Method.EXP_MWU:
                x = _blockwise(mwu_exponential_step, x, grad, block_dims, cfg.eps)
                cl = rs = False
            else:
                x = _pl_blockwise(x, grad, block_dims, cfg, rngs)
                cl = rs = False
        except StepFailureError as exc:
            if exc.iteration is None:
                exc.iteration = k
            raise
        _check_iterate(x, block_dims, k)
        points[k] = x
        f_values[k] = objective.value(x)
        clamped[k] = cl
        resampled[k] = rs
    return Trajectory(points, f_values, clamped, resampled)


def _blockwise(step_fn, x, grad, block_dims, eps):
    if len(block_dims) == 1:
        return step_fn(x, grad, eps)
    out = np.empty_like(x)
    start = 0
    for dim in block_dims:
        stop = start + dim
        out[start:stop] = step_fn(x[start:stop], grad[start:stop], eps)
        start = stop
    return out


def _pl_blockwise(x, grad, block_dims, cfg: LmwuConfig, rngs):
    if len(block_dims) == 1:
        return projected_langevin_step(
            x, grad, cfg.eps, cfg.beta, rngs[0], floor=cfg.floor
        )
    out = np.empty_like(x)
    start = 0
    for dim, rng in zip(block_dims, rngs):
        stop = start + dim
        out[start:stop] = projected_langevin_step(
            x[start:stop], grad[start:stop], cfg.eps, cfg.beta, rng, floor=cfg.floor
        )
        start = stop
    return out


# ---------------------------------------------------------------------------
# guarantee formulas
# ---------------------------------------------------------------------------

def theoretical_step_bound(tb: TheoryBudget) -> float:
    """Largest step size the convergence guarantee covers:
    δ²α / (8C(Mσ/2 + B))."""
    denom = 8.0 * tb.C * (0.5 * tb.M * tb.sigma + tb.B)
    if denom <= 0.0:
        raise ValueError("Mσ/2 + B must be positive")
    return (tb.delta ** 2) * tb.alpha / denom


def theoretical_iteration_budget(tb: TheoryBudget, eps: float) -> int:
    """Iterations the guarantee requires at step size ``eps``:
    ⌈(16/3ε)·ln(16(Mσ/2 + B)² / (δ²α))⌉, clamped below at 1."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    arg = 16.0 * (0.5 * tb.M * tb.sigma + tb.B) ** 2 / (tb.delta ** 2 * tb.alpha)
    if arg <= 0.0:
        raise ValueError("budget log argument must be positive")
    return max(1, math.ceil(16.0 / (3.0 * eps) * math.log(arg)))
