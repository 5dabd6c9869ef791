"""Simplex geometry under the inverse-coordinate (Shahshahani) metric.

The open probability simplex carries the Riemannian metric g_ii(x) = 1/x_i.
This module provides the primitives every optimizer in the package is built
from: metric gradients, the exponential/logarithmic maps, the Ito correction
drift of the metric Brownian motion, multiplicative Gaussian noise draws, the
normalizing retraction that keeps iterates on the simplex, and the exact
Euclidean projection used by the projected-Langevin baseline.

All functions operate on plain 1-D float64 numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_FLOOR = 1e-12
SUM_TOL = 1e-9


class DegeneratePointError(ValueError):
    """A coordinate sits below the positivity floor, so 1/x_i terms blow up."""


class RetractionFailureError(RuntimeError):
    """A raw update could not be renormalized (component sum <= floor)."""


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector at ``base``: components sum to zero (within 1e-9)."""

    base: np.ndarray
    components: np.ndarray

    def __post_init__(self) -> None:
        if self.base.shape != self.components.shape:
            raise ValueError("base and components must have the same shape")
        total = float(self.components.sum())
        if not math.isfinite(total) or abs(total) > SUM_TOL:
            raise ValueError(f"tangent components must sum to 0, got {total!r}")


@dataclass(frozen=True)
class NoiseDraw:
    """One (or a batch of) multiplicative Gaussian noise draw(s).

    ``values = drift_part + gauss_part`` holds exactly, componentwise: the
    fields are stored as the two addends and their literal float sum.
    """

    values: np.ndarray
    drift_part: np.ndarray
    gauss_part: np.ndarray


def simplex_point(values, *, tol: float = SUM_TOL) -> np.ndarray:
    """Validate and return a strictly positive probability vector.

    Args:
        values: array-like of coordinates.
        tol: allowed deviation of the coordinate sum from 1.

    Returns:
        A fresh float64 array.

    Raises:
        ValueError: non-1-D input, nonfinite entries, any coordinate <= 0,
            or the sum off 1 by more than ``tol``.
    """
    x = np.array(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("a simplex point must be a nonempty 1-D vector")
    if not np.isfinite(x).all():
        raise ValueError("simplex coordinates must be finite")
    if not (x > 0.0).all():
        raise ValueError("simplex coordinates must be strictly positive")
    total = float(x.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"coordinates must sum to 1 within {tol}, got {total!r}")
    return x


def is_simplex_point(x: np.ndarray, *, tol: float = SUM_TOL) -> bool:
    """True iff ``x`` is a finite, strictly positive vector summing to 1±tol."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.isfinite(x).all():
        return False
    return bool((x > 0.0).all() and abs(float(x.sum()) - 1.0) <= tol)


def barycenter(n: int) -> np.ndarray:
    """The uniform point (1/n, ..., 1/n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return np.full(n, 1.0 / n)


def shahshahani_gradient(x: np.ndarray, euclid_grad: np.ndarray) -> np.ndarray:
    """Metric gradient at ``x``: the componentwise product x_i * g_i.

    Inverting the 1/x_i metric turns the Euclidean partials ``euclid_grad``
    into the direction multiplicative updates follow.

    Raises:
        ValueError: on dimension mismatch.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(euclid_grad, dtype=float)
    if x.shape != g.shape:
        raise ValueError(f"dimension mismatch: point {x.shape} vs gradient {g.shape}")
    return x * g


def exp_map(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Exponential-family retraction: Exp_x(v)_i = x_i e^{v_i} / Σ_j x_j e^{v_j}.

    The map is invariant under shifting ``v`` by a constant vector; the
    largest component is subtracted before exponentiating so large shifts
    cannot overflow.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape:
        raise ValueError(f"dimension mismatch: point {x.shape} vs tangent {v.shape}")
    w = x * np.exp(v - v.max())
    return w / w.sum()


def log_map(x: np.ndarray, y: np.ndarray) -> TangentVector:
    """Inverse of :func:`exp_map`: the centered log-ratio of ``y`` over ``x``.

    Returns the unique zero-sum ``v`` with ``exp_map(x, v) == y``:
    v_i = ln(y_i/x_i) − (1/n)·Σ_j ln(y_j/x_j).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not ((x > 0.0).all() and (y > 0.0).all()):
        raise ValueError("log_map requires strictly positive points")
    r = np.log(y) - np.log(x)
    return TangentVector(base=x.copy(), components=r - r.mean())


def distance_sq_barycenter(x: np.ndarray) -> float:
    """Squared metric distance from the uniform point, n · Σ_i ln(n·x_i)².

    Zero exactly at the barycenter and symmetric under coordinate
    permutations (the squares are accumulated with an exactly rounded sum).
    Note this closed form agrees with n·‖log_map(barycenter, x)‖² only when
    the geometric mean of ``x`` equals 1/n; elsewhere it is larger, because
    the log coordinates ln(n·x_i) are not centered.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected a nonempty 1-D vector")
    if not (x > 0.0).all():
        raise ValueError("distance requires strictly positive coordinates")
    n = x.size
    v = np.log(n * x)
    return n * math.fsum(float(t) for t in v * v)


def christoffel_drift(
    x: np.ndarray, eps: float, beta: float, *, floor: float = DEFAULT_FLOOR
) -> np.ndarray:
    """Ito correction drift of the metric Brownian motion at ``x``.

    drift_i = (ε / 2β) · (n + 1 − (1 + x_i) · S_x) with S_x = Σ_j 1/x_j.

    Args:
        x: strictly positive point, every coordinate >= ``floor``.
        eps: step size, > 0.
        beta: inverse temperature, > 0.
        floor: positivity floor below which the 1/x_j sums are untrusted.

    Raises:
        DegeneratePointError: any coordinate below ``floor``.
        ValueError: nonpositive ``eps`` or ``beta``.
    """
    x = np.asarray(x, dtype=float)
    if eps <= 0.0 or beta <= 0.0:
        raise ValueError("eps and beta must be positive")
    if x.min() < floor:
        raise DegeneratePointError(
            f"coordinate {x.min():.3e} below floor {floor:.3e}"
        )
    n = x.size
    s = (1.0 / x).sum()
    return (0.5 * eps / beta) * (n + 1.0 - (1.0 + x) * s)


def sample_noise(
    x: np.ndarray,
    eps: float,
    beta: float,
    rng: np.random.Generator,
    *,
    floor: float = DEFAULT_FLOOR,
    size: int | None = None,
) -> NoiseDraw:
    """Draw the per-step noise V: christoffel drift plus √(2εβ⁻¹x_i)·z_i.

    ``z_i`` are IID standard normals from ``rng``. With ``size`` given, draws
    a batch with ``values`` of shape (size, n) sharing one drift evaluation
    (the drift is deterministic at ``x``); identical seeds give bit-identical
    draws either way.
    """
    x = np.asarray(x, dtype=float)
    drift = christoffel_drift(x, eps, beta, floor=floor)
    scale = np.sqrt((2.0 * eps / beta) * x)
    shape = x.shape if size is None else (int(size), x.size)
    gauss = scale * rng.standard_normal(shape)
    if size is not None:
        drift = np.broadcast_to(drift, gauss.shape)
    return NoiseDraw(values=drift + gauss, drift_part=drift, gauss_part=gauss)


def _pin_floor(y: np.ndarray, floor: float) -> np.ndarray:
    """Repair floor violations exactly: pin violating coordinates at the
    floor and rescale the rest so the total stays 1.

    Rescaling can push further coordinates under the floor, so the pinned
    set grows until stable (at most n passes). Keeping the pinned values
    exactly at the floor — instead of clamp-then-renormalize, which shrinks
    them again — leaves the sum within a few ulp of 1 no matter how much
    negative mass the input carried.
    """
    low = y < floor
    while True:
        free = ~low
        budget = 1.0 - floor * int(low.sum())
        if budget <= 0.0 or not free.any():
            raise RetractionFailureError(
                f"floor {floor:.3e} is too large for dimension {y.size}"
            )
        z = np.where(low, floor, y * (budget / y[free].sum()))
        grown = (z < floor) & free
        if not grown.any():
            return z
        low |= grown


def normalize_retraction(
    raw: np.ndarray, *, floor: float = DEFAULT_FLOOR
) -> tuple[np.ndarray, bool]:
    """Divide a raw update by its component sum and repair floor violations.

    Returns ``(point, clamped)`` where ``clamped`` reports whether any
    normalized coordinate fell below ``floor`` and was pinned to it (with
    the remaining coordinates rescaled). The result has every coordinate
    >= ``floor`` and sums to 1 within a few ulp.

    Raises:
        RetractionFailureError: component sum <= ``floor`` (caller should
            resample whatever noise produced ``raw``), or ``floor`` does not
            leave room for ``raw.size`` coordinates.
    """
    raw = np.asarray(raw, dtype=float)
    total = float(raw.sum())
    if not total > floor:
        raise RetractionFailureError(
            f"component sum {total!r} not above floor {floor:.3e}"
        )
    y = raw / total
    clamped = bool(y.min() < floor)
    if clamped:
        y = _pin_floor(y, floor)
    return y, clamped


def euclidean_simplex_projection(y: np.ndarray) -> np.ndarray:
    """Exact Euclidean projection of ``y`` onto the closed unit simplex.

    Sorted-threshold algorithm: with u the coordinates sorted descending and
    rho the largest k such that u_k − (Σ_{j<=k} u_j − 1)/k > 0, the result is
    max(y − θ, 0) for θ = (Σ_{j<=rho} u_j − 1)/rho. Output coordinates may be
    exactly zero; use :func:`lift_to_interior` before metric operations.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("expected a nonempty 1-D vector")
    if not np.isfinite(y).all():
        raise ValueError("projection input must be finite")
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, y.size + 1)
    rho = int(np.nonzero(u - (css - 1.0) / k > 0.0)[0][-1])
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def lift_to_interior(x: np.ndarray, *, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """Raise zero/tiny coordinates to ``floor``, keeping the sum at 1.

    Turns a closed-simplex point (e.g. a projection output) into a strictly
    interior one; every output coordinate is >= ``floor``. Points already at
    or above the floor are returned unchanged.
    """
    x = np.asarray(x, dtype=float)
    if x.min() >= floor:
        return x
    return _pin_floor(x, floor)
