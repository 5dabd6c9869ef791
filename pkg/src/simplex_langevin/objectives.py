"""Objective functions: benchmark suite, portfolio loss, and gradient checks.

Six bundled nonconvex benchmarks (f1..f6) over 3-, 5-, and 6-dimensional
simplices, each with an analytic gradient and a published optimum location;
a higher-moment portfolio loss over return panels; and a central-difference
oracle for validating any gradient implementation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Objective",
    "PortfolioLoss",
    "TEST_FUNCTION_IDS",
    "test_function",
    "eval_test_function",
    "grad_test_function",
    "portfolio_moments",
    "portfolio_loss",
    "portfolio_loss_grad",
    "portfolio_objective",
    "finite_difference_gradient",
]


@dataclass(frozen=True)
class Objective:
    """A differentiable objective over a product of simplices.

    ``block_dims`` partitions the ``dim`` coordinates into independent
    simplex blocks (a single block for every bundled benchmark).
    ``known_optimum`` is an optional (point, value) pair.
    """

    name: str
    dim: int
    block_dims: tuple[int, ...]
    eval_fn: Callable[[np.ndarray], float] = field(repr=False)
    grad_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    known_optimum: Optional[tuple[np.ndarray, float]] = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.block_dims or sum(self.block_dims) != self.dim:
            raise ValueError("block_dims must be nonempty and sum to dim")
        if any(b < 1 for b in self.block_dims):
            raise ValueError("each block must have dimension >= 1")

    def value(self, point) -> float:
        return float(self.eval_fn(np.asarray(point, dtype=float)))

    def gradient(self, point) -> np.ndarray:
        return self.grad_fn(np.asarray(point, dtype=float))

    __call__ = value


# ---------------------------------------------------------------------------
# benchmark functions
# ---------------------------------------------------------------------------

def _double_well_log(p, qa, ca, qb, cb):
    """-ln(e^a + e^b) for two concave quadratic exponents, with gradients.

    a = -Σ qa_i (p_i - ca_i)², b likewise; returns (value, grad) where
    grad = -(w_a ∇a + w_b ∇b) for the softmax weights w.
    """
    da = p - ca
    db = p - cb
    a = -float((qa * da * da).sum())
    b = -float((qb * db * db).sum())
    m = a if a >= b else b
    ea = math.exp(a - m)
    eb = math.exp(b - m)
    s = ea + eb
    value = -(m + math.log(s))
    wa = ea / s
    wb = eb / s
    grad = wa * (2.0 * qa * da) + wb * (2.0 * qb * db)
    return value, grad


_F1_QA = np.array([10.0, 20.0, 30.0])
_F1_CA = np.array([0.3, 0.5, 0.2])
_F1_QB = np.array([30.0, 20.0, 36.0])
_F1_CB = np.array([0.4, 0.2, 0.4])


def _f1_value(p: np.ndarray) -> float:
    v, _ = _double_well_log(p, _F1_QA, _F1_CA, _F1_QB, _F1_CB)
    return v + p[1] + 10.0


def _f1_grad(p: np.ndarray) -> np.ndarray:
    _, g = _double_well_log(p, _F1_QA, _F1_CA, _F1_QB, _F1_CB)
    g[1] += 1.0
    return g


_F2_QA = np.array([15.0, 60.0, 10.0])
_F2_CA = np.array([0.4, 0.4, 0.2])
_F2_QB = np.array([3.0, 2.0, 6.0])
_F2_CB = np.array([0.4, 0.2, 0.4])


def _f2_value(p: np.ndarray) -> float:
    v, _ = _double_well_log(p, _F2_QA, _F2_CA, _F2_QB, _F2_CB)
    return v + p[1]


def _f2_grad(p: np.ndarray) -> np.ndarray:
    _, g = _double_well_log(p, _F2_QA, _F2_CA, _F2_QB, _F2_CB)
    g[1] += 1.0
    return g


def _f3_value(p: np.ndarray) -> float:
    x, y, z = p.tolist()
    return ((x - 0.3) ** 2 * (x - 0.9) ** 2
            + (y - 0.2) ** 2 * (y - 0.7) ** 2
            + (z - 0.6) ** 2 * (z - 0.1) ** 2
            + (x - 0.3) * (y - 0.5))


def _f3_grad(p: np.ndarray) -> np.ndarray:
    x, y, z = p.tolist()
    gx = 2.0 * (x - 0.3) * (x - 0.9) ** 2 + 2.0 * (x - 0.3) ** 2 * (x - 0.9) + (y - 0.5)
    gy = 2.0 * (y - 0.2) * (y - 0.7) ** 2 + 2.0 * (y - 0.2) ** 2 * (y - 0.7) + (x - 0.3)
    gz = 2.0 * (z - 0.6) * (z - 0.1) ** 2 + 2.0 * (z - 0.6) ** 2 * (z - 0.1)
    return np.array([gx, gy, gz])


def _f4_value(p: np.ndarray) -> float:
    x, y, z = p.tolist()
    return (-((x - 0.6) ** 2) * (x - 0.2) ** 2
            + (y - 0.3) * (y - 0.4) ** 3
            + (z - 0.2) ** 3 * (z - 0.8)
            - x * y - 0.4 * z)


def _f4_grad(p: np.ndarray) -> np.ndarray:
    x, y, z = p.tolist()
    gx = -(2.0 * (x - 0.6) * (x - 0.2) ** 2 + 2.0 * (x - 0.6) ** 2 * (x - 0.2)) - y
    gy = (y - 0.4) ** 3 + 3.0 * (y - 0.3) * (y - 0.4) ** 2 - x
    gz = 3.0 * (z - 0.2) ** 2 * (z - 0.8) + (z - 0.2) ** 3 - 0.4
    return np.array([gx, gy, gz])


def _f5_value(p: np.ndarray) -> float:
    x, y, z, w, v = p.tolist()
    return ((x - 0.6) ** 2 * (x - 0.2) ** 2 - x * y
            + (y - 0.3) ** 2 * (y - 0.4) ** 2
            + (z - 0.2) ** 4 - 0.5 * z * w
            + (w - 0.5) ** 4 + (v - 0.3) ** 4)


def _f5_grad(p: np.ndarray) -> np.ndarray:
    x, y, z, w, v = p.tolist()
    gx = 2.0 * (x - 0.6) * (x - 0.2) ** 2 + 2.0 * (x - 0.6) ** 2 * (x - 0.2) - y
    gy = -x + 2.0 * (y - 0.3) * (y - 0.4) ** 2 + 2.0 * (y - 0.3) ** 2 * (y - 0.4)
    gz = 4.0 * (z - 0.2) ** 3 - 0.5 * w
    gw = -0.5 * z + 4.0 * (w - 0.5) ** 3
    gv = 4.0 * (v - 0.3) ** 3
    return np.array([gx, gy, gz, gw, gv])


def _f6_value(p: np.ndarray) -> float:
    x, y, z, w, v, h = p.tolist()
    return ((x - 0.6) ** 2 * (x - 0.8)
            + (y - 0.9) * (y - 0.4) ** 2
            + (z - 0.2) ** 2
            + (v - 0.6) ** 2 + (w - 0.5) ** 2 - 0.5 * v * w
            + (h - 0.5) ** 2)


def _f6_grad(p: np.ndarray) -> np.ndarray:
    x, y, z, w, v, h = p.tolist()
    gx = 2.0 * (x - 0.6) * (x - 0.8) + (x - 0.6) ** 2
    gy = (y - 0.4) ** 2 + 2.0 * (y - 0.9) * (y - 0.4)
    gz = 2.0 * (z - 0.2)
    gw = 2.0 * (w - 0.5) - 0.5 * v
    gv = 2.0 * (v - 0.6) - 0.5 * w
    gh = 2.0 * (h - 0.5)
    return np.array([gx, gy, gz, gw, gv, gh])


# published optimum locations for the bundled benchmarks
_LISTED_OPTIMA = {
    "f1": (0.4049, 0.1969, 0.3981),
    "f2": (0.3804, 0.3736, 0.2461),
    "f3": (1.0, 0.0, 0.0),
    "f4": (0.0008, 0.1464, 0.8527),
    "f5": (0.5111, 0.4889, 0.0, 0.0, 0.0),
    "f6": (0.0, 0.0, 0.0182, 0.5309, 0.4509, 0.0),
}

_TEST_FUNCTIONS: dict[str, tuple[Callable, Callable, int]] = {
    "f1": (_f1_value, _f1_grad, 3),
    "f2": (_f2_value, _f2_grad, 3),
    "f3": (_f3_value, _f3_grad, 3),
    "f4": (_f4_value, _f4_grad, 3),
    "f5": (_f5_value, _f5_grad, 5),
    "f6": (_f6_value, _f6_grad, 6),
}

TEST_FUNCTION_IDS = tuple(_TEST_FUNCTIONS)


def test_function(fid: str) -> Objective:
    """Build the benchmark objective ``fid`` ("f1".."f6").

    The returned objective's ``known_optimum`` holds the published optimum
    location and the function value at it.
    """
    try:
        value_fn, grad_fn, dim = _TEST_FUNCTIONS[fid]
    except KeyError:
        raise ValueError(
            f"unknown test function {fid!r}; expected one of {TEST_FUNCTION_IDS}"
        ) from None
    opt = np.array(_LISTED_OPTIMA[fid], dtype=float)
    return Objective(
        name=fid,
        dim=dim,
        block_dims=(dim,),
        eval_fn=value_fn,
        grad_fn=grad_fn,
        known_optimum=(opt, float(value_fn(opt))),
    )


def eval_test_function(fid: str, point) -> float:
    """Evaluate benchmark ``fid`` at ``point``."""
    value_fn, _, _ = _require(fid, point)
    return float(value_fn(np.asarray(point, dtype=float)))


def grad_test_function(fid: str, point) -> np.ndarray:
    """Analytic Euclidean gradient of benchmark ``fid`` at ``point``."""
    _, grad_fn, _ = _require(fid, point)
    return grad_fn(np.asarray(point, dtype=float))


def _require(fid: str, point):
    try:
        entry = _TEST_FUNCTIONS[fid]
    except KeyError:
        raise ValueError(
            f"unknown test function {fid!r}; expected one of {TEST_FUNCTION_IDS}"
        ) from None
    p = np.asarray(point, dtype=float)
    if p.shape != (entry[2],):
        raise ValueError(f"{fid} expects a vector of length {entry[2]}, got {p.shape}")
    return entry


# ---------------------------------------------------------------------------
# portfolio loss
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PortfolioLoss:
    """Higher-moment portfolio loss over a T×n panel of simple returns.

    With p = returns @ w the per-period portfolio return series, m_1 its
    sample mean and m_k (k >= 2) its k-th biased (divide-by-T) sample central
    moment, the loss is Σ_k (−1)^k λ_k m_k — mean is rewarded, variance
    penalized, skewness rewarded, and so on with alternating signs.
    """

    returns: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "returns", np.asarray(self.returns, dtype=float))
        object.__setattr__(self, "lambdas", np.asarray(self.lambdas, dtype=float))
        r, lam = self.returns, self.lambdas
        if r.ndim != 2 or r.shape[0] < 2 or r.shape[1] < 1:
            raise ValueError("returns must be a T×n matrix with T >= 2")
        if not np.isfinite(r).all():
            raise ValueError("returns must be finite")
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("lambdas must be a nonempty vector")
        if (lam < 0.0).any() or not np.isfinite(lam).all():
            raise ValueError("lambdas must be nonnegative and finite")
        if abs(float(lam.sum()) - 1.0) > 1e-9:
            raise ValueError("lambdas must sum to 1 within 1e-9")

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    @property
    def order(self) -> int:
        return self.lambdas.size


def _moment_signs(d: int) -> np.ndarray:
    # coefficient of m_k is (-1)^k · λ_k
    return np.array([(-1.0) ** k for k in range(1, d + 1)])


def portfolio_moments(loss: PortfolioLoss, w) -> np.ndarray:
    """Sample moments (m_1, ..., m_d) of the portfolio return series at ``w``."""
    w = np.asarray(w, dtype=float)
    p = loss.returns @ w
    mu = p.mean()
    out = np.empty(loss.order)
    out[0] = mu
    c = p - mu
    for k in range(2, loss.order + 1):
        out[k - 1] = (c ** k).mean()
    return out


def portfolio_loss(loss: PortfolioLoss, w) -> float:
    """Loss value Σ_k (−1)^k λ_k m_k(w)."""
    m = portfolio_moments(loss, w)
    return float((_moment_signs(loss.order) * loss.lambdas * m).sum())


def portfolio_loss_grad(loss: PortfolioLoss, w) -> np.ndarray:
    """Euclidean gradient of :func:`portfolio_loss` in ``w``.

    ∂m_1/∂w is the column mean of the panel; for k >= 2,
    ∂m_k/∂w = (k/T)·Σ_t (p_t − μ)^{k−1} (r_t − r̄).
    """
    w = np.asarray(w, dtype=float)
    r = loss.returns
    t_count = r.shape[0]
    rbar = r.mean(axis=0)
    p = r @ w
    c = p - p.mean()
    centered = r - rbar
    signs = _moment_signs(loss.order)
    grad = signs[0] * loss.lambdas[0] * rbar
    for k in range(2, loss.order + 1):
        if loss.lambdas[k - 1] == 0.0:
            continue
        dm = (k / t_count) * (c ** (k - 1)) @ centered
        grad = grad + signs[k - 1] * loss.lambdas[k - 1] * dm
    return grad


def portfolio_objective(loss: PortfolioLoss, name: str = "portfolio") -> Objective:
    """Wrap a :class:`PortfolioLoss` as a single-block :class:`Objective`."""
    return Objective(
        name=name,
        dim=loss.n_assets,
        block_dims=(loss.n_assets,),
        eval_fn=lambda p: portfolio_loss(loss, p),
        grad_fn=lambda p: portfolio_loss_grad(loss, p),
    )


# ---------------------------------------------------------------------------
# gradient oracle
# ---------------------------------------------------------------------------

def finite_difference_gradient(fun, point, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient oracle.

    Args:
        fun: callable mapping a 1-D array to a float (an :class:`Objective`
            works directly), evaluated at 2n perturbed points.
        point: where to differentiate.
        step: perturbation size h; error is O(h²) for smooth ``fun``.
    """
    f = fun.value if isinstance(fun, Objective) else fun
    x = np.asarray(point, dtype=float)
    if step <= 0.0:
        raise ValueError("step must be positive")
    grad = np.empty(x.size)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (f(hi) - f(lo)) / (2.0 * step)
    return grad
