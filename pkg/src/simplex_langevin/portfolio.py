"""Returns ingestion and rolling-window out-of-sample portfolio evaluation.

A returns CSV (``date,asset1,...,assetn``) is loaded into a
:class:`ReturnPanel`; :func:`rolling_window_evaluate` slides a fitting window
over it, fits portfolio weights per window by minimizing the λ-weighted
moment loss with any supported optimizer, and scores each fit on the
following period. :func:`compare_methods` runs the full methods × presets
grid into one table.

Out-of-sample loss comes in two labeled variants (see ``VARIANTS``):
``literal`` applies the moment loss to the single next-period return, which
collapses to −λ₁·(ŵ·r_t) because central moments of one observation vanish;
``window-moments`` keeps that realized mean term but adds the higher-moment
terms evaluated on the fitting window.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .geometry import lift_to_interior
from .objectives import (
    PortfolioLoss,
    portfolio_loss,
    portfolio_moments,
    portfolio_objective,
)
from .optimizers import (
    LmwuConfig,
    Method,
    StepFailureError,
    StepSizeError,
    run_optimizer,
)

__all__ = [
    "DEFAULT_WINDOW",
    "DEFAULT_FIT_CONFIG",
    "VARIANTS",
    "RISK_PRESETS",
    "ReturnPanel",
    "ReturnsParseError",
    "RiskPreset",
    "EvaluationReport",
    "ScoreTable",
    "PortfolioFitError",
    "load_returns",
    "rolling_window_evaluate",
    "compare_methods",
]

DEFAULT_WINDOW = 1000

#: Fit budget used when the caller does not supply a config. The large step
#: size with a strong inverse temperature and a loose floor keeps the noisy
#: method stable even when the optimum sits on the simplex boundary.
DEFAULT_FIT_CONFIG = LmwuConfig(
    eps=1.0, beta=1e8, max_iters=600, seed=0, floor=1e-6
)

VARIANTS = ("literal", "window-moments")


class ReturnsParseError(ValueError):
    """Malformed returns CSV; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PortfolioFitError(RuntimeError):
    """A window fit failed; ``period`` is the 1-based panel row being scored."""

    def __init__(self, message: str, period: int):
        super().__init__(message)
        self.period = period


@dataclass(frozen=True)
class ReturnPanel:
    """T periods of simple returns for n assets, in file order."""

    dates: tuple[str, ...]
    asset_names: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.returns, dtype=float)
        object.__setattr__(self, "returns", r)
        if r.ndim != 2:
            raise ValueError("returns must be a T x n matrix")
        if r.shape != (len(self.dates), len(self.asset_names)):
            raise ValueError(
                f"returns shape {r.shape} does not match {len(self.dates)} "
                f"dates x {len(self.asset_names)} assets"
            )
        if not np.isfinite(r).all():
            raise ValueError("returns must be finite")
        if r.size and r.min() <= -1.0:
            raise ValueError("simple returns must be > -1")
        if len(set(self.dates)) != len(self.dates):
            raise ValueError("dates must be unique")

    @property
    def n_periods(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.asset_names)


@dataclass(frozen=True)
class RiskPreset:
    """Named nonnegative moment weights summing to one."""

    name: str
    lambdas: tuple[float, ...]

    def __post_init__(self) -> None:
        lam = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if not lam:
            raise ValueError("lambdas must be nonempty")
        if any(not math.isfinite(v) or v < 0.0 for v in lam):
            raise ValueError("lambdas must be nonnegative finite")
        if abs(math.fsum(lam) - 1.0) > 1e-9:
            raise ValueError("lambdas must sum to 1 within 1e-9")


RISK_PRESETS: Mapping[str, RiskPreset] = {
    p.name: p
    for p in (
        RiskPreset("increasing", tuple(np.arange(1.0, 6.0) / 15.0)),
        RiskPreset("degenerate", tuple(np.arange(5.0, 0.0, -1.0) / 15.0)),
        RiskPreset("mv", (1.0 / 2.0, 1.0 / 2.0, 0.0, 0.0, 0.0)),
        RiskPreset("mvs", (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0)),
        RiskPreset("mvsk", (1.0 / 4.0, 1.0 / 4.0, 1.0 / 4.0, 1.0 / 4.0, 0.0)),
        RiskPreset("equal", (1.0 / 5.0,) * 5),
    )
}


@dataclass(frozen=True)
class EvaluationReport:
    """One method x preset rolling evaluation.

    ``dates`` are the scored periods (panel rows ``window`` .. T−1), and
    ``score`` is the arithmetic mean of ``per_period_losses``.
    """

    method: str
    preset: str
    window: int
    variant: str
    dates: tuple[str, ...]
    per_period_losses: np.ndarray
    score: float
    runtime_seconds: float

    @property
    def periods(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ScoreTable:
    """methods x presets grid of reports; failed cells carry their error."""

    methods: tuple[Method, ...]
    presets: tuple[str, ...]
    reports: Mapping[tuple[str, str], EvaluationReport]
    failures: Mapping[tuple[str, str], Exception] = field(default_factory=dict)

    def score(self, method: Method | str, preset: str) -> float:
        return self.reports[(Method(method).value, preset)].score

    def iter_cells(
        self,
    ) -> Iterator[tuple[Method, str, EvaluationReport | None, Exception | None]]:
        for m in self.methods:
            for p in self.presets:
                key = (m.value, p)
                yield m, p, self.reports.get(key), self.failures.get(key)


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def load_returns(source: str | os.PathLike | IO) -> ReturnPanel:
    """Parse a returns CSV into a :class:`ReturnPanel`.

    Accepts a path or an open text/byte stream. Expected layout: header
    ``date,<asset1>,...,<assetn>`` then one row per period with dot-decimal
    returns. Rows keep file order.

    Raises:
        ReturnsParseError: empty input, malformed header, wrong cell count,
            non-numeric cell, non-finite or <= -1 return, or duplicate date;
            the message names the 1-based line.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return _parse_returns(fh)
    if isinstance(source, (bytes, bytearray)):
        return _parse_returns(io.StringIO(source.decode("utf-8")))
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return _parse_returns(io.StringIO(data))


def _parse_returns(fh: Iterable[str]) -> ReturnPanel:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ReturnsParseError("empty input", line=1) from None
    header = [c.strip() for c in header]
    if len(header) < 2 or header[0].lower() != "date":
        raise ReturnsParseError(
            "header must be 'date,<asset1>,...'", line=1
        )
    assets = tuple(header[1:])
    if any(not a for a in assets):
        raise ReturnsParseError("asset names must be nonempty", line=1)

    dates: list[str] = []
    seen: set[str] = set()
    rows: list[list[float]] = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw or all(not c.strip() for c in raw):
            continue  # blank line
        if len(raw) != len(header):
            raise ReturnsParseError(
                f"expected {len(header)} cells, got {len(raw)}", line=lineno
            )
        date = raw[0].strip()
        if not date:
            raise ReturnsParseError("empty date", line=lineno)
        if date in seen:
            raise ReturnsParseError(f"duplicate date {date!r}", line=lineno)
        seen.add(date)
        vals = []
        for cell in raw[1:]:
            try:
                v = float(cell)
            except ValueError:
                raise ReturnsParseError(
                    f"non-numeric return {cell.strip()!r}", line=lineno
                ) from None
            if not math.isfinite(v):
                raise ReturnsParseError(
                    f"non-finite return {cell.strip()!r}", line=lineno
                )
            if v <= -1.0:
                raise ReturnsParseError(
                    f"return {v!r} is <= -1", line=lineno
                )
            vals.append(v)
        dates.append(date)
        rows.append(vals)
    if not rows:
        raise ReturnsParseError("no data rows", line=2)
    return ReturnPanel(tuple(dates), assets, np.array(rows, dtype=float))


# ---------------------------------------------------------------------------
# rolling evaluation
# ---------------------------------------------------------------------------

def _window_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _out_of_sample_loss(
    loss_window: PortfolioLoss,
    lambdas: Sequence[float],
    w: np.ndarray,
    next_return: np.ndarray,
    variant: str,
) -> float:
    realized = float(w @ next_return)
    out = -lambdas[0] * realized
    if variant == "window-moments" and len(lambdas) > 1:
        m = portfolio_moments(loss_window, w)
        sign = -1.0
        for k in range(2, len(lambdas) + 1):
            sign = -sign
            out += sign * lambdas[k - 1] * float(m[k - 1])
    return out


def rolling_window_evaluate(
    panel: ReturnPanel,
    preset: RiskPreset,
    method: Method | str,
    cfg: LmwuConfig = DEFAULT_FIT_CONFIG,
    window: int = DEFAULT_WINDOW,
    *,
    variant: str = "literal",
    warm_start: bool = True,
) -> EvaluationReport:
    """Slide a fitting window over ``panel`` and score out of sample.

    For each period t = window+1 .. T (1-based): fit weights ŵ on the
    preceding ``window`` rows by minimizing the preset's moment loss with
    ``method``, then record the out-of-sample loss for row t under
    ``variant``. Each window fit draws its noise from a seed derived from
    ``cfg.seed`` and the window index, so reports are reproducible and the
    fit for period t never reads row t or later. The score is the mean
    per-period loss.

    Args:
        warm_start: start each fit from the previous window's weights
            (lifted to the floor) instead of the uniform portfolio.

    Raises:
        ValueError: window out of range (needs 2 <= window < T) or unknown
            variant.
        PortfolioFitError: an optimizer step failed; carries the scored
            period index.
    """
    method = Method(method)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r} (expected {VARIANTS})")
    t_total = panel.n_periods
    if window < 2:
        raise ValueError("window must be >= 2")
    if window >= t_total:
        raise ValueError(
            f"window {window} must be smaller than the panel length {t_total}"
        )

    n = panel.n_assets
    uniform = np.full(n, 1.0 / n)
    w_init = uniform
    losses = np.empty(t_total - window)
    started = time.perf_counter()
    for j in range(t_total - window):
        fit_rows = panel.returns[j : j + window]
        loss_window = PortfolioLoss(fit_rows, preset.lambdas)
        objective = portfolio_objective(
            loss_window, name=f"portfolio[{preset.name}]"
        )
        fit_cfg = replace(cfg, seed=_window_seed(cfg.seed, j))
        try:
            traj = run_optimizer(
                method, objective, lift_to_interior(w_init, floor=cfg.floor),
                fit_cfg,
            )
        except (StepFailureError, StepSizeError) as exc:
            raise PortfolioFitError(
                f"{method.value} fit failed for period {window + j + 1}: {exc}",
                period=window + j + 1,
            ) from exc
        w_hat = traj.final_point
        losses[j] = _out_of_sample_loss(
            loss_window, preset.lambdas, w_hat, panel.returns[window + j], variant
        )
        if warm_start:
            w_init = w_hat
    runtime = time.perf_counter() - started
    return EvaluationReport(
        method=method.value,
        preset=preset.name,
        window=window,
        variant=variant,
        dates=panel.dates[window:],
        per_period_losses=losses,
        score=float(losses.mean()),
        runtime_seconds=runtime,
    )


def compare_methods(
    panel: ReturnPanel,
    presets: Sequence[RiskPreset],
    methods: Sequence[Method | str],
    cfg: LmwuConfig = DEFAULT_FIT_CONFIG,
    window: int = DEFAULT_WINDOW,
    *,
    variant: str = "literal",
    warm_start: bool = True,
) -> ScoreTable:
    """Evaluate every method x preset cell into one :class:`ScoreTable`.

    Cells are independent: each gets a seed derived from ``cfg.seed`` and
    its grid position, and a failing cell is recorded in ``failures``
    instead of aborting the rest of the table.
    """
    methods = tuple(Method(m) for m in methods)
    reports: dict[tuple[str, str], EvaluationReport] = {}
    failures: dict[tuple[str, str], Exception] = {}
    for mi, method in enumerate(methods):
        for pi, preset in enumerate(presets):
            cell_seed = int(
                np.random.SeedSequence([cfg.seed, mi, pi]).generate_state(1)[0]
            )
            cell_cfg = replace(cfg, seed=cell_seed)
            key = (method.value, preset.name)
            try:
                reports[key] = rolling_window_evaluate(
                    panel, preset, method, cell_cfg, window,
                    variant=variant, warm_start=warm_start,
                )
            except (PortfolioFitError, ValueError) as exc:
                failures[key] = exc
    return ScoreTable(
        methods=methods,
        presets=tuple(p.name for p in presets),
        reports=reports,
        failures=failures,
    )
