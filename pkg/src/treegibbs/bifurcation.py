"""Coupling sweeps, positive-root counts and threshold bisection."""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, ParameterError, UnsupportedOrderError
from .kernel import ModelParams
from .reduction import (
    MomentPair,
    analytic_fixed_points,
    enumerate_fixed_points,
)

METHODS = ("analytic", "newton")


@dataclass
class SweepRow:
    theta: float
    count_positive: int
    roots: list[MomentPair]


@dataclass
class SweepTable:
    """Positive-fixed-point counts along a theta grid.

    ``roots`` in each row hold the positive roots only, constant one first.
    """

    k: int
    rows: list[SweepRow]
    method: str = "analytic"
    threshold_bracket: tuple[float, float] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([r.theta for r in self.rows])

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.count_positive for r in self.rows])

    def to_csv(self, header: str = "", threshold: float | None = None) -> str:
        """CSV with columns theta, count_positive, x_1, y_1, x_2, y_2, ...

        Rows with fewer roots than the widest row are padded with empty fields.
        """
        width = max((len(r.roots) for r in self.rows), default=0)
        buf = io.StringIO()
        for line in header.splitlines():
            buf.write(f"# {line}\n")
        cols = ["theta", "count_positive"]
        for i in range(1, width + 1):
            cols += [f"x_{i}", f"y_{i}"]
        buf.write(",".join(cols) + "\n")
        for r in self.rows:
            cells = [f"{r.theta:.17g}", str(r.count_positive)]
            for p in r.roots:
                cells += [f"{p.x:.17g}", f"{p.y:.17g}"]
            cells += [""] * (2 * (width - len(r.roots)))
            buf.write(",".join(cells) + "\n")
        if threshold is not None:
            buf.write(f"# threshold_estimate={threshold:.17g}\n")
        return buf.getvalue()


def _report(params: ModelParams, method: str, warm=None):
    if method == "analytic":
        return analytic_fixed_points(params)
    return enumerate_fixed_points(params, extra_starts=warm)


def _row(params: ModelParams, method: str, warm=None) -> SweepRow:
    rep = _report(params, method, warm)
    roots = [MomentPair(b.c1, b.c2) for b in rep.positive_branches()]
    return SweepRow(params.theta, rep.count_positive, roots)


def theta_grid(theta_min: float, theta_max: float, step: float) -> np.ndarray:
    n = int(np.floor((theta_max - theta_min) / step + 1e-9)) + 1
    return np.round(theta_min + step * np.arange(n), 12)


def find_bracket(thetas, counts) -> tuple[float, float] | None:
    """Last adjacent pair whose count jumps from 1 to more than 1."""
    bracket = None
    for i in range(len(thetas) - 1):
        if counts[i] == 1 and counts[i + 1] > 1:
            bracket = (float(thetas[i]), float(thetas[i + 1]))
    return bracket


def sweep(
    params_base: ModelParams,
    theta_min: float,
    theta_max: float,
    step: float,
    method: str = "analytic",
    mode: str = "serial",
    jobs: int = 1,
) -> SweepTable:
    """Count positive fixed points on an evenly spaced theta grid.

    ``mode="serial"`` with the Newton method warm-starts each row from the
    previous row's roots.  ``mode="parallel"`` treats rows independently and
    spreads them over ``jobs`` threads.
    """
    if not (0.0 <= theta_min < theta_max < 1.0):
        raise ParameterError("need 0 <= theta_min < theta_max < 1")
    if step <= 0:
        raise ParameterError("step must be positive")
    if method not in METHODS:
        raise ParameterError(f"method must be one of {METHODS}")
    if method == "analytic" and params_base.k not in (2, 3):
        raise UnsupportedOrderError("the analytic method needs k = 2 or 3")
    thetas = theta_grid(theta_min, theta_max, step)
    grid_params = [params_base.with_theta(float(t)) for t in thetas]

    if mode == "parallel" or method == "analytic":
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            rows = list(pool.map(lambda p: _row(p, method), grid_params))
    elif mode == "serial":
        rows, warm = [], None
        for p in grid_params:
            rep = _report(p, method, warm)
            warm = np.array([fp.pair for fp in rep.points]).reshape(-1, 2)
            roots = [MomentPair(b.c1, b.c2) for b in rep.positive_branches()]
            rows.append(SweepRow(p.theta, rep.count_positive, roots))
    else:
        raise ParameterError("mode must be 'serial' or 'parallel'")

    table = SweepTable(params_base.k, rows, method)
    table.threshold_bracket = find_bracket(table.thetas, table.counts)
    if params_base.k not in (2, 3):
        table.notes.append("conjectural: no proved threshold for this k")
    return table


def count_positive(params: ModelParams, method: str) -> int:
    return _report(params, method).count_positive


def refine_threshold(
    params_base: ModelParams,
    bracket: tuple[float, float],
    tol: float = 1e-6,
    method: str | None = None,
) -> float:
    """Bisect the positive-root count between the ends of ``bracket``."""
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if method is None:
        method = "analytic" if params_base.k in (2, 3) else "newton"
    lo, hi = map(float, bracket)
    if not (0.0 <= lo < hi < 1.0):
        raise BracketError(f"invalid bracket {bracket!r}")
    c_lo = count_positive(params_base.with_theta(lo), method)
    c_hi = count_positive(params_base.with_theta(hi), method)
    if c_lo == c_hi:
        raise BracketError(f"count is {c_lo} at both ends of {bracket!r}")
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if count_positive(params_base.with_theta(mid), method) == c_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def is_conjectural(k: int) -> bool:
    return k not in (2, 3)
