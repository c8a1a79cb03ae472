"""Hammerstein operator of order k and the normalized consistency map.

Two function spaces are used:

* :class:`ClosedFormDensity` -- phi(t) = c1 + c2 theta e(t), the family that
  contains every continuous fixed point of ``H_k``.  Integrals against it are
  polynomial in the substituted variable w and are evaluated exactly.
* :class:`SampledDensity` -- values on a grid, interpolated in the variable
  w = cbrt(2 (t - 1/2)).  Candidate solutions f of the translation-invariant
  compatibility equation live here.

The two formulations are linked by :func:`lift_fixed_point`,
f(t) = (phi(t) / phi(0))^k.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Union

import numpy as np
from scipy.interpolate import BarycentricInterpolator, CubicSpline

from .errors import (
    CertificationError,
    DegenerateDenominatorError,
    DivergenceError,
    DomainError,
    ParameterError,
    PositivityError,
    QuadratureEvaluationError,
)
from .kernel import CBRT2, ModelParams, basis, kernel_eval, t_of_w, w_of_t
from .quadrature import DEFAULT_ORDER, gauss_legendre, substituted_nodes

DEFAULT_GRID_SIZE = 129
POSITIVITY_TOL = 1e-12
OVERFLOW_GUARD = 1e12
DENOMINATOR_TOL = 1e-300


def chebyshev_grid(n: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Chebyshev-Lobatto points on [0, 1] in increasing order, endpoints included."""
    if n < 2:
        raise ValueError("grid size must be >= 2")
    return 0.5 * (1.0 - np.cos(np.pi * np.arange(n) / (n - 1)))


def chebyshev_w_grid(n: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Grid in t whose w-images are Chebyshev-Lobatto points of [-1, 1]."""
    w = -np.cos(np.pi * np.arange(n) / (n - 1))
    if n % 2:
        w[n // 2] = 0.0
    t = t_of_w(w)
    t[0], t[-1] = 0.0, 1.0
    return t


@dataclass(frozen=True)
class ClosedFormDensity:
    """phi(t) = c1 + c2 * theta * cbrt(4 (t - 1/2))."""

    c1: float
    c2: float
    params: ModelParams

    def __call__(self, t):
        return self.c1 + self.c2 * self.params.theta * basis(t)

    def in_w(self, w):
        """phi as a function of the substituted variable; linear in w."""
        return self.c1 + self.c2 * self.params.theta * CBRT2 * np.asarray(w, dtype=float)

    @property
    def slope(self) -> float:
        """Coefficient a of phi = c1 + a w."""
        return self.c2 * self.params.theta * CBRT2

    @property
    def min_value(self) -> float:
        # phi is monotone in e(t), so the minimum sits at an endpoint
        return self.c1 - abs(self.slope)

    @property
    def is_positive(self) -> bool:
        return self.min_value > POSITIVITY_TOL

    def flipped(self) -> "ClosedFormDensity":
        """t -> phi(1 - t)."""
        return ClosedFormDensity(self.c1, -self.c2, self.params)


@dataclass(eq=False)
class SampledDensity:
    """Grid values of a function on [0, 1], interpolated in w.

    On the Chebyshev-in-w grid (the default) interpolation is by the global
    polynomial through the nodes; on any other grid by a cubic spline.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        g = self.grid
        if g.ndim != 1 or g.shape != self.values.shape or len(g) < 2:
            raise ValueError("grid and values must be 1-d arrays of equal length >= 2")
        if g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing from 0 to 1")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @classmethod
    def from_function(cls, func, n: int = DEFAULT_GRID_SIZE) -> "SampledDensity":
        grid = chebyshev_w_grid(n)
        return cls(grid, np.asarray(func(grid), dtype=float) * np.ones_like(grid))

    @cached_property
    def on_chebyshev_grid(self) -> bool:
        """True when the grid is the Chebyshev-in-w grid of its size."""
        return bool(np.allclose(self.grid, chebyshev_w_grid(len(self.grid)), rtol=0, atol=1e-14))

    @cached_property
    def _interpolant(self):
        w = w_of_t(self.grid)
        if self.on_chebyshev_grid:
            # polynomial interpolation is stable on Chebyshev nodes
            return BarycentricInterpolator(w, self.values)
        if len(w) < 4:
            return CubicSpline(w, self.values, bc_type="natural")
        return CubicSpline(w, self.values)

    def in_w(self, w):
        return self._interpolant(np.asarray(w, dtype=float))

    def __call__(self, t):
        out = self.in_w(w_of_t(t))
        return out[()] if np.ndim(out) == 0 else out

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def flipped(self) -> "SampledDensity":
        return SampledDensity(self.grid, self(1.0 - self.grid))

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        for line in header.splitlines():
            buf.write(f"# {line}\n")
        buf.write("t,value\n")
        for t, v in zip(self.grid, self.values):
            buf.write(f"{t:.17g},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledDensity":
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("t,"):
                continue
            t, v = line.split(",")[:2]
            rows.append((float(t), float(v)))
        if not rows:
            raise ValueError("no data rows in density CSV")
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1])


Density = Union[ClosedFormDensity, SampledDensity]


def _as_params(f: Density, params: ModelParams | None) -> ModelParams:
    if isinstance(f, ClosedFormDensity):
        return f.params
    if params is None:
        raise ParameterError("model parameters are required for a sampled density")
    return params


def _integration_nodes(f: Density, k: int):
    if isinstance(f, ClosedFormDensity):
        # integrand polynomial in w of degree k + 3 with the Jacobian and kernel
        order = max(16, (k + 5) // 2)
    else:
        order = DEFAULT_ORDER
    return substituted_nodes(gauss_legendre(order))


def _values_in_w(f: Density, w):
    vals = np.asarray(f.in_w(w), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureEvaluationError(float(t_of_w(w[i])), float(vals[i]))
    return vals


def apply_hammerstein(f: Density, t, params: ModelParams | None = None):
    """(H_k f)(t) = integral over u of K(t, u) f(u)^k; vectorized over ``t``."""
    params = _as_params(f, params)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~np.isfinite(t_arr)) or np.any((t_arr < 0) | (t_arr > 1)):
        raise DomainError("t must lie in [0, 1]")
    w, wts = _integration_nodes(f, params.k)
    fk = _values_in_w(f, w) ** params.k
    kmat = kernel_eval(params, t_arr[:, None], t_of_w(w)[None, :])
    out = kmat @ (wts * fk)
    return out[0] if np.ndim(t) == 0 else out


def hammerstein_residual(
    f: Density, norm_grid_size: int = DEFAULT_GRID_SIZE, params: ModelParams | None = None
) -> float:
    """sup over a Chebyshev grid of |H_k f - f|."""
    if norm_grid_size < 2:
        raise ValueError("norm_grid_size must be >= 2")
    grid = chebyshev_grid(norm_grid_size)
    hf = apply_hammerstein(f, grid, params)
    return float(np.max(np.abs(hf - np.asarray(f(grid)))))


def _kernel_moments(f: SampledDensity, params: ModelParams, t):
    w, wts = substituted_nodes(gauss_legendre(DEFAULT_ORDER))
    fv = _values_in_w(f, w)
    kmat = kernel_eval(params, np.asarray(t, dtype=float)[:, None], t_of_w(w)[None, :])
    return kmat @ (wts * fv)


def consistency_map(f: SampledDensity, params: ModelParams) -> SampledDensity:
    """Right-hand side (int K(t,u) f(u) du / int K(0,u) f(u) du)^k on f's grid."""
    if f.min_value <= 0:
        raise PositivityError("consistency map needs a strictly positive density")
    num = _kernel_moments(f, params, f.grid)
    den = _kernel_moments(f, params, np.array([0.0]))[0]
    if not den > DENOMINATOR_TOL:
        raise DegenerateDenominatorError(f"normalizing integral {den!r} is not positive")
    return SampledDensity(f.grid, (num / den) ** params.k)


def consistency_residual(f: SampledDensity, params: ModelParams) -> float:
    """sup over the grid of |consistency_map(f) - f|."""
    return float(np.max(np.abs(consistency_map(f, params).values - f.values)))


def lift_fixed_point(
    phi: ClosedFormDensity,
    grid: np.ndarray | None = None,
    residual_tol: float = 1e-9,
    consistency_tol: float = 1e-8,
) -> SampledDensity:
    """Map a positive fixed point of H_k to f = (phi / phi(0))^k.

    Raises :class:`PositivityError` if phi is not bounded away from zero and
    :class:`CertificationError` if either residual certificate fails.
    """
    if phi.min_value <= POSITIVITY_TOL:
        raise PositivityError(f"phi has minimum {phi.min_value!r} on [0, 1]")
    res = hammerstein_residual(phi)
    if res > residual_tol:
        raise CertificationError(f"phi is not a fixed point of H_k (residual {res:.3e})")
    grid = chebyshev_w_grid() if grid is None else np.asarray(grid, dtype=float)
    lifted = SampledDensity(grid, (phi(grid) / phi(0.0)) ** phi.params.k)
    cres = consistency_residual(lifted, phi.params)
    if cres > consistency_tol:
        raise CertificationError(f"lifted density fails the consistency check ({cres:.3e})")
    return lifted


class PicardResult(NamedTuple):
    density: SampledDensity
    iterations: int
    converged: bool


def picard_iterate(
    f0: SampledDensity, params: ModelParams, max_iters: int = 1000, tol: float = 1e-11
) -> PicardResult:
    """Iterate the normalized consistency map until the sup-change drops below ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    f = f0
    for it in range(1, max_iters + 1):
        nxt = consistency_map(f, params)
        if not np.all(np.isfinite(nxt.values)) or np.max(np.abs(nxt.values)) > OVERFLOW_GUARD:
            raise DivergenceError(f"iterate left the overflow guard after {it} steps")
        change = float(np.max(np.abs(nxt.values - f.values)))
        f = nxt
        if change < tol:
            return PicardResult(f, it, True)
    return PicardResult(f, max_iters, False)


def project_onto_family(f: SampledDensity, params: ModelParams):
    """Fit f^(1/k) by a + b e(t) and rescale onto a fixed point of H_k.

    Returns ``(phi, fit_error)`` where ``fit_error`` is the sup over the grid
    of |f^(1/k) - (a + b e(t))| and ``phi`` is the member of the closed-form
    family proportional to the fit that satisfies H_k phi = phi.
    """
    if f.min_value <= 0:
        raise PositivityError("projection needs a strictly positive density")
    g = f.values ** (1.0 / params.k)
    design = np.column_stack([np.ones_like(f.grid), basis(f.grid)])
    (a, b), *_ = np.linalg.lstsq(design, g, rcond=None)
    fit_error = float(np.max(np.abs(design @ np.array([a, b]) - g)))
    th = params.theta
    c2 = b / th if th > 0 else 0.0
    trial = ClosedFormDensity(float(a), float(c2), params)
    # e(1/2) = 0, so (H_k phi)(1/2) is the mass of phi^k
    mass = apply_hammerstein(trial, 0.5)
    if mass <= 0:
        return trial, fit_error
    scale = (trial.c1 / mass) ** (1.0 / (params.k - 1))
    return ClosedFormDensity(scale * trial.c1, scale * trial.c2, params), fit_error
