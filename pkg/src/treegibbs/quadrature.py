"""Gauss-Legendre integration on [0, 1] and on the cube-substituted interval.

Two routes to the same integral are provided.  ``integrate_unit`` works in the
spin variable u directly.  ``integrate_cube_substituted`` uses
u = 1/2 + w^3/2, under which cbrt(4 (u - 1/2)) = cbrt(2) w and
du = (3/2) w^2 dw, so integrands that are polynomial in the basis function
become polynomial in w and are integrated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from .errors import QuadratureEvaluationError

DEFAULT_ORDER = 64
POLYNOMIAL_ORDER = 16


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights on the reference interval [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        if self.order < 2 or len(self.nodes) != self.order or len(self.weights) != self.order:
            raise ValueError("rule needs order >= 2 nodes and matching weights")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


def _legendre_and_derivative(n: int, x: np.ndarray):
    p_prev, p = np.ones_like(x), x.copy()
    for j in range(2, n + 1):
        p_prev, p = p, ((2 * j - 1) * x * p - (j - 1) * p_prev) / j
    return p, n * (x * p - p_prev) / (x * x - 1.0)


@lru_cache(maxsize=None)
def gauss_legendre(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Cached Gauss-Legendre rule; exact for polynomials of degree <= 2*order - 1.

    Nodes come from Newton's method on the three-term recurrence started at
    the Tricomi approximation; weights are 2 / ((1 - x^2) P_n'(x)^2).
    """
    n = int(order)
    if n < 2:
        raise ValueError("order must be >= 2")
    i = np.arange(1, n + 1)
    x = -np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    # enforce the exact reflection symmetry of the rule
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w, n)


def _checked(f, points):
    vals = np.asarray(f(points), dtype=float)
    if vals.shape != points.shape:
        vals = np.broadcast_to(vals, points.shape)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureEvaluationError(float(points[i]), float(vals[i]))
    return vals


def unit_nodes(rule: QuadratureRule, breakpoints=(0.5,)):
    """Composite nodes and weights for [0, 1] split at ``breakpoints``."""
    edges = np.concatenate(([0.0], np.sort(np.asarray(breakpoints, dtype=float)), [1.0]))
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(a + half * (rule.nodes + 1.0))
        weights.append(half * rule.weights)
    return np.concatenate(nodes), np.concatenate(weights)


def integrate_unit(f, rule: QuadratureRule | None = None, breakpoints=(0.5,)) -> float:
    """Approximate the integral of ``f`` over [0, 1].

    The rule is applied on each piece of [0, 1] cut at ``breakpoints``.  The
    default cut at 1/2 puts the cube-root cusp of the basis function on a
    panel edge, where Gauss rules converge much faster than across it.
    ``f`` must accept an array of points.
    """
    rule = rule or gauss_legendre(DEFAULT_ORDER)
    u, wts = unit_nodes(rule, breakpoints)
    return float(np.dot(wts, _checked(f, u)))


def substituted_nodes(rule: QuadratureRule):
    """Nodes w in [-1, 1] and weights (3/2) w^2 W for integrals in the u-measure."""
    return rule.nodes, 1.5 * rule.nodes**2 * rule.weights


def integrate_cube_substituted(g, rule: QuadratureRule | None = None) -> float:
    """(3/2) * integral over [-1, 1] of g(w) w^2 dw, i.e. the u-integral of g(w(u))."""
    rule = rule or gauss_legendre(POLYNOMIAL_ORDER)
    w, wts = substituted_nodes(rule)
    return float(np.dot(wts, _checked(g, w)))
