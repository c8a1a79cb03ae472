"""Model parameters, the spin basis function and the interaction kernel.

The kernel is

    K(t, u) = 1 + theta * cbrt(4 (t - 1/2) (u - 1/2)),   t, u in [0, 1],

which is what exp(beta * xi) reduces to for the chosen interaction
xi = log(1 + theta cbrt(...)) / beta.  The inverse temperature cancels, so
it is stored on :class:`ModelParams` for reporting but never used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

CBRT2 = 2.0 ** (1.0 / 3.0)
CBRT4 = 4.0 ** (1.0 / 3.0)


@dataclass(frozen=True)
class ModelParams:
    """Branching order ``k``, coupling ``theta`` in [0, 1) and inverse temperature ``beta``."""

    k: int
    theta: float
    beta: float = 1.0

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 2:
            raise ParameterError(f"branching order k must be an integer >= 2, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        theta = float(self.theta)
        if not (0.0 <= theta < 1.0):
            raise ParameterError(f"coupling theta must satisfy 0 <= theta < 1, got {self.theta!r}")
        object.__setattr__(self, "theta", theta)
        beta = float(self.beta)
        if not (beta > 0.0 and np.isfinite(beta)):
            raise ParameterError(f"inverse temperature beta must be positive, got {self.beta!r}")
        object.__setattr__(self, "beta", beta)

    def with_theta(self, theta: float) -> "ModelParams":
        return ModelParams(self.k, theta, self.beta)


def real_cbrt(x):
    """Real cube root, odd in ``x``.  Works on scalars and arrays."""
    # np.power is nan for negative bases; cbrt is the real branch
    out = np.cbrt(np.asarray(x, dtype=float))
    return out[()] if out.ndim == 0 else out


def _check_unit(t, name="t"):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return t


def basis(t):
    """e(t) = cbrt(4 (t - 1/2)), taking values in [-cbrt 2, cbrt 2]."""
    t = _check_unit(t)
    return real_cbrt(4.0 * (t - 0.5))


def kernel_eval(params: ModelParams, t, u):
    """K(t, u) = 1 + theta cbrt(4 (t - 1/2)(u - 1/2)); broadcasts over arrays."""
    t = _check_unit(t, "t")
    u = _check_unit(u, "u")
    return 1.0 + params.theta * real_cbrt(4.0 * (t - 0.5) * (u - 0.5))


def kernel_factorized(params: ModelParams, t, u):
    """Rank-one form 1 + theta e(t) e(u) / cbrt(4) of the same kernel."""
    return 1.0 + params.theta * basis(t) * basis(u) / CBRT4


def w_of_t(t):
    """Inverse of t = 1/2 + w^3/2; maps [0, 1] onto [-1, 1] and e(t) = cbrt(2) w."""
    return real_cbrt(2.0 * (np.asarray(t, dtype=float) - 0.5))


def t_of_w(w):
    w = np.asarray(w, dtype=float)
    return 0.5 + 0.5 * w**3
