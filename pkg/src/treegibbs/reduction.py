"""Two-dimensional reduction of the Hammerstein equation.

Every continuous solution of H_k phi = phi has the form
phi(t) = x + y theta e(t) with (x, y) a fixed point of the polynomial map

    x' = int_0^1 phi(u)^k du,
    y' = int_0^1 cbrt(u - 1/2) phi(u)^k du.

With u = 1/2 + w^3/2 and a = y theta cbrt(2) this becomes

    x' = (3/2)          sum_j C(k, j) x^(k-j) a^j M_(j+2),
    y' = (3/2) / cbrt 2 sum_j C(k, j) x^(k-j) a^j M_(j+3),

M_m being the moments of w on [-1, 1].  That expansion is the primary
evaluation path; it stays regular at y = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb
from typing import Iterable, NamedTuple

import mpmath
import numpy as np

from .errors import ParameterError, SingularityError, UnsupportedOrderError
from .hammerstein import POSITIVITY_TOL, ClosedFormDensity, hammerstein_residual
from .kernel import CBRT2, ModelParams
from .quadrature import gauss_legendre, integrate_unit

SINGULAR_GUARD = 1e-8
ROOT_TOL = 1e-10
CLASS_TOL = 1e-9

TRIVIAL_ZERO = "trivial-zero"
CONSTANT_ONE = "constant-one"
POSITIVE = "positive-nontrivial"
SIGN_CHANGING = "sign-changing"
NEGATIVE = "negative"
POSITIVE_CLASSES = (CONSTANT_ONE, POSITIVE)


class MomentPair(NamedTuple):
    x: float
    y: float


def _moments(m_max: int) -> np.ndarray:
    m = np.arange(m_max + 1)
    return np.where(m % 2 == 0, 2.0 / (m + 1), 0.0)


@dataclass(frozen=True)
class _Coefficients:
    binom: np.ndarray
    mx: np.ndarray
    my: np.ndarray


def _coefficients(k: int) -> _Coefficients:
    j = np.arange(k + 1)
    mom = _moments(k + 3)
    binom = np.array([comb(k, int(i)) for i in j], dtype=float)
    return _Coefficients(binom, 1.5 * mom[j + 2], 1.5 / CBRT2 * mom[j + 3])


def apply_Vk(params: ModelParams, p) -> MomentPair:
    """Evaluate V_k at ``p = (x, y)`` by binomial expansion.

    ``x`` and ``y`` may be arrays of equal shape; the result then holds arrays.
    """
    x, y = (np.asarray(v, dtype=float) for v in p)
    k = params.k
    c = _coefficients(k)
    a = y * params.theta * CBRT2
    j = np.arange(k + 1)
    terms = c.binom * x[..., None] ** (k - j) * a[..., None] ** j
    return MomentPair(terms @ c.mx, terms @ c.my)


def jacobian_Vk(params: ModelParams, p) -> np.ndarray:
    """Jacobian of V_k, shape ``(..., 2, 2)`` with rows (x', y')."""
    x, y = (np.asarray(v, dtype=float) for v in p)
    k = params.k
    c = _coefficients(k)
    da_dy = params.theta * CBRT2
    a = y * da_dy
    j = np.arange(k + 1)
    xe = k - j
    dx_terms = c.binom * xe * x[..., None] ** np.maximum(xe - 1, 0) * a[..., None] ** j
    dy_terms = c.binom * j * x[..., None] ** xe * a[..., None] ** np.maximum(j - 1, 0) * da_dy
    jac = np.empty(x.shape + (2, 2))
    jac[..., 0, 0] = dx_terms @ c.mx
    jac[..., 0, 1] = dy_terms @ c.mx
    jac[..., 1, 0] = dx_terms @ c.my
    jac[..., 1, 1] = dy_terms @ c.my
    return jac


def apply_Vk_closedform(params: ModelParams, p, dps: int = 60) -> MomentPair:
    """The map written with (x +- y theta cbrt 2)^(k+j) divided by powers of y theta.

    Evaluated at ``dps`` decimal digits because the divided differences cancel
    catastrophically in double precision when y theta is small.
    """
    x, y = float(p[0]), float(p[1])
    th = params.theta
    if abs(y * th) <= SINGULAR_GUARD:
        raise SingularityError(f"|y theta| = {abs(y * th):.3e} is inside the singular guard")
    k = params.k
    with mpmath.workdps(dps):
        x, y, th = mpmath.mpf(x), mpmath.mpf(y), mpmath.mpf(th)
        c2 = mpmath.cbrt(2)
        c4 = mpmath.cbrt(4)
        s = y * th
        P, M = x + s * c2, x - s * c2
        k1, k2, k3, k4 = k + 1, (k + 1) * (k + 2), (k + 1) * (k + 2) * (k + 3), (k + 1) * (k + 2) * (k + 3) * (k + 4)
        xp = 3 * (
            (P ** (k + 1) - M ** (k + 1)) / (2 * c2 * k1 * s)
            - (P ** (k + 2) + M ** (k + 2)) / (c4 * k2 * s**2)
            + (P ** (k + 3) - M ** (k + 3)) / (2 * k3 * s**3)
        )
        yp = 3 * (
            (P ** (k + 1) + M ** (k + 1)) / (2 * c4 * k1 * s)
            - 3 * (P ** (k + 2) - M ** (k + 2)) / (4 * k2 * s**2)
            + 3 * (P ** (k + 3) + M ** (k + 3)) / (2 * c2 * k3 * s**3)
            - 3 * (P ** (k + 4) - M ** (k + 4)) / (2 * c4 * k4 * s**4)
        )
        return MomentPair(float(xp), float(yp))


def moments_by_quadrature(params: ModelParams, p, order: int = 4096) -> MomentPair:
    """Direct quadrature of both moment integrals in the spin variable u."""
    x, y = float(p[0]), float(p[1])
    th, k = params.theta, params.k
    rule = gauss_legendre(order)

    def phi_k(u):
        return (x + y * th * np.cbrt(4.0 * (u - 0.5))) ** k

    return MomentPair(
        integrate_unit(phi_k, rule),
        integrate_unit(lambda u: np.cbrt(u - 0.5) * phi_k(u), rule),
    )


def vk_residual(params: ModelParams, p) -> float:
    img = apply_Vk(params, p)
    return float(max(abs(img.x - p[0]), abs(img.y - p[1])))


def to_density(p, params: ModelParams) -> ClosedFormDensity:
    """phi(t) = x + y theta e(t)."""
    return ClosedFormDensity(float(p[0]), float(p[1]), params)


def classify(p, params: ModelParams) -> str:
    x, y = float(p[0]), float(p[1])
    if abs(x) < CLASS_TOL and abs(y) < CLASS_TOL:
        return TRIVIAL_ZERO
    if abs(x - 1.0) < CLASS_TOL and abs(y) < CLASS_TOL:
        return CONSTANT_ONE
    spread = abs(y) * params.theta * CBRT2
    if x - spread > POSITIVITY_TOL:
        return POSITIVE
    if -x - spread > POSITIVITY_TOL:
        return NEGATIVE
    return SIGN_CHANGING


@dataclass(frozen=True)
class FixedPoint:
    pair: MomentPair
    cls: str
    residual_vk: float
    residual_hk: float

    @property
    def is_positive(self) -> bool:
        return self.cls in POSITIVE_CLASSES


@dataclass
class FixedPointReport:
    """Fixed points of V_k at one parameter point.

    ``complete`` is True only when the root set is known to be exhaustive
    (closed-form enumeration at k = 2, 3).  Numerical enumeration reports what
    it found.
    """

    params: ModelParams
    points: list[FixedPoint]
    method: str = "analytic"
    complete: bool = False
    unconverged: int = 0

    @property
    def count_positive(self) -> int:
        return sum(fp.is_positive for fp in self.points)

    def positive_branches(self) -> list[ClosedFormDensity]:
        """Positive densities: the constant one first, then by decreasing y."""
        pos = [fp for fp in self.points if fp.is_positive]
        pos.sort(key=lambda fp: (fp.cls != CONSTANT_ONE, -fp.pair.y))
        return [to_density(fp.pair, self.params) for fp in pos]

    def to_dict(self) -> dict:
        return {
            "k": self.params.k,
            "theta": self.params.theta,
            "beta": self.params.beta,
            "method": self.method,
            "complete": self.complete,
            "unconverged": self.unconverged,
            "points": [
                {
                    "x": fp.pair.x,
                    "y": fp.pair.y,
                    "class": fp.cls,
                    "residual_vk": fp.residual_vk,
                    "residual_hk": fp.residual_hk,
                }
                for fp in self.points
            ],
            "count_positive": self.count_positive,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FixedPointReport":
        d = json.loads(text)
        params = ModelParams(d["k"], d["theta"], d.get("beta", 1.0))
        pts = [
            FixedPoint(MomentPair(q["x"], q["y"]), q["class"], q["residual_vk"], q["residual_hk"])
            for q in d["points"]
        ]
        rep = cls(params, pts, d.get("method", "analytic"), d.get("complete", False), d.get("unconverged", 0))
        if rep.count_positive != d["count_positive"]:
            raise ValueError("count_positive disagrees with the listed classes")
        return rep

    def to_table(self) -> str:
        lines = [f"{'x':>22} {'y':>22} {'class':>20} {'residual_vk':>12} {'residual_hk':>12}"]
        for fp in self.points:
            lines.append(
                f"{fp.pair.x:22.15g} {fp.pair.y:22.15g} {fp.cls:>20} "
                f"{fp.residual_vk:12.3e} {fp.residual_hk:12.3e}"
            )
        label = "exactly" if self.complete else "found"
        lines.append(f"{label} {len(self.points)} fixed points, {self.count_positive} positive")
        return "\n".join(lines)


def _report(params: ModelParams, pairs: Iterable, method: str, complete: bool, unconverged: int = 0):
    pts = []
    for x, y in pairs:
        pair = MomentPair(float(x), float(y))
        pts.append(
            FixedPoint(
                pair,
                classify(pair, params),
                vk_residual(params, pair),
                hammerstein_residual(to_density(pair, params)),
            )
        )
    pts.sort(key=lambda fp: (fp.pair.x, fp.pair.y))
    return FixedPointReport(params, pts, method, complete, unconverged)


def analytic_roots(params: ModelParams) -> list[MomentPair]:
    """Closed-form root set of V_k for k = 2 and k = 3."""
    k, th = params.k, params.theta
    if k == 2:
        roots = [MomentPair(0.0, 0.0), MomentPair(1.0, 0.0)]
        disc = (6.0 * th - 5.0) / 3.0
        if disc > 0:
            x1 = 5.0 / (6.0 * th)
            y1 = 5.0 / (6.0 * th**2) / CBRT2 * np.sqrt(disc)
            roots += [MomentPair(x1, y1), MomentPair(x1, -y1)]
        return roots
    if k == 3:
        roots = [MomentPair(0.0, 0.0), MomentPair(1.0, 0.0), MomentPair(-1.0, 0.0)]
        if th > 0:
            ya = 2.0 ** (1.0 / 6.0) / th * np.sqrt(7.0 / (6.0 * th))
            roots += [MomentPair(0.0, ya), MomentPair(0.0, -ya)]
        disc = 9.0 * th - 5.0
        if disc > 0:
            xb = np.sqrt(1.0 - 21.0 / 164.0 * disc / th)
            yb = np.sqrt(105.0 / 164.0) / (th * CBRT2) * np.sqrt(disc / (9.0 * th))
            roots += [MomentPair(sx * xb, sy * yb) for sx in (1, -1) for sy in (1, -1)]
        return roots
    raise UnsupportedOrderError(f"closed-form roots are known for k = 2, 3 only (got k = {k})")


def analytic_fixed_points(params: ModelParams) -> FixedPointReport:
    return _report(params, analytic_roots(params), "analytic", complete=True)


def newton_solve(params: ModelParams, starts: np.ndarray, max_steps: int = 50, max_halvings: int = 30):
    """Damped Newton on V_k(p) - p from every row of ``starts``.

    Returns the final iterates, their sup-norm residuals and a convergence mask.
    """
    p = np.array(starts, dtype=float, copy=True)

    def resid(q):
        img = apply_Vk(params, (q[:, 0], q[:, 1]))
        return np.column_stack([img.x - q[:, 0], img.y - q[:, 1]])

    with np.errstate(all="ignore"):
        g = resid(p)
        gn = np.max(np.abs(g), axis=1)
        alive = np.isfinite(gn)
        for _ in range(max_steps):
            active = alive & (gn >= 1e-14)
            if not np.any(active):
                break
            idx = np.flatnonzero(active)
            jac = jacobian_Vk(params, (p[idx, 0], p[idx, 1])) - np.eye(2)
            det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
            ok = np.abs(det) > 1e-300
            step = np.zeros((len(idx), 2))
            gi = g[idx]
            step[:, 0] = -(jac[:, 1, 1] * gi[:, 0] - jac[:, 0, 1] * gi[:, 1]) / np.where(ok, det, 1.0)
            step[:, 1] = -(-jac[:, 1, 0] * gi[:, 0] + jac[:, 0, 0] * gi[:, 1]) / np.where(ok, det, 1.0)
            alive[idx[~ok]] = False
            lam = np.ones(len(idx))
            pending = ok.copy()
            new_p = p[idx].copy()
            new_g = gi.copy()
            new_n = gn[idx].copy()
            for _h in range(max_halvings):
                if not np.any(pending):
                    break
                sel = np.flatnonzero(pending)
                trial = p[idx[sel]] + lam[sel, None] * step[sel]
                tg = resid(trial)
                tn = np.max(np.abs(tg), axis=1)
                better = np.isfinite(tn) & (tn < gn[idx[sel]])
                acc = sel[better]
                new_p[acc], new_g[acc], new_n[acc] = trial[better], tg[better], tn[better]
                pending[acc] = False
                lam[sel[~better]] *= 0.5
            # starts that cannot decrease the residual have stalled
            alive[idx[pending]] = False
            p[idx], g[idx], gn[idx] = new_p, new_g, new_n
            alive &= np.all(np.abs(p) < 1e8, axis=1)
    converged = alive & (gn < ROOT_TOL)
    return p, gn, converged


def dedupe(points: np.ndarray, residuals: np.ndarray, tol: float) -> np.ndarray:
    """Cluster roots within ``tol`` in the sup norm; keep the best of each cluster."""
    order = np.argsort(residuals)
    kept: list[np.ndarray] = []
    for i in order:
        q = points[i]
        if all(np.max(np.abs(q - r)) > tol for r in kept):
            kept.append(q)
    return np.array(kept).reshape(-1, 2)


def multistart_grid(grid_density: int, box: float = 2.0) -> np.ndarray:
    axis = np.linspace(-box, box, grid_density)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def enumerate_fixed_points(
    params: ModelParams,
    grid_density: int = 16,
    dedupe_tol: float = 1e-8,
    box: float = 2.0,
    max_steps: int = 50,
    extra_starts=None,
) -> FixedPointReport:
    """Newton multistart over ``[-box, box]^2`` plus optional warm starts."""
    if grid_density < 4:
        raise ParameterError("grid_density must be >= 4")
    if dedupe_tol <= 0:
        raise ParameterError("dedupe_tol must be positive")
    starts = multistart_grid(grid_density, box)
    if extra_starts is not None and len(extra_starts):
        starts = np.vstack([np.asarray(extra_starts, dtype=float).reshape(-1, 2), starts])
    p, res, conv = newton_solve(params, starts, max_steps=max_steps)
    roots = dedupe(p[conv], res[conv], dedupe_tol)
    # exact symmetry y -> -y; clean signed zeros so the report is canonical
    roots[np.abs(roots) < 1e-15] = 0.0
    return _report(params, roots, "newton", complete=False, unconverged=int((~conv).sum()))


def same_root_set(a: FixedPointReport, b: FixedPointReport, tol: float = 1e-8) -> bool:
    """True when every root of each report lies within ``tol`` of a root of the other."""
    pa = np.array([fp.pair for fp in a.points]).reshape(-1, 2)
    pb = np.array([fp.pair for fp in b.points]).reshape(-1, 2)
    if len(pa) != len(pb):
        return False
    for src, dst in ((pa, pb), (pb, pa)):
        for q in src:
            if not np.any(np.max(np.abs(dst - q), axis=1) <= tol):
                return False
    return True


def predicted_count(k: int, theta: float) -> int:
    """Number of translation-invariant Gibbs measures proved for k = 2, 3."""
    if k not in (2, 3):
        raise UnsupportedOrderError("predictions exist for k = 2, 3 only")
    threshold = 5.0 / (3.0 * k)
    return 1 if theta <= threshold else 3
