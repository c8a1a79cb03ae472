"""Finite-volume realization of the splitting Gibbs measure of a fixed point.

For a positive fixed point phi of H_k the measure on a ball of the tree is a
tree-indexed Markov chain:

* the root spin has density proportional to phi^d, d the root degree;
* a child spin u of a vertex with spin t has density
  P(u | t) = K(t, u) phi(u)^k / phi(t).

:func:`dlr_check` tests this factorization against the Gibbs density with
boundary weights, computed by brute-force tensor quadrature.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial

from .errors import CertificationError, DimensionLimitError, ParameterError, PositivityError
from .hammerstein import POSITIVITY_TOL, ClosedFormDensity, hammerstein_residual
from .kernel import CBRT2, basis, kernel_eval, t_of_w, w_of_t
from .quadrature import gauss_legendre, integrate_cube_substituted, substituted_nodes

MAX_DEPTH = 8
MAX_DLR_DEPTH = 2
MAX_TENSOR_POINTS = 2**24
CDF_GRID = 4097
CHUNK = 8192
CERTIFY_TOL = 1e-9


@dataclass(frozen=True)
class TreeSpec:
    """Ball of radius ``depth`` around the root of a tree with ``branching`` successors per vertex."""

    depth: int
    branching: int
    root_degree: int | None = None

    def __post_init__(self):
        if self.depth < 1 or self.depth > MAX_DEPTH:
            raise ParameterError(f"depth must be in 1..{MAX_DEPTH}")
        if self.branching < 2:
            raise ParameterError("branching must be >= 2")
        if self.root_degree is None:
            object.__setattr__(self, "root_degree", self.branching + 1)
        if self.root_degree not in (self.branching, self.branching + 1):
            raise ParameterError("root_degree must be k or k + 1")

    @property
    def n_vertices(self) -> int:
        k, d0, n = self.branching, self.root_degree, self.depth
        return 1 + d0 * (k**n - 1) // (k - 1)

    @cached_property
    def parents(self) -> np.ndarray:
        """Parent index per vertex in breadth-first order; -1 for the root."""
        par = [-1]
        frontier = [0]
        for level in range(self.depth):
            nxt = []
            for v in frontier:
                n_children = self.root_degree if level == 0 else self.branching
                for _ in range(n_children):
                    par.append(v)
                    nxt.append(len(par) - 1)
            frontier = nxt
        return np.array(par)

    @cached_property
    def depths(self) -> np.ndarray:
        d = np.zeros(len(self.parents), dtype=int)
        for v in range(1, len(d)):
            d[v] = d[self.parents[v]] + 1
        return d

    def n_successors(self, v: int) -> int:
        if self.depths[v] == self.depth:
            return 0
        return self.root_degree if v == 0 else self.branching


class Configuration(NamedTuple):
    spins: dict


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """A certified positive fixed point and its lifted boundary function."""

    density: ClosedFormDensity

    def __post_init__(self):
        if self.density.min_value <= POSITIVITY_TOL:
            raise PositivityError("boundary field needs a strictly positive fixed point")
        res = hammerstein_residual(self.density)
        if res > CERTIFY_TOL:
            raise CertificationError(f"density is not a fixed point of H_k (residual {res:.3e})")

    @property
    def k(self) -> int:
        return self.density.params.k

    def lifted(self, t, power: int | None = None):
        """f(t) = (phi(t) / phi(0))^power, power defaulting to k."""
        power = self.k if power is None else power
        phi = self.density
        return (phi(t) / phi(0.0)) ** power

    @cached_property
    def _w_poly(self) -> Polynomial:
        phi = self.density
        return Polynomial([phi.c1, phi.slope])


def transition_density(field: BoundaryField, parent_spin, child_spin):
    """P(u | t) = K(t, u) phi(u)^k / phi(t)."""
    phi = field.density
    pt = np.asarray(phi(parent_spin))
    if np.any(pt <= POSITIVITY_TOL):
        raise PositivityError("phi vanishes at the parent spin")
    return kernel_eval(phi.params, parent_spin, child_spin) * phi(child_spin) ** field.k / pt


def root_density(field: BoundaryField, root_degree: int, t):
    phi = field.density
    mass = integrate_cube_substituted(lambda w: phi.in_w(w) ** root_degree)
    return phi(t) ** root_degree / mass


class _CdfTables(NamedTuple):
    u: np.ndarray
    a: np.ndarray  # int_0^u phi^k
    b: np.ndarray  # int_0^u cbrt(s - 1/2) phi^k ds
    root: np.ndarray  # normalized CDF of the root marginal


def _cdf_tables(field: BoundaryField, root_degree: int, n: int = CDF_GRID) -> _CdfTables:
    """Exact cumulative integrals on a uniform u-grid, from polynomial antiderivatives in w."""
    u = np.linspace(0.0, 1.0, n)
    w = w_of_t(u)
    jac = Polynomial([0.0, 0.0, 1.5])
    lin = field._w_poly
    wpoly = Polynomial([0.0, 1.0 / CBRT2])
    pa = (jac * lin**field.k).integ(lbnd=-1.0)
    pb = (jac * wpoly * lin**field.k).integ(lbnd=-1.0)
    pr = (jac * lin**root_degree).integ(lbnd=-1.0)
    root = pr(w) / pr(1.0)
    root[0], root[-1] = 0.0, 1.0
    return _CdfTables(u, pa(w), pb(w), root)


def _invert(cdf_at, target: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized bisection over grid cells, then linear interpolation inside the cell."""
    lo = np.zeros(target.shape, dtype=np.int64)
    hi = np.full(target.shape, len(u) - 1, dtype=np.int64)
    while np.any(hi - lo > 1):
        mid = (lo + hi) // 2
        left = cdf_at(mid) <= target
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    f_lo, f_hi = cdf_at(lo), cdf_at(hi)
    span = np.where(f_hi > f_lo, f_hi - f_lo, 1.0)
    frac = np.clip((target - f_lo) / span, 0.0, 1.0)
    return u[lo] + frac * (u[hi] - u[lo])


@dataclass
class TreeSamples:
    """Independent draws of all spins on a ball; ``spins`` has shape (n_samples, n_vertices)."""

    spec: TreeSpec
    spins: np.ndarray

    def __len__(self) -> int:
        return self.spins.shape[0]

    def __getitem__(self, i: int) -> Configuration:
        return Configuration(dict(enumerate(self.spins[i].tolist())))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def root(self) -> np.ndarray:
        return self.spins[:, 0]

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        for line in header.splitlines():
            buf.write(f"# {line}\n")
        buf.write("sample,vertex,depth,spin\n")
        depths = self.spec.depths
        for s, row in enumerate(self.spins):
            for v, spin in enumerate(row):
                buf.write(f"{s},{v},{depths[v]},{spin:.17g}\n")
        return buf.getvalue()


def _sample_chunk(field, spec, tables, seed: int, chunk: int, n: int) -> np.ndarray:
    rng = np.random.default_rng([seed, chunk])
    uniforms = rng.random((n, spec.n_vertices))
    spins = np.empty_like(uniforms)
    phi = field.density
    th = phi.params.theta
    spins[:, 0] = _invert(lambda j: tables.root[j], uniforms[:, 0], tables.u)
    parents = spec.parents
    for v in range(1, spec.n_vertices):
        t = spins[:, parents[v]]
        coef = th * basis(t)
        norm = phi(t)
        spins[:, v] = _invert(lambda j: (tables.a[j] + coef * tables.b[j]) / norm, uniforms[:, v], tables.u)
    return spins


def sample_tree(field: BoundaryField, spec: TreeSpec, seed: int, n_samples: int, jobs: int = 1) -> TreeSamples:
    """Draw ``n_samples`` configurations on the ball by inverse-CDF sampling.

    Samples are generated in fixed-size chunks, each with its own stream
    seeded by ``(seed, chunk index)``, so output does not depend on ``jobs``.
    """
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    if spec.branching != field.k:
        raise ParameterError("tree branching must equal the model's k")
    tables = _cdf_tables(field, spec.root_degree)
    sizes = [min(CHUNK, n_samples - i) for i in range(0, n_samples, CHUNK)]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda a: _sample_chunk(field, spec, tables, seed, *a), enumerate(sizes)))
    else:
        parts = [_sample_chunk(field, spec, tables, seed, c, n) for c, n in enumerate(sizes)]
    return TreeSamples(spec, np.vstack(parts))


class Estimate(NamedTuple):
    estimate: float
    std_error: float | None  # None when a single sample leaves it undefined


def observable(samples, which: str = "mean_basis") -> Estimate:
    """Sample mean and standard error of sigma(root) or e(sigma(root))."""
    root = samples.root if isinstance(samples, TreeSamples) else np.array([c.spins[0] for c in samples])
    if len(root) == 0:
        raise ParameterError("no samples")
    if which == "mean_spin":
        vals = root
    elif which == "mean_basis":
        vals = basis(root)
    else:
        raise ParameterError("which must be 'mean_spin' or 'mean_basis'")
    vals = np.atleast_1d(vals)
    if len(vals) < 2:
        return Estimate(float(vals.mean()), None)
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals))))


def expected_basis(field: BoundaryField, root_degree: int) -> float:
    """Quadrature value of E[e(sigma(root))] under the root marginal."""
    phi = field.density
    num = integrate_cube_substituted(lambda w: CBRT2 * w * phi.in_w(w) ** root_degree)
    den = integrate_cube_substituted(lambda w: phi.in_w(w) ** root_degree)
    return num / den


# --- brute-force finite-volume check -------------------------------------------


class DLRResult(NamedTuple):
    compatibility: float
    gibbs_vs_markov: float


def _boundary_power(spec: TreeSpec, v: int) -> int:
    # (e5) at v has one factor per successor, so exp(h_v) is proportional to phi^|S(v)|
    return spec.root_degree if v == 0 else spec.branching


def _log_weight(field: BoundaryField, spec: TreeSpec, spins, depth: int):
    """log of exp(-beta H) times the boundary weights on the sphere of radius ``depth``.

    ``spins`` holds one broadcastable array per vertex of the full spec.
    """
    phi = field.density
    params = phi.params
    parents, depths = spec.parents, spec.depths
    out = 0.0
    for v in np.flatnonzero(depths <= depth):
        if v > 0:
            out = out + np.log(kernel_eval(params, spins[parents[v]], spins[v]))
        if depths[v] == depth:
            out = out + _boundary_power(spec, v) * np.log(phi(spins[v]) / phi(0.0))
    return out


def _partition(field: BoundaryField, spec: TreeSpec, depth: int, order: int) -> float:
    n_vars = int(np.sum(spec.depths <= depth))
    if order**n_vars > MAX_TENSOR_POINTS:
        raise DimensionLimitError(
            f"tensor quadrature with {order}^{n_vars} points exceeds the limit of {MAX_TENSOR_POINTS}"
        )
    w, wts = substituted_nodes(gauss_legendre(order))
    u = t_of_w(w)
    axes = []
    for v in range(n_vars):
        shape = [1] * n_vars
        shape[v] = order
        axes.append(u.reshape(shape))
    weight = np.exp(_log_weight(field, spec, axes, depth)) * np.ones([order] * n_vars)
    for v in range(n_vars):
        shape = [1] * n_vars
        shape[v] = order
        weight = weight * wts.reshape(shape)
    return float(weight.sum())


def gibbs_density(field: BoundaryField, spec: TreeSpec, configs: np.ndarray, depth: int, z: float) -> np.ndarray:
    """Finite-volume Gibbs density with boundary weights, normalized by ``z``."""
    per_vertex = [configs[..., v] for v in range(configs.shape[-1])]
    return np.exp(_log_weight(field, spec, per_vertex, depth)) / z


def markov_density(field: BoundaryField, spec: TreeSpec, configs: np.ndarray) -> np.ndarray:
    dens = root_density(field, spec.root_degree, configs[..., 0])
    for v in range(1, configs.shape[-1]):
        dens = dens * transition_density(field, configs[..., spec.parents[v]], configs[..., v])
    return dens


def dlr_check(
    field: BoundaryField, spec: TreeSpec, quadrature_order: int = 32, n_test: int = 64, seed: int = 0
) -> DLRResult:
    """Brute-force compatibility and Gibbs/Markov agreement on a small ball.

    ``compatibility`` is the sup over random inner configurations of
    |integral over the outer sphere of mu_n - mu_(n-1)|; ``gibbs_vs_markov`` is
    the sup over random full configurations of the difference between the
    Gibbs density of the ball and the Markov-chain product density.
    """
    if spec.depth > MAX_DLR_DEPTH:
        raise DimensionLimitError(f"brute-force check supports depth <= {MAX_DLR_DEPTH}")
    if spec.branching != field.k:
        raise ParameterError("tree branching must equal the model's k")
    n = spec.depth
    z_n = _partition(field, spec, n, quadrature_order)
    z_prev = _partition(field, spec, n - 1, quadrature_order)
    rng = np.random.default_rng(seed)

    full = rng.random((n_test, spec.n_vertices))
    full[0] = 0.0
    full[1] = 1.0
    gm = np.max(np.abs(gibbs_density(field, spec, full, n, z_n) - markov_density(field, spec, full)))

    inner_vertices = np.flatnonzero(spec.depths < n)
    outer_vertices = np.flatnonzero(spec.depths == n)
    if quadrature_order ** len(outer_vertices) > MAX_TENSOR_POINTS:
        raise DimensionLimitError("outer-shell marginalization exceeds the tensor limit")
    w, wts = substituted_nodes(gauss_legendre(quadrature_order))
    u = t_of_w(w)
    grids = np.meshgrid(*([u] * len(outer_vertices)), indexing="ij")
    wgrid = np.ones_like(grids[0])
    for ax in range(len(outer_vertices)):
        shape = [1] * len(outer_vertices)
        shape[ax] = quadrature_order
        wgrid = wgrid * wts.reshape(shape)
    wflat = wgrid.ravel()

    inner = rng.random((n_test, len(inner_vertices)))
    inner[0] = 0.0
    inner[1] = 1.0
    worst = 0.0
    for row in inner:
        cfg = np.empty((wflat.size, spec.n_vertices))
        cfg[:, inner_vertices] = row
        for j, v in enumerate(outer_vertices):
            cfg[:, v] = grids[j].ravel()
        marginal = float(np.dot(wflat, gibbs_density(field, spec, cfg, n, z_n)))
        prev = float(gibbs_density(field, spec, cfg[:1], n - 1, z_prev)[0])
        worst = max(worst, abs(marginal - prev))
    return DLRResult(worst, float(gm))
