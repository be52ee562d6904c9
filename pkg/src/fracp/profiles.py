"""Radial and planar function representations, dilation and rearrangement.

A :class:`RadialProfile` stores nodal values on ``0 = r_0 < ... < r_M = Rmax``
and is extended by zero beyond ``Rmax``.  Between nodes it is the clamped
cubic spline with ``u'(0) = 0`` (radial symmetry) and ``u'(Rmax) = 0``.
The spline is linear in the nodal values; :class:`CubicInterpolant` exposes
that linear map and its transpose so energies built on top of it have exact
derivatives.

Dilations are stored as a scale factor on top of the base nodes, which makes
``dilate(dilate(u, a), b)`` and ``dilate(u, a * b)`` bitwise identical and
lets precomputed kernels be reused after a dilation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solveh_banded
from scipy.special import gammaln

from .errors import DomainError


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N (2 for N = 1, 2π for N = 2)."""
    if N == 1:
        return 2.0
    if N == 2:
        return 2.0 * math.pi
    if N == 3:
        return 4.0 * math.pi
    return float(2.0 * math.exp(0.5 * N * math.log(math.pi) - gammaln(0.5 * N)))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


# --------------------------------------------------------------------------
# Spline machinery
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PointSet:
    """Precomputed spline coefficients for a fixed set of evaluation points.

    The value at point k is ``c0 u[i] + c1 u[i+1] + m0 M[i] + m1 M[i+1]`` with
    ``i = idx[k]`` and ``M`` the spline second derivatives.
    """

    idx: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    m0: np.ndarray
    m1: np.ndarray

    def __len__(self) -> int:
        return self.idx.size


class CubicInterpolant:
    """Clamped cubic spline on fixed nodes, as a linear operator on values."""

    def __init__(self, nodes: np.ndarray):
        r = np.asarray(nodes, dtype=np.float64)
        self.nodes = r
        h = np.diff(r)
        self.h = h
        n = r.size - 1
        # Second-derivative system A M = D u, both symmetric tridiagonal.
        diag = np.empty(n + 1)
        diag[0] = 2.0 * h[0]
        diag[-1] = 2.0 * h[-1]
        diag[1:-1] = 2.0 * (h[:-1] + h[1:])
        self._ab = np.zeros((2, n + 1))
        self._ab[0, 1:] = h
        self._ab[1] = diag
        inv = 6.0 / h
        self._d_off = inv

    def _apply_d(self, u: np.ndarray) -> np.ndarray:
        # difference form (same symmetric matrix) so constants map to exact zeros
        d = self._d_off * np.diff(u)
        out = np.zeros_like(d, shape=u.shape)
        out[:-1] += d
        out[1:] -= d
        return out

    def moments(self, u: np.ndarray) -> np.ndarray:
        """Spline second derivatives at the nodes."""
        return solveh_banded(self._ab, self._apply_d(u), check_finite=False)

    def _index(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.nodes.size - 2)

    def points(self, x: np.ndarray, idx: np.ndarray | None = None) -> PointSet:
        """Coefficients for evaluating the spline at ``x``.

        Beyond the last node the profile continues with its last value, so a
        constant profile is constant on all of R^N.  ``idx`` may pass the
        interval indices when the caller already has them.
        """
        x = np.abs(np.asarray(x, dtype=np.float64)).ravel()
        r = self.nodes
        inside = x <= r[-1]
        if idx is None:
            idx = self._index(x)
        h = self.h[idx]
        B = (x - r[idx]) / h
        A = 1.0 - B
        c0 = np.where(inside, A, 0.0)
        c1 = np.where(inside, B, 1.0)
        m0 = np.where(inside, (A**3 - A) * h * h / 6.0, 0.0)
        m1 = np.where(inside, (B**3 - B) * h * h / 6.0, 0.0)
        return PointSet(idx, c0, c1, m0, m1)

    def apply(self, u: np.ndarray, pts: PointSet, M: np.ndarray | None = None) -> np.ndarray:
        if M is None:
            M = self.moments(u)
        i = pts.idx
        # c0 = 1 - c1, written so that constant data are reproduced exactly
        return u[i] + pts.c1 * (u[i + 1] - u[i]) + pts.m0 * M[i] + pts.m1 * M[i + 1]

    def apply_transpose(self, c: np.ndarray, pts: PointSet) -> np.ndarray:
        """Adjoint of :meth:`apply`: maps point weights to nodal weights."""
        n1 = self.nodes.size
        i = pts.idx
        g = np.bincount(i, pts.c0 * c, minlength=n1) + np.bincount(i + 1, pts.c1 * c, minlength=n1)
        mv = np.bincount(i, pts.m0 * c, minlength=n1) + np.bincount(i + 1, pts.m1 * c, minlength=n1)
        g[: n1 - 1] += 0.0  # keep length fixed even when idx misses the last node
        return g + self._apply_d(solveh_banded(self._ab, mv, check_finite=False))

    def derivative(self, u: np.ndarray, x: np.ndarray, M: np.ndarray | None = None) -> np.ndarray:
        if M is None:
            M = self.moments(u)
        x = np.asarray(x, dtype=np.float64)
        sign = np.where(x < 0.0, -1.0, 1.0)
        ax = np.abs(x)
        r = self.nodes
        idx = np.clip(np.searchsorted(r, ax, side="right") - 1, 0, r.size - 2)
        h = self.h[idx]
        B = (ax - r[idx]) / h
        A = 1.0 - B
        du = (u[idx + 1] - u[idx]) / h - (3 * A * A - 1) * h * M[idx] / 6 + (3 * B * B - 1) * h * M[idx + 1] / 6
        return np.where(ax <= r[-1], sign * du, 0.0)


    def _taylor(self, u, M, i, x, dy):
        # the spline is a cubic on each interval, so this expansion is exact there
        r, h = self.nodes, self.h[i]
        B = (x - r[i]) / h
        A = 1.0 - B
        d1 = (u[i + 1] - u[i]) / h - (3 * A * A - 1) * h * M[i] / 6 + (3 * B * B - 1) * h * M[i + 1] / 6
        d2 = A * M[i] + B * M[i + 1]
        d3 = (M[i + 1] - M[i]) / h
        return dy * (d1 + dy * (0.5 * d2 + dy * d3 / 6.0))

    def increment(self, u: np.ndarray, x: np.ndarray, dy: np.ndarray, M: np.ndarray | None = None) -> np.ndarray:
        """``u(x + dy) - u(x)`` for ``x, x + dy >= 0`` without cancellation.

        Within one interval (or across a single knot) the difference is the
        local Taylor expansion, so small increments keep full relative
        accuracy; far apart points fall back to plain subtraction.
        """
        if M is None:
            M = self.moments(u)
        x = np.asarray(x, dtype=np.float64)
        dy = np.asarray(dy, dtype=np.float64)
        shape = np.broadcast_shapes(x.shape, dy.shape)
        y = (x + dy).ravel()
        r = self.nodes
        iy = self._index(y)
        out = self.apply(u, self.points(y, iy), M)
        if x.size == 1:
            # one base point (the usual operator call): evaluate it once
            x0 = x.ravel()
            ix = np.full(y.size, self._index(x0)[0])
            out -= self.apply(u, self.points(x0), M)[0]
            x = np.full(y.size, x0[0])
        else:
            x = np.broadcast_to(x, shape).ravel()
            ix = self._index(x)
            out -= self.apply(u, self.points(x, ix), M)
        dy = np.broadcast_to(dy, shape).ravel()
        inside = (x <= r[-1]) & (y <= r[-1])
        same = inside & (ix == iy)
        if np.any(same):
            out[same] = self._taylor(u, M, ix[same], x[same], dy[same])
        adj = inside & (np.abs(ix - iy) == 1)
        if np.any(adj):
            a, b = ix[adj], iy[adj]
            k = r[np.maximum(a, b)]
            xa, ya = x[adj], y[adj]
            out[adj] = self._taylor(u, M, a, xa, k - xa) + self._taylor(u, M, b, k, ya - k)
        return out.reshape(shape)


@lru_cache(maxsize=64)
def _interpolant_cached(key: bytes) -> CubicInterpolant:
    return CubicInterpolant(np.frombuffer(key, dtype=np.float64))


def interpolant_for(nodes: np.ndarray) -> CubicInterpolant:
    """Shared :class:`CubicInterpolant` for a node array (cached by content)."""
    return _interpolant_cached(np.ascontiguousarray(nodes, dtype=np.float64).tobytes())


# --------------------------------------------------------------------------
# RadialProfile
# --------------------------------------------------------------------------


class RadialProfile:
    """Nodal values of a radial function, zero beyond ``Rmax``.

    Parameters
    ----------
    nodes : array_like
        Strictly increasing, ``nodes[0] == 0``.
    values : array_like
        Finite values at the nodes.
    scale : float, optional
        Dilation factor applied on top of ``nodes``; the physical nodes are
        ``nodes * scale``.  Normally left at 1 and changed through
        :func:`dilate`.
    edges : array_like, optional
        Boundaries of the shells that carry the nodal quadrature weights
        (length ``len(nodes) + 1``).  Defaults to node midpoints with
        ``edges[0] = 0`` and ``edges[-1] = Rmax``.
    """

    def __init__(self, nodes, values, *, scale: float = 1.0, edges=None):
        nodes = np.asarray(nodes, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DomainError("a radial profile needs at least two nodes")
        if values.shape != nodes.shape:
            raise DomainError(f"values shape {values.shape} does not match nodes {nodes.shape}")
        if nodes[0] != 0.0:
            raise DomainError(f"first node must be 0, got {nodes[0]!r}")
        if not np.all(np.diff(nodes) > 0):
            raise DomainError("nodes must be strictly increasing")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(nodes)):
            raise DomainError("nodes and values must be finite")
        if not (scale > 0 and math.isfinite(scale)):
            raise DomainError(f"scale must be positive, got {scale!r}")
        if edges is None:
            edges = np.concatenate(([0.0], 0.5 * (nodes[:-1] + nodes[1:]), [nodes[-1]]))
        else:
            edges = np.asarray(edges, dtype=np.float64)
            if edges.shape != (nodes.size + 1,) or not np.all(np.diff(edges) > 0):
                raise DomainError("edges must be strictly increasing with len(nodes) + 1 entries")
        self._base_nodes = _readonly(nodes)
        self._values = _readonly(values)
        self._scale = float(scale)
        self._base_edges = _readonly(edges)

    # geometry -------------------------------------------------------------
    @property
    def base_nodes(self) -> np.ndarray:
        return self._base_nodes

    @property
    def base_edges(self) -> np.ndarray:
        return self._base_edges

    @property
    def scale(self) -> float:
        return self._scale

    @property
    def nodes(self) -> np.ndarray:
        return self._base_nodes * self._scale

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def Rmax(self) -> float:
        return float(self._base_nodes[-1] * self._scale)

    @property
    def edges(self) -> np.ndarray:
        return self._base_edges * self._scale

    def weights(self, N: int) -> np.ndarray:
        """Shell measures ``|{e_i <= |x| < e_{i+1}}|`` in R^N attached to each node."""
        e = self.edges
        return sphere_area(N) / N * np.diff(e**N)

    @property
    def interpolant(self) -> CubicInterpolant:
        return interpolant_for(self._base_nodes)

    def with_values(self, values) -> "RadialProfile":
        """Same geometry, new nodal values."""
        return RadialProfile(self._base_nodes, values, scale=self._scale, edges=self._base_edges)

    # evaluation -----------------------------------------------------------
    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        ip = self.interpolant
        out = ip.apply(self._values, ip.points(r / self._scale))
        return out.reshape(r.shape)

    def derivative(self, r) -> np.ndarray:
        """Radial derivative ``u'(r)``; zero at the origin and beyond ``Rmax``."""
        r = np.asarray(r, dtype=np.float64)
        out = self.interpolant.derivative(self._values, r / self._scale) / self._scale
        return np.where(r == 0.0, 0.0, out)

    def increment(self, r, dr) -> np.ndarray:
        """``u(r + dr) - u(r)`` with full relative accuracy for small ``dr``."""
        sc = self._scale
        return self.interpolant.increment(self._values, np.asarray(r) / sc, np.asarray(dr) / sc)

    def curvature_bound(self) -> float:
        """Largest |u''| of the interpolant (attained at a node)."""
        M = self.interpolant.moments(self._values)
        return float(np.max(np.abs(M))) / self._scale**2

    def sup_norm(self) -> float:
        """Sup norm of the interpolant, estimated on a 4x refined sampling."""
        r = self._base_nodes
        fine = np.concatenate([np.linspace(a, b, 4, endpoint=False) for a, b in zip(r[:-1], r[1:])] + [r[-1:]])
        ip = self.interpolant
        return float(np.max(np.abs(ip.apply(self._values, ip.points(fine)))))

    def lp_mass(self, q: float, N: int) -> float:
        """Discrete ``∫ |u|^q dx`` with the nodal shell weights."""
        return float(np.sum(self.weights(N) * np.abs(self._values) ** q))

    def __repr__(self) -> str:
        return f"RadialProfile(M={self._base_nodes.size - 1}, Rmax={self.Rmax:g}, scale={self._scale:g})"


@dataclass(frozen=True)
class GridSpec:
    """Radial grid: ``M`` cells on ``[0, Rmax]`` graded geometrically near 0."""

    M: int = 256
    Rmax: float = 40.0
    ratio: float = 1.15
    n_graded: int = 15

    def __post_init__(self):
        if self.M < 4:
            raise DomainError(f"grid.M must be >= 4, got {self.M}")
        if not self.Rmax > 0:
            raise DomainError(f"grid.Rmax must be positive, got {self.Rmax}")
        if not self.ratio >= 1.0:
            raise DomainError(f"grid.ratio must be >= 1, got {self.ratio}")
        if self.n_graded < 0:
            raise DomainError(f"grid.n_graded must be >= 0, got {self.n_graded}")

    def nodes(self) -> np.ndarray:
        return radial_grid(self.M, self.Rmax, self.ratio, self.n_graded)


def radial_grid(M: int = 256, Rmax: float = 40.0, ratio: float = 1.15, n_graded: int = 15) -> np.ndarray:
    """Nodes ``0 = r_0 < ... < r_M = Rmax``.

    The ``n_graded`` innermost cells shrink geometrically by ``ratio`` toward
    the origin; the rest share one uniform width ``h``.  With the defaults the
    graded block covers roughly ``[0, 1]`` and the smallest cell is ``h/8``.
    """
    G = min(int(n_graded), max(int(M) - 2, 0))
    graded = ratio ** -np.arange(G, 0, -1, dtype=np.float64)
    h = Rmax / (graded.sum() + (M - G))
    cells = np.concatenate([h * graded, np.full(M - G, h)])
    nodes = np.concatenate([[0.0], np.cumsum(cells)])
    nodes[-1] = Rmax
    return nodes


def profile_from_function(f, grid: GridSpec | np.ndarray | None = None) -> RadialProfile:
    """Sample ``f(r)`` on a radial grid."""
    nodes = (grid or GridSpec()).nodes() if not isinstance(grid, np.ndarray) else grid
    return RadialProfile(nodes, f(nodes))


def gaussian_bump(width: float = 2.0, amplitude: float = 1.0, grid: GridSpec | np.ndarray | None = None) -> RadialProfile:
    """``amplitude * exp(-(r/width)^2)`` sampled on a grid."""
    return profile_from_function(lambda r: amplitude * np.exp(-((r / width) ** 2)), grid)


def dilate(u: RadialProfile, sigma: float) -> RadialProfile:
    """``T_sigma u (x) = u(x / sigma)``: nodes are multiplied by ``sigma``."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DomainError(f"dilation factor must be positive, got {sigma!r}")
    return RadialProfile(u.base_nodes, u.values, scale=u.scale * sigma, edges=u.base_edges)


# --------------------------------------------------------------------------
# Planar grids and rearrangement
# --------------------------------------------------------------------------


class PlanarGrid:
    """Values on the uniform ``n x n`` grid over ``[-L, L]^2`` (cell-centred samples at the grid points)."""

    def __init__(self, L: float, n: int, values):
        values = np.asarray(values, dtype=np.float64)
        if n < 2:
            raise DomainError(f"planar grid needs n >= 2, got {n}")
        if not L > 0:
            raise DomainError(f"planar grid half-width must be positive, got {L}")
        if values.shape != (n, n):
            raise DomainError(f"values shape {values.shape} != ({n}, {n})")
        if not np.all(np.isfinite(values)):
            raise DomainError("planar grid values must be finite")
        self.L = float(L)
        self.n = int(n)
        self.values = _readonly(values)

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    def coords(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    @classmethod
    def from_function(cls, f, L: float, n: int) -> "PlanarGrid":
        """Sample ``f(x, y)`` (vectorized) on the grid."""
        c = np.linspace(-L, L, n)
        X, Y = np.meshgrid(c, c, indexing="ij")
        return cls(L, n, f(X, Y))


def _stack_shells(values: np.ndarray, measures: np.ndarray, N: int) -> RadialProfile:
    """Place values (already in nonincreasing order) on concentric shells of the given measures."""
    if values.size == 1:
        values = np.repeat(values, 2)
        measures = np.repeat(measures / 2.0, 2)
    w = sphere_area(N) / N
    cum = np.concatenate([[0.0], np.cumsum(measures)])
    edges = (cum / w) ** (1.0 / N)
    nodes = np.empty(values.size)
    nodes[0] = 0.0
    nodes[1:-1] = (0.5 * (edges[1:-2] ** N + edges[2:-1] ** N)) ** (1.0 / N)
    nodes[-1] = edges[-1]
    return RadialProfile(nodes, values, edges=edges)


def symmetrize_radial(u: RadialProfile, N: int = 2) -> RadialProfile:
    """Decreasing rearrangement of ``|u|`` in the nodal shell measure.

    Each node keeps its shell measure; shells are re-stacked from the origin
    in order of decreasing ``|u|`` (ties keep node order).  Every discrete
    integral ``sum_i w_i F(|u_i|)`` is therefore preserved up to the rounding
    of the new shell radii.  An already nonincreasing ``|u|`` is returned on
    its own nodes.
    """
    a = np.abs(u.values)
    if np.all(np.diff(a) <= 0):
        return u.with_values(a)
    order = np.argsort(-a, kind="stable")
    out = _stack_shells(a[order], u.weights(N)[order], N)
    return out


def monotone_resample(v: RadialProfile, nodes) -> RadialProfile:
    """Sample ``v`` on ``nodes`` through a shape-preserving (PCHIP) interpolant.

    Rearranged profiles sit on irregular shell nodes where the cubic spline
    overshoots badly; this brings them back to a regular node set without
    creating new extrema.  Nodes beyond ``v.Rmax`` take the last value.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        vals = PchipInterpolator(v.nodes, v.values)(np.minimum(nodes, v.Rmax))
    vals = np.where(nodes > v.Rmax, v.values[-1], vals)
    return RadialProfile(nodes, vals)


def schwarz_symmetrize(f: PlanarGrid) -> RadialProfile:
    """Radially decreasing rearrangement of ``|f|`` for a planar grid.

    Every grid point carries one cell of area ``(2L/(n-1))^2``.  Cells with equal
    ``|f|`` are merged into one shell, so the result has one node per distinct
    value; the zero level (if any) becomes the outermost shell.
    """
    a = np.abs(f.values).ravel()
    levels, counts = np.unique(a, return_counts=True)
    levels = levels[::-1]
    counts = counts[::-1]
    if levels.size == 1 and levels[0] == 0.0:
        R = math.sqrt(a.size * f.cell_area / math.pi)
        return RadialProfile([0.0, R], [0.0, 0.0])
    return _stack_shells(levels, counts * f.cell_area, 2)
