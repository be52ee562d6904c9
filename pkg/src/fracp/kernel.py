"""Radial pair quadrature for double integrals with the kernel ``|x - y|^{-(N+sp)}``.

For radial ``u`` on ``[0, Rmax]`` (zero beyond),

    ∬ F(u(x), u(y)) |x-y|^{-N-sp} dx dy = ∫∫ F(u(r), u(ρ)) k(r, ρ) dr dρ,
    k(r, ρ) = ω r^{N-1} ρ^{N-1} K(r, ρ),
    K(r, ρ) = ∫_{S^{N-1}} |r e1 - ρ ω|^{-(N+sp)} dσ(ω),

and ``K`` has the closed form ``ω R^{-2μ} 2F1(μ, μ - N/2 + 1; N/2; t²)`` with
``R = max(r, ρ)``, ``t = min/max`` and ``μ = (N + sp)/2``.

The square ``[0, Rmax]²`` is cut along the grid cells.  Cell pairs at least
one cell apart use tensor Gauss–Legendre.  Diagonal and adjacent cell pairs,
where ``|u(r) - u(ρ)|^p k(r, ρ) ~ |r - ρ|^{p-1-sp}``, use Duffy-type
product rules whose radial factor is Gauss–Jacobi with that power.  The part
of the integral where one variable exceeds ``Rmax`` is folded into one
weight per Gauss point.

The discrete functional is therefore a finite sum of ``W |U_a - U_b|^p`` and
``T |U_a|^p`` terms with ``U = P u`` (``P`` the spline evaluation), which
makes its nodal gradient exact.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import hyp2f1, roots_jacobi, roots_legendre

from .errors import KernelMismatch, ParseError
from .params import Params
from .profiles import PointSet, interpolant_for, sphere_area

CACHE_MAGIC = "FRACP-KERNEL-1"


def angular_kernel(N: int, mu: float, r, rho) -> np.ndarray:
    """``∫_{S^{N-1}} |r e1 - ρ ω|^{-2 mu} dσ(ω)`` for ``r != ρ``."""
    r = np.asarray(r, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    big = np.maximum(r, rho)
    t = np.minimum(r, rho) / big
    return sphere_area(N) * big ** (-2.0 * mu) * hyp2f1(mu, mu - 0.5 * N + 1.0, 0.5 * N, t * t)


def radial_kernel(N: int, sp: float):
    """``k(r, ρ) = ω r^{N-1} ρ^{N-1} K(r, ρ)`` as a vectorized callable."""
    mu = 0.5 * (N + sp)
    om = sphere_area(N)

    def k(r, rho):
        return om * (r * rho) ** (N - 1) * angular_kernel(N, mu, r, rho)

    return k


def _gl01(n):
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _gj01(n, a):
    # ∫_0^1 f(x) x^a dx
    x, w = roots_jacobi(n, 0.0, a)
    return 0.5 * (x + 1.0), w / 2.0 ** (a + 1.0)


@dataclass
class PairRule:
    """Quadrature for ``∫∫_{[0,R]^2} F(r, ρ) k(r, ρ) + 2 ∫_0^R F(r, 0) ∫_R^∞ k(r, ρ) dρ dr``.

    Attributes
    ----------
    pts : ndarray
        Gauss points of the cell rule (``n_g`` per cell).
    qw : ndarray
        Their 1D weights.
    W : ndarray
        Dense symmetric pair weights between Gauss points, zero on the
        diagonal/adjacent cell blocks.  Sums run over ordered pairs.
    near_a, near_b, near_w : ndarray
        Duffy points for diagonal and adjacent cell pairs; each listed
        pair stands for both orders.
    tail : ndarray
        Per-Gauss-point weight of ``|U_a|^p`` for the ``ρ > Rmax`` region
        (both orders included).
    """

    pts: np.ndarray
    qw: np.ndarray
    cell: np.ndarray
    W: np.ndarray
    near_a: np.ndarray
    near_b: np.ndarray
    near_w: np.ndarray
    tail: np.ndarray


def build_pair_rule(
    nodes, kfun, alpha: float, N: int, sp: float, n_g: int = 4, n_d: int = 8, far_coeff=None, rho_far: float = 0.0,
    breaks=(),
) -> PairRule:
    """Assemble a :class:`PairRule` for the radial weight ``kfun`` on cells of ``nodes``.

    Far out, ``kfun(r, ρ)`` must behave like ``far_coeff(r)`` times the plain
    radial kernel (``far_coeff = 1`` by default); this fixes the remainder of
    the ``ρ > Rmax`` integral beyond ``max(1e5 Rmax, rho_far)``.

    ``alpha`` is the power of ``|r - ρ|`` expected in ``F k`` near the
    diagonal (``p - 1 - sp`` for the Gagliardo integrand).
    """
    e = np.asarray(nodes, dtype=np.float64)
    h = np.diff(e)
    M = h.size
    g, gw = _gl01(n_g)
    pts = (e[:-1, None] + h[:, None] * g[None, :]).ravel()
    qw = (h[:, None] * gw[None, :]).ravel()
    cell = np.repeat(np.arange(M), n_g)

    # regular part
    W = np.zeros((pts.size, pts.size))
    far = np.abs(cell[:, None] - cell[None, :]) >= 2
    ia, ib = np.nonzero(far)
    W[ia, ib] = qw[ia] * qw[ib] * kfun(pts[ia], pts[ib])

    # diagonal cells: r = e + h ξ, ρ = e + h ξ (1 - η), factor 2 for ρ > r
    xj, wj = _gj01(n_d, 1.0 + alpha)
    yj, wyj = _gj01(n_d, alpha)
    X, Y = np.meshgrid(xj, yj, indexing="ij")
    WX = np.outer(wj, wyj)
    base = (WX * X / (X ** (1.0 + alpha) * Y**alpha)).ravel()
    X = X.ravel()
    Y = Y.ravel()
    ra = (e[:-1, None] + h[:, None] * X[None, :]).ravel()
    rb = (e[:-1, None] + h[:, None] * (X * (1.0 - Y))[None, :]).ravel()
    wd = (2.0 * h[:, None] ** 2 * base[None, :]).ravel() * kfun(ra, rb)

    # adjacent cells k (ρ, below) and k+1 (r, above): r = e + h2 x, ρ = e - h1 y
    xl, wl = _gl01(n_d)
    A, B = np.meshgrid(xj, xl, indexing="ij")
    WA = (np.outer(wj, wl) * A / A ** (1.0 + alpha)).ravel()
    A = A.ravel()
    B = B.ravel()
    h1 = h[:-1, None]
    h2 = h[1:, None]
    em = e[1:-1, None]
    # triangle x >= y (scaled): x = ξ, y = ξη ; triangle y > x: y = ξ, x = ξη
    r1 = (em + h2 * A).ravel()
    p1 = (em - h1 * A * B).ravel()
    r2 = (em + h2 * A * B).ravel()
    p2 = (em - h1 * A).ravel()
    wadj = (2.0 * h1 * h2 * WA[None, :]).ravel()
    near_a = np.concatenate([ra, r1, r2])
    near_b = np.concatenate([rb, p1, p2])
    near_w = np.concatenate([wd, wadj * kfun(r1, p1), wadj * kfun(r2, p2)])

    coeff = 1.0 if far_coeff is None else far_coeff(pts)
    tw = 2.0 * qw * tail_integral(pts, e[-1], kfun, N, sp, coeff, rho_far, breaks)
    return PairRule(pts, qw, cell, W, near_a, near_b, near_w, tw)


def tail_integral(r, Rmax: float, kfun, N: int, sp: float, far_coeff=1.0, rho_far: float = 0.0,
                  breaks=(), panel: float = 0.125, block: int = 512) -> np.ndarray:
    """``∫_Rmax^∞ k(r, ρ) dρ`` for each ``r < Rmax``.

    Uses ``ρ = r + (Rmax - r) e^y`` with 8-point Gauss panels of width
    ``panel`` in ``y`` up to ``ρ ≈ max(1e5 Rmax, rho_far)``, and the leading
    far-field term ``far_coeff ω² r^{N-1} ρ^{-sp} / sp`` beyond.  Radii in
    ``breaks`` (where ``k`` is less smooth) become panel edges.
    """
    r = np.asarray(r, dtype=np.float64)
    gap = Rmax - r
    ymax = math.log(max(1e5 * Rmax, rho_far) / float(gap.min()))
    base = np.linspace(0.0, ymax, int(math.ceil(ymax / panel)) + 1)
    g, gw = _gl01(8)
    val = np.empty(r.size)
    for lo in range(0, r.size, block):
        rb, gb = r[lo : lo + block], gap[lo : lo + block]
        cols = [np.broadcast_to(base, (rb.size, base.size))]
        for b in breaks:
            with np.errstate(divide="ignore", invalid="ignore"):
                yb = np.log(np.maximum(b - rb, 0.0) / gb)
            cols.append(np.clip(np.nan_to_num(yb, neginf=0.0), 0.0, ymax)[:, None])
        E = np.sort(np.concatenate(cols, axis=1), axis=1)
        H = np.diff(E, axis=1)
        Y = (E[:, :-1, None] + H[:, :, None] * g).reshape(rb.size, -1)
        W = (H[:, :, None] * gw).reshape(rb.size, -1)
        d = gb[:, None] * np.exp(Y)
        val[lo : lo + block] = np.sum(W * kfun(rb[:, None], rb[:, None] + d) * d, axis=1)
    rho1 = r + gap * math.exp(ymax)
    om = sphere_area(N)
    return val + far_coeff * om * om * r ** (N - 1) * rho1 ** (-sp) / sp


def _key(params: Params, nodes: np.ndarray, n_g: int, n_d: int) -> str:
    h = hashlib.sha256()
    h.update(json.dumps([params.N, params.s, params.p, n_g, n_d]).encode())
    h.update(np.ascontiguousarray(nodes, dtype=np.float64).tobytes())
    return h.hexdigest()


@dataclass
class AngularKernel:
    """Pair quadrature of the Gagliardo integrand on a fixed node set.

    Build with :meth:`build`.  Values are for the base geometry; a profile
    dilated by ``σ`` reuses the kernel with the factor ``σ^{N-sp}``.
    """

    N: int
    s: float
    p: float
    nodes: np.ndarray
    rule: PairRule
    n_g: int = 4
    n_d: int = 8
    digest: str = ""
    _pts: PointSet | None = field(default=None, repr=False)

    @classmethod
    def build(cls, params: Params, nodes, n_g: int = 4, n_d: int = 8, cache_dir=None) -> "AngularKernel":
        nodes = np.array(nodes, dtype=np.float64)
        digest = _key(params, nodes, n_g, n_d)
        if cache_dir is not None:
            path = Path(cache_dir) / f"kernel-{digest[:16]}.bin"
            if path.exists():
                return load_kernel(path, params, nodes)
        kf = radial_kernel(params.N, params.sp)
        rule = build_pair_rule(nodes, kf, params.p - 1.0 - params.sp, params.N, params.sp, n_g, n_d)
        ker = cls(params.N, params.s, params.p, nodes, rule, n_g, n_d, digest)
        if cache_dir is not None:
            Path(cache_dir).mkdir(parents=True, exist_ok=True)
            save_kernel(ker, path)
        return ker

    # geometry -------------------------------------------------------------
    @property
    def points(self) -> PointSet:
        """Spline coefficients for all quadrature points: Gauss, then near-a, then near-b."""
        if self._pts is None:
            allp = np.concatenate([self.rule.pts, self.rule.near_a, self.rule.near_b])
            self._pts = interpolant_for(self.nodes).points(allp)
        return self._pts

    @property
    def K(self) -> np.ndarray:
        """``K(r_a, r_b)`` between Gauss points; ``inf`` on the near-diagonal band."""
        rl = self.rule
        om = sphere_area(self.N)
        with np.errstate(divide="ignore"):
            K = self.rule.W / np.outer(rl.qw * rl.pts ** (self.N - 1), rl.qw * rl.pts ** (self.N - 1)) / om
        band = np.abs(rl.cell[:, None] - rl.cell[None, :]) < 2
        K[band] = np.inf
        return K

    def check(self, params: Params, nodes) -> None:
        if (params.N, params.s, params.p) != (self.N, self.s, self.p):
            raise KernelMismatch(
                f"kernel built for (N, s, p) = {(self.N, self.s, self.p)}, got {(params.N, params.s, params.p)}"
            )
        nodes = np.asarray(nodes, dtype=np.float64)
        if nodes.shape != self.nodes.shape or not np.array_equal(nodes, self.nodes):
            raise KernelMismatch("kernel node set differs from the profile's base nodes")

    # evaluation -----------------------------------------------------------
    def sample(self, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ip = interpolant_for(self.nodes)
        U = ip.apply(vals, self.points)
        n, m = self.rule.pts.size, self.rule.near_a.size
        return U[:n], U[n : n + m], U[n + m :]


def pair_sum(rule: PairRule, Ug, Ua, Ub, p: float, u_inf: float = 0.0) -> tuple[float, float]:
    """``(total, near part)`` of ``Σ W |ΔU|^p + Σ near |ΔU|^p + Σ tail |U - u_inf|^p``.

    ``u_inf`` is the value the profile keeps beyond the last node.
    """
    D = np.abs(Ug[:, None] - Ug[None, :])
    reg = float(np.sum(rule.W * (D * D if p == 2.0 else D**p)))
    near = float(rule.near_w @ np.abs(Ua - Ub) ** p)
    tail = float(rule.tail @ np.abs(Ug - u_inf) ** p)
    return reg + near + tail, near


def _psi(t, p):
    return t if p == 2.0 else np.sign(t) * np.abs(t) ** (p - 1.0)


def pair_gradient(rule: PairRule, Ug, Ua, Ub, p: float, u_inf: float = 0.0):
    """Derivatives of :func:`pair_sum` with respect to ``(Ug, Ua, Ub, u_inf)``."""
    if p == 2.0:
        gg = 2.0 * p * (rule.W.sum(axis=1) * Ug - rule.W @ Ug)
    else:
        gg = 2.0 * p * np.sum(rule.W * _psi(Ug[:, None] - Ug[None, :], p), axis=1)
    gt = p * rule.tail * _psi(Ug - u_inf, p)
    gn = p * rule.near_w * _psi(Ua - Ub, p)
    return gg + gt, gn, -gn, -float(gt.sum())


def pair_pairing(rule: PairRule, U, V, p: float, u_inf: float = 0.0, v_inf: float = 0.0) -> float:
    """``Σ W ψ(ΔU) ΔV + ...`` (the directional derivative divided by p)."""
    Ug, Ua, Ub = U
    Vg, Va, Vb = V
    if p == 2.0:
        reg = 2.0 * float(Vg @ (rule.W.sum(axis=1) * Ug - rule.W @ Ug))
    else:
        reg = float(np.sum(rule.W * _psi(Ug[:, None] - Ug[None, :], p) * (Vg[:, None] - Vg[None, :])))
    near = float(rule.near_w @ (_psi(Ua - Ub, p) * (Va - Vb)))
    tail = float(rule.tail @ (_psi(Ug - u_inf, p) * (Vg - v_inf)))
    return reg + near + tail


# --------------------------------------------------------------------------
# sidecar cache
# --------------------------------------------------------------------------

_ARRAYS = ("pts", "qw", "cell", "W", "near_a", "near_b", "near_w", "tail")


def save_kernel(ker: AngularKernel, path) -> Path:
    """Write ``magic``, the content hash, a JSON layout line, then raw float64 arrays."""
    path = Path(path)
    layout = {
        "N": ker.N, "s": ker.s, "p": ker.p, "n_g": ker.n_g, "n_d": ker.n_d,
        "shapes": {k: list(np.shape(getattr(ker.rule, k))) for k in _ARRAYS},
    }
    with open(path, "wb") as fh:
        fh.write(f"{CACHE_MAGIC}\n{ker.digest}\n{json.dumps(layout)}\n".encode())
        fh.write(np.ascontiguousarray(ker.nodes, dtype="<f8").tobytes())
        for k in _ARRAYS:
            fh.write(np.ascontiguousarray(getattr(ker.rule, k), dtype="<f8").tobytes())
    return path


def load_kernel(path, params: Params, nodes) -> AngularKernel:
    """Read a sidecar written by :func:`save_kernel` and check it against ``(params, nodes)``."""
    path = Path(path)
    raw = path.read_bytes()
    lines = raw.split(b"\n", 3)
    if len(lines) < 4 or lines[0].decode(errors="replace") != CACHE_MAGIC:
        raise ParseError(1, f"{path}: not a kernel cache file")
    digest = lines[1].decode()
    layout = json.loads(lines[2].decode())
    body = np.frombuffer(lines[3], dtype="<f8")
    nodes = np.asarray(nodes, dtype=np.float64)
    want = _key(params, nodes, layout["n_g"], layout["n_d"])
    if digest != want:
        raise KernelMismatch(f"{path}: cached kernel hash {digest[:12]} does not match {want[:12]}")
    off = nodes.size
    if not np.array_equal(body[:off], nodes):
        raise KernelMismatch(f"{path}: cached node set differs")
    arrs = {}
    for k in _ARRAYS:
        shape = tuple(layout["shapes"][k])
        n = int(np.prod(shape)) if shape else 1
        arrs[k] = body[off : off + n].reshape(shape).copy()
        off += n
    arrs["cell"] = arrs["cell"].astype(np.int64)
    rule = PairRule(**arrs)
    return AngularKernel(params.N, params.s, params.p, nodes, rule, layout["n_g"], layout["n_d"], digest)
