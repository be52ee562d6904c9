"""Numerical checks of the nonlocal integration-by-parts formula and the Pohozaev identity.

For a vector field ``X`` the integration-by-parts identity reads

    (C/2) ∬ |u(x) - u(y)|^p |x-y|^{-(N+sp)} B_X(x, y) dx dy = -p ∫ X·∇u (-Δ)^s_p u dx,
    B_X(x, y) = div X(x) + div X(y) - (N+sp) (X(x) - X(y))·(x-y) / |x-y|².

The left side is computed with the radial pair quadrature (bracket folded
into the kernel), the right side with the pointwise operator, so the two
sides share no quadrature code beyond the interpolant.

Fields are radial, ``X(x) = φ(|x|) x``.  The canonical cutoff uses the
quintic smoothstep ``ψ`` on ``[1, 2]`` and ``φ(r) = ψ(λ r)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .energy import gagliardo_energy, potential_value
from .errors import DomainError, PointwiseUnsupported
from .kernel import AngularKernel, _gl01, angular_kernel, build_pair_rule, pair_sum
from .nonlinearity import Nonlinearity
from .operator import QuadSpec, flp_apply, normalization_constant
from .params import Params
from .profiles import RadialProfile, interpolant_for, sphere_area


def smoothstep_cutoff(t):
    """``ψ(t)``: 1 for ``t <= 1``, 0 for ``t >= 2``, quintic smoothstep between."""
    y = np.clip(np.asarray(t, dtype=np.float64) - 1.0, 0.0, 1.0)
    return 1.0 - y**3 * (10.0 - 15.0 * y + 6.0 * y * y)


def smoothstep_cutoff_deriv(t):
    y = np.clip(np.asarray(t, dtype=np.float64) - 1.0, 0.0, 1.0)
    return -30.0 * y * y * (1.0 - y) ** 2


@dataclass(frozen=True)
class VectorFieldSpec:
    """Radial vector field ``X(x) = φ(|x|) x``.

    ``kind = "identity_cutoff"`` uses ``φ(r) = ψ(λ r)``.  ``kind = "custom_radial"``
    takes ``phi`` and its derivative ``dphi`` as callables of ``r``;
    :meth:`identity` is the pure field ``X(x) = x``.
    """

    kind: str = "identity_cutoff"
    lam: float = 0.05
    phi: object = None
    dphi: object = None

    def __post_init__(self):
        if self.kind == "identity_cutoff":
            if not (self.lam > 0 and math.isfinite(self.lam)):
                raise DomainError(f"field lambda must be positive, got {self.lam!r}")
        elif self.kind == "custom_radial":
            if self.phi is None or self.dphi is None:
                raise DomainError("custom_radial fields need phi and dphi")
        else:
            raise DomainError(f"unknown field kind {self.kind!r}")

    @classmethod
    def identity(cls) -> "VectorFieldSpec":
        return cls("custom_radial", 0.0, lambda r: np.ones_like(r), lambda r: np.zeros_like(r))

    def phi_of(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "identity_cutoff":
            return smoothstep_cutoff(self.lam * r)
        return np.asarray(self.phi(r), dtype=np.float64)

    def rdphi_of(self, r):
        """``r φ'(r)``."""
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "identity_cutoff":
            return self.lam * r * smoothstep_cutoff_deriv(self.lam * r)
        return r * np.asarray(self.dphi(r), dtype=np.float64)

    def div_minus_n(self, r, N):
        """``div X - N = N (φ - 1) + r φ'``, computed without cancellation for φ ≡ 1."""
        return N * (self.phi_of(r) - 1.0) + self.rdphi_of(r)

    @property
    def support_radius(self) -> float:
        return 2.0 / self.lam if self.kind == "identity_cutoff" else math.inf

    @property
    def breaks(self) -> tuple:
        """Radii where ``φ`` changes formula."""
        return (1.0 / self.lam, 2.0 / self.lam) if self.kind == "identity_cutoff" else ()

    @property
    def lipschitz(self) -> float:
        """Estimate of ``sup |DX| <= sup φ + sup |r φ'|`` on a fine sample."""
        if self.kind == "identity_cutoff":
            t = np.linspace(1.0, 2.0, 2001)
            return 1.0 + float(np.max(np.abs(t * smoothstep_cutoff_deriv(t))))
        r = np.linspace(0.0, 100.0, 20001)
        return float(np.max(np.abs(self.phi_of(r))) + np.max(np.abs(self.rdphi_of(r))))


def divergence_bracket(X: VectorFieldSpec, x, y, params: Params):
    """``div X(x) + div X(y) - (N+sp) (X(x) - X(y))·(x-y)/|x-y|²`` for points ``x != y``.

    ``x`` and ``y`` have shape ``(..., N)``.  The value is assembled as
    ``(N - sp) + deviations`` so the pure identity field returns ``N - sp``
    bit for bit.
    """
    N = params.N
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1] != N or y.shape[-1] != N:
        raise DomainError(f"points must have last dimension N = {N}")
    d = x - y
    d2 = np.sum(d * d, axis=-1)
    if np.any(d2 == 0.0):
        raise DomainError("bracket is undefined for x = y")
    rx = np.sqrt(np.sum(x * x, axis=-1))
    ry = np.sqrt(np.sum(y * y, axis=-1))
    fx = X.phi_of(rx) - 1.0
    fy = X.phi_of(ry) - 1.0
    dq = np.sum((fx[..., None] * x - fy[..., None] * y) * d, axis=-1) / d2
    out = X.div_minus_n(rx, N) + X.div_minus_n(ry, N) - (N + params.sp) * dq + (N - params.sp)
    return out


def bracket_kernel(X: VectorFieldSpec, params: Params):
    """Radial weight ``k_X(r, ρ) = ω r^{N-1} ρ^{N-1} ∫_S |r e1 - ρω|^{-(N+sp)} B_X dσ``."""
    N, sp = params.N, params.sp
    nu = 0.5 * (N + sp)
    om = sphere_area(N)

    def k(r, rho):
        fr, fp = X.phi_of(r) - 1.0, X.phi_of(rho) - 1.0
        c0 = X.div_minus_n(r, N) + X.div_minus_n(rho, N) - (N + sp) * 0.5 * (fr + fp) + (N - sp)
        out = c0 * angular_kernel(N, nu, r, rho)
        diff = fr - fp
        nz = diff != 0.0
        if np.any(nz):
            out = out - np.where(nz, (N + sp) * 0.5 * diff * (r * r - rho * rho), 0.0) * angular_kernel(N, nu + 1.0, r, rho)
        return om * (r * rho) ** (N - 1) * out

    return k


@dataclass(frozen=True)
class IdentityReport:
    lhs: float
    rhs: float
    rel_residual: float
    bracket_min: float
    bracket_max: float

    def as_dict(self) -> dict:
        return asdict(self)


def _residual(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / (1.0 + max(abs(lhs), abs(rhs)))


def _sample_pairs(X: VectorFieldSpec, params: Params, R: float, n: int = 10_000, seed: int = 0):
    rng = np.random.default_rng(seed)
    N = params.N
    x = rng.uniform(-R, R, size=(n, N))
    y = rng.uniform(-R, R, size=(n, N))
    b = divergence_bracket(X, x, y, params)
    return float(b.min()), float(b.max())


def bracket_integral(u: RadialProfile, X: VectorFieldSpec, params: Params, n_g: int = 4, n_d: int = 8) -> float:
    """``(C/2) ∬ |u(x) - u(y)|^p |x-y|^{-(N+sp)} B_X dx dy`` by the radial pair rule."""
    N, sp = params.N, params.sp
    kf = bracket_kernel(X, params)
    far = lambda r: N + X.div_minus_n(r, N)  # noqa: E731  (field vanishes far out)
    rule = build_pair_rule(u.nodes, kf, params.p - 1.0 - sp, N, sp, n_g, n_d, far_coeff=far,
                           rho_far=100.0 * min(X.support_radius, 1e12), breaks=X.breaks)
    ip = interpolant_for(u.base_nodes)
    allp = np.concatenate([rule.pts, rule.near_a, rule.near_b]) / u.scale
    U = ip.apply(u.values, ip.points(allp))
    n, m = rule.pts.size, rule.near_a.size
    E, _ = pair_sum(rule, U[:n], U[n : n + m], U[n + m :], params.p, u.values[-1])
    return 0.5 * normalization_constant(params) * E


def _rhs_points(u: RadialProfile, X: VectorFieldSpec, params: Params, n_g: int):
    r = u.nodes
    h = np.diff(r)
    g, w = _gl01(n_g)
    pts = (r[:-1, None] + h[:, None] * g[None, :]).ravel()
    wts = (h[:, None] * w[None, :]).ravel()
    f = X.phi_of(pts) * pts * u.derivative(pts) * pts ** (params.N - 1)
    keep = np.abs(f) > 1e-15 * max(float(np.max(np.abs(f))), 1e-300)
    return pts[keep], wts[keep] * f[keep]


def ibp_rhs(u: RadialProfile, X: VectorFieldSpec, params: Params, quad: QuadSpec | None = None, n_g: int = 4) -> float:
    """``-p ∫ X·∇u (-Δ)^s_p u dx`` with the operator evaluated pointwise."""
    quad = quad or QuadSpec()
    quad = QuadSpec(quad.delta, quad.Rcut, quad.n_inner, quad.n_outer, quad.n_angular, quad.tail_bound_reported, False)
    pts, wf = _rhs_points(u, X, params, n_g)
    if pts.size == 0:
        return 0.0
    L = np.array([flp_apply(u, x, params, quad)[0] for x in pts])
    return -params.p * sphere_area(params.N) * float(wf @ L)


def ibp_check(u: RadialProfile, X: VectorFieldSpec, params: Params, quad: QuadSpec | None = None,
              n_g: int = 4, n_d: int = 8) -> IdentityReport:
    """Evaluate both sides of the integration-by-parts identity.

    Raises
    ------
    PointwiseUnsupported
        The pointwise operator representation is not available for ``params``.
    """
    if not params.pointwise_ok:
        raise PointwiseUnsupported(f"ibp_check needs p >= 2 or s < 2(p-1)/p; got s={params.s}, p={params.p}")
    lhs = bracket_integral(u, X, params, n_g, n_d)
    rhs = ibp_rhs(u, X, params, quad, n_g)
    R = min(X.support_radius * 1.25, 4.0 * u.Rmax) if math.isfinite(X.support_radius) else 2.0 * u.Rmax
    bmin, bmax = _sample_pairs(X, params, R)
    return IdentityReport(lhs, rhs, _residual(lhs, rhs), bmin, bmax)


def pohozaev_residual(u: RadialProfile, nl: Nonlinearity, params: Params, kernel: AngularKernel) -> float:
    """``P(u) = (N - sp) a(u) - N b(u)``."""
    a = gagliardo_energy(u, params, kernel)
    return (params.N - params.sp) * a - params.N * potential_value(u, nl, params)


@dataclass(frozen=True)
class LimitRow:
    """One cutoff scale of the limit study.

    ``lhs`` is ``(C/2p) ∬ |Δu|^p |x-y|^{-(N+sp)} B_X``; ``g_main = N ∫ φ_λ G(u)``,
    ``g_lambda = ∫ G(u) x·∇φ_λ``; ``assembled = lhs - g_main - g_lambda``.
    """

    lam: float
    lhs: float
    g_main: float
    g_lambda: float
    assembled: float

    def as_dict(self) -> dict:
        return asdict(self)


def cutoff_limit_study(u: RadialProfile, nl: Nonlinearity, params: Params, lambdas, n_g: int = 4, n_d: int = 8) -> list[LimitRow]:
    """Both sides of the cutoff identity for each ``λ`` (positive, decreasing).

    For a solution ``lhs = g_main + g_lambda`` at every ``λ``; as ``λ → 0``
    ``lhs → (N - sp) a(u)``, ``g_main → N b(u)`` and ``g_lambda → 0``, so
    ``assembled`` tends to the Pohozaev residual.
    """
    if not params.pointwise_ok:
        raise PointwiseUnsupported(f"cutoff study needs p >= 2 or s < 2(p-1)/p; got s={params.s}, p={params.p}")
    lams = [float(x) for x in lambdas]
    if any(not x > 0 for x in lams) or any(b >= a for a, b in zip(lams, lams[1:])):
        raise DomainError(f"lambdas must be positive and strictly decreasing, got {lams}")
    N = params.N
    w = u.weights(N)
    G = nl.G(u.values)
    r = u.nodes
    rows = []
    for lam in lams:
        X = VectorFieldSpec("identity_cutoff", lam)
        lhs = bracket_integral(u, X, params, n_g, n_d) / params.p
        g_main = N * float(w @ (X.phi_of(r) * G))
        g_lam = float(w @ (G * X.rdphi_of(r)))
        rows.append(LimitRow(lam, lhs, g_main, g_lam, lhs - g_main - g_lam))
    return rows
