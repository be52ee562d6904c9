"""Constrained minimization ``J = inf { a(u) : b(u) = 1 }`` over radial profiles.

The iterate keeps its nodal values on a fixed base grid and carries the
dilation factor as its scale, so the constraint is restored exactly by
rescaling (``b(T_σ u) = σ^N b(u)``) and the kernel is built only once.

Each step takes the weighted-L² Riesz gradient of ``a``, removes its
component along the Riesz gradient of ``b``, applies an L-BFGS two-loop
recursion (``memory = 0`` gives plain steepest descent), backtracks until
``a`` decreases and re-projects.  The outermost node is held at zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .energy import gagliardo_energy, gagliardo_first_variation, gagliardo_gradient, potential_value
from .identities import pohozaev_residual
from .errors import ConstraintError, DomainError, InfeasibleStart, SolverDiverged, StepFailure
from .kernel import AngularKernel
from .nonlinearity import Nonlinearity, initial_guess
from .params import Params
from .profiles import GridSpec, RadialProfile, dilate, monotone_resample, symmetrize_radial

log = logging.getLogger(__name__)

R_SCHEDULE = (4.0, 8.0, 16.0, 32.0)
FEAS_TOL = 1e-8


@dataclass(frozen=True)
class SolveConfig:
    """Descent settings.  The run is deterministic; there is no random seed."""

    max_iters: int = 3000
    step0: float = 1.0
    shrink: float = 0.5
    grow: float = 2.0
    grad_tol: float = 1e-7
    energy_tol: float = 1e-11
    symmetrize_every: int = 10
    memory: int = 10
    max_backtracks: int = 30
    grid: GridSpec = field(default_factory=GridSpec)
    n_g: int = 4
    n_d: int = 8

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError(f"solve.max_iters must be >= 1, got {self.max_iters}")
        for name in ("step0", "grad_tol", "energy_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"solve.{name} must be positive, got {getattr(self, name)!r}")
        if not 0 < self.shrink < 1:
            raise DomainError(f"solve.shrink must lie in (0, 1), got {self.shrink!r}")
        if not self.grow >= 1:
            raise DomainError(f"solve.grow must be >= 1, got {self.grow!r}")
        if self.symmetrize_every < 1:
            raise DomainError(f"solve.symmetrize_every must be >= 1, got {self.symmetrize_every}")
        if self.memory < 0:
            raise DomainError(f"solve.memory must be >= 0, got {self.memory}")


@dataclass
class DescentState:
    """Mutable bookkeeping owned by one solver run."""

    step: float = 1.0
    memory: int = 10
    s_hist: list = field(default_factory=list)
    y_hist: list = field(default_factory=list)
    prev_vals: np.ndarray | None = None
    prev_grad: np.ndarray | None = None
    grad_norm: float = math.inf
    backtracks: int = 0
    a_value: float = math.nan
    last_step: float = 0.0

    def reset(self):
        self.s_hist.clear()
        self.y_hist.clear()
        self.prev_vals = None
        self.prev_grad = None


@dataclass
class SolveReport:
    J_est: float
    sigma_bar: float
    a_final: float
    b_final: float
    a_bar: float
    b_bar: float
    ratio: float
    pohozaev_residual: float
    pohozaev_normalized: float
    lagrange_mismatch: float
    lagrange_initial: float
    weak_residual: float
    zeta: float
    R_init: float
    iterations: int
    converged: bool
    max_feasibility_error: float
    symmetrizations_kept: int
    trace: list
    test_bank: list
    u: RadialProfile = field(repr=False, default=None)
    u_bar: RadialProfile = field(repr=False, default=None)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("u")
        d.pop("u_bar")
        return d


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------


def project_constraint(u: RadialProfile, nl: Nonlinearity, params: Params) -> RadialProfile:
    """Rescale ``u`` by ``b(u)^{-1/N}`` so that ``b = 1``.

    Raises
    ------
    ConstraintError
        ``b(u) <= 0``, or the rescaled profile misses ``b = 1`` by more than 1e-8.
    """
    b = potential_value(u, nl, params)
    if not b > 0:
        raise ConstraintError(b)
    if b == 1.0:
        return u
    v = dilate(u, b ** (-1.0 / params.N))
    bv = potential_value(v, nl, params)
    if abs(bv - 1.0) > FEAS_TOL:
        raise ConstraintError(bv, f"projection missed b = 1: b = {bv!r}")
    return v


def _inner(x, y, w):
    return float(np.sum(w * x * y))


def _riesz(u: RadialProfile, nl: Nonlinearity, params: Params, kernel: AngularKernel):
    # base-geometry metric so the L-BFGS pairs stay comparable across rescalings;
    # the b-gradient only enters through its direction, so its σ^N factor is dropped
    w = u.weights(params.N) / u.scale**params.N
    Ga = gagliardo_gradient(u, params, kernel) / w
    Gb = nl.g(u.values).copy()
    Ga[-1] = 0.0
    Gb[-1] = 0.0
    return Ga, Gb, w


def projected_gradient(u: RadialProfile, nl: Nonlinearity, params: Params, kernel: AngularKernel):
    """Riesz gradient of ``a`` with the ``b``-gradient component removed, and the metric weights."""
    Ga, Gb, w = _riesz(u, nl, params, kernel)
    bb = _inner(Gb, Gb, w)
    g = Ga - (_inner(Ga, Gb, w) / bb) * Gb if bb > 0 else Ga
    return g, Gb, w


def _direction(g, Gb, w, state: DescentState):
    q = -g.copy()
    if state.memory > 0 and state.s_hist:
        alphas = []
        for s, y in zip(reversed(state.s_hist), reversed(state.y_hist)):
            a = _inner(s, q, w) / _inner(y, s, w)
            alphas.append(a)
            q -= a * y
        s, y = state.s_hist[-1], state.y_hist[-1]
        q *= _inner(s, y, w) / _inner(y, y, w)
        for (s, y), a in zip(zip(state.s_hist, state.y_hist), reversed(alphas)):
            b = _inner(y, q, w) / _inner(y, s, w)
            q += (a - b) * s
    bb = _inner(Gb, Gb, w)
    if bb > 0:
        q -= (_inner(q, Gb, w) / bb) * Gb
    q[-1] = 0.0
    return q


def descend_step(u: RadialProfile, state: DescentState, nl: Nonlinearity, params: Params,
                 kernel: AngularKernel, config: SolveConfig | None = None):
    """One projected descent step from a feasible ``u``.

    Returns ``(u_next, accepted)``; ``accepted`` is false (and ``u_next is u``)
    when the relative projected gradient norm is below ``grad_tol``.  The new
    energy and the accepted step length are left in ``state.a_value`` and
    ``state.last_step``.

    Raises
    ------
    StepFailure
        No decrease after ``max_backtracks`` halvings.
    """
    config = config or SolveConfig()
    a0 = gagliardo_energy(u, params, kernel)
    g, Gb, w = projected_gradient(u, nl, params, kernel)
    vals = u.values
    # L-BFGS pair from the previous accepted step
    if state.prev_grad is not None and state.memory > 0:
        s = vals - state.prev_vals
        y = g - state.prev_grad
        if _inner(s, y, w) > 1e-12 * math.sqrt(_inner(s, s, w) * _inner(y, y, w)):
            state.s_hist.append(s)
            state.y_hist.append(y)
            if len(state.s_hist) > state.memory:
                state.s_hist.pop(0)
                state.y_hist.pop(0)
    unorm = math.sqrt(_inner(vals, vals, w))
    state.grad_norm = math.sqrt(_inner(g, g, w)) * unorm / max(a0, 1e-300)
    state.a_value, state.last_step = a0, 0.0
    if state.grad_norm < config.grad_tol:
        return u, False
    d = _direction(g, Gb, w, state)
    slope = _inner(g, d, w)
    if not slope < 0:
        state.reset()
        d = _direction(g, Gb, w, state)
        slope = _inner(g, d, w)
    t = 1.0 if state.memory > 0 else state.step
    for k in range(config.max_backtracks):
        trial = u.with_values(vals + t * d)
        try:
            trial = project_constraint(trial, nl, params)
        except ConstraintError:
            t *= config.shrink
            continue
        a1 = gagliardo_energy(trial, params, kernel)
        if a1 < a0 and a1 <= a0 + 1e-4 * t * slope:
            state.prev_vals = vals
            state.prev_grad = g
            state.backtracks = k
            state.step = t * config.grow if k == 0 else t
            state.a_value, state.last_step = a1, t
            return trial, True
        t *= config.shrink
    raise StepFailure(state.grad_norm, config.max_backtracks)


def _resample(src: RadialProfile, like: RadialProfile) -> RadialProfile:
    vals = np.array(monotone_resample(src, like.nodes).values)
    vals[-1] = 0.0
    return like.with_values(vals)


def guarded_symmetrize(u: RadialProfile, a_u: float, nl: Nonlinearity, params: Params, kernel: AngularKernel):
    """Rearrange, resample on the base grid, re-project; keep only if ``a`` does not increase."""
    s = symmetrize_radial(u, params.N)
    if s is not None and np.array_equal(s.values, u.values) and s.scale == u.scale:
        return u, a_u, False
    try:
        v = project_constraint(_resample(s, u), nl, params)
    except ConstraintError:
        return u, a_u, False
    a_v = gagliardo_energy(v, params, kernel)
    if a_v <= a_u:
        return v, a_v, True
    return u, a_u, False


# --------------------------------------------------------------------------
# test bank and Lagrange relation
# --------------------------------------------------------------------------


def half_max_radius(u: RadialProfile) -> float:
    r = u.nodes
    v = np.abs(u.values)
    top = v[0] if v[0] > 0 else v.max()
    idx = np.nonzero(v <= 0.5 * top)[0]
    idx = idx[idx > 0]
    if idx.size == 0:
        return float(r[-1])
    i = idx[0]
    # linear interpolation inside [r_{i-1}, r_i]
    f0, f1 = v[i - 1] - 0.5 * top, v[i] - 0.5 * top
    return float(r[i - 1] + (r[i] - r[i - 1]) * f0 / (f0 - f1)) if f0 != f1 else float(r[i])


BANK_SPEC = (
    [("gaussian", c) for c in (0.5, 1.0, 2.0)]
    + [("tent", c) for c in (0.5, 1.0, 2.0)]
    + [("mexican_hat", c) for c in (1.0, 2.0)]
    + [("shifted_bump", c) for c in (0.5, 1.0, 1.5, 2.0)]
)


def test_bank(u: RadialProfile) -> tuple[list[RadialProfile], list[dict]]:
    """Twelve fixed test profiles on ``u``'s nodes, in units of its half-max radius ``ℓ``."""
    ell = half_max_radius(u)
    r = u.nodes
    out, desc = [], []
    for kind, c in BANK_SPEC:
        if kind == "gaussian":
            v = np.exp(-((r / (c * ell)) ** 2))
        elif kind == "tent":
            v = np.clip(1.0 - r / (c * ell), 0.0, None)
        elif kind == "mexican_hat":
            x = (r / (c * ell)) ** 2
            v = (1.0 - x) * np.exp(-0.5 * x)
        else:
            v = np.exp(-(((r - c * ell) / (0.5 * ell)) ** 2))
        v[-1] = 0.0
        out.append(u.with_values(v))
        desc.append({"kind": kind, "c": c, "ell": ell})
    return out, desc


def lagrange_check(u: RadialProfile, J_est: float, nl: Nonlinearity, params: Params, kernel: AngularKernel,
                   bank: list[RadialProfile] | None = None, mult: float | None = None) -> float:
    """``max_v |a'(u)v - μ b'(u)v| / (1 + |a'(u)v|)`` with ``μ = J (N - sp)/N``.

    ``mult`` overrides ``μ`` (1 gives the weak-solution residual of ``a - b``).
    """
    if bank is None:
        bank, _ = test_bank(u)
    mu = J_est * (params.N - params.sp) / params.N if mult is None else mult
    grad = gagliardo_gradient(u, params, kernel)
    w = u.weights(params.N)
    gb = w * nl.g(u.values)
    worst = 0.0
    for v in bank:
        av = float(grad @ v.values)
        bv = float(gb @ v.values)
        worst = max(worst, abs(av - mu * bv) / (1.0 + abs(av)))
    return worst


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


def feasible_start(nl: Nonlinearity, params: Params, grid: GridSpec) -> tuple[RadialProfile, float]:
    """First ``w_R`` with ``b(w_R) > 0`` along the radius schedule."""
    for R in R_SCHEDULE:
        w = initial_guess(nl, params, R, grid)
        if potential_value(w, nl, params) > 0:
            return w, R
    raise InfeasibleStart(f"b(w_R) <= 0 for every R in {R_SCHEDULE}")


def solve(nl: Nonlinearity, params: Params, config: SolveConfig | None = None, kernel: AngularKernel | None = None,
          cache_dir=None) -> SolveReport:
    """Minimize ``a`` on ``b = 1``, then rescale to the candidate solution ``ū``.

    Raises
    ------
    DomainError
        ``N < 2``.
    InfeasibleStart
        No initializer with ``b > 0``.
    SolverDiverged
        ``max_iters`` reached while ``a`` still moved by more than
        ``energy_tol`` (relative) over the last 20 iterations.
    """
    config = config or SolveConfig()
    if params.N < 2:
        raise DomainError(f"the solver needs N >= 2, got N={params.N}")
    w0, R = feasible_start(nl, params, config.grid)
    if kernel is None:
        kernel = AngularKernel.build(params, w0.base_nodes, config.n_g, config.n_d, cache_dir=cache_dir)
    u = project_constraint(w0, nl, params)
    a = gagliardo_energy(u, params, kernel)
    lag0 = lagrange_check(u, a, nl, params, kernel)
    state = DescentState(step=config.step0, memory=config.memory)
    trace = [(0, a, abs(potential_value(u, nl, params) - 1.0), 0.0)]
    max_feas = trace[0][2]
    kept = 0
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        u_next, accepted = descend_step(u, state, nl, params, kernel, config)
        if not accepted:
            converged = True
            break
        u, a, t = u_next, state.a_value, state.last_step
        if it % config.symmetrize_every == 0:
            u, a, did = guarded_symmetrize(u, a, nl, params, kernel)
            if did:
                kept += 1
                state.reset()
        feas = abs(potential_value(u, nl, params) - 1.0)
        max_feas = max(max_feas, feas)
        trace.append((it, a, feas, t))
        if len(trace) > 20:
            a_old = trace[-21][1]
            if (a_old - a) <= config.energy_tol * abs(a):
                converged = True
                break
    if not converged:
        a_old = trace[max(0, len(trace) - 21)][1]
        raise SolverDiverged(
            f"max_iters={config.max_iters} reached; relative decrease over the last 20 iterations "
            f"{(a_old - a) / abs(a):.3e} > energy_tol={config.energy_tol:g}"
        )
    return _finish(u, a, nl, params, kernel, trace, it, converged, max_feas, kept, R, lag0)


def sigma_bar_of(J: float, params: Params) -> float:
    """``((N - sp) J / N)^{1/(sp)}``."""
    base = (params.N - params.sp) * J / params.N
    if not base > 0:
        raise DomainError(f"(N - sp) J / N must be positive, got {base!r}")
    return base ** (1.0 / params.sp)


def _finish(u, a, nl, params, kernel, trace, iters, converged, max_feas, kept, R, lag0) -> SolveReport:
    N, sp = params.N, params.sp
    J = a
    sig = sigma_bar_of(J, params)
    ub = dilate(u, sig)
    a_bar = gagliardo_energy(ub, params, kernel)
    b_bar = potential_value(ub, nl, params)
    P = pohozaev_residual(ub, nl, params, kernel)
    bank, desc = test_bank(u)
    lag = lagrange_check(u, J, nl, params, kernel, bank)
    bank_bar, _ = test_bank(ub)
    weak = lagrange_check(ub, J, nl, params, kernel, bank_bar, mult=1.0)
    return SolveReport(
        J_est=J, sigma_bar=sig, a_final=a, b_final=potential_value(u, nl, params),
        a_bar=a_bar, b_bar=b_bar, ratio=a_bar / b_bar, pohozaev_residual=P,
        pohozaev_normalized=abs(P) / ((N - sp) * a_bar), lagrange_mismatch=lag, lagrange_initial=lag0,
        weak_residual=weak, zeta=nl.zeta, R_init=R, iterations=iters, converged=converged,
        max_feasibility_error=max_feas, symmetrizations_kept=kept,
        trace=[list(t) for t in trace], test_bank=desc, u=u, u_bar=ub,
    )


def first_variation_bank(u: RadialProfile, params: Params, kernel: AngularKernel, bank) -> np.ndarray:
    """``a'(u) v`` for each bank profile (used in reports and tests)."""
    return np.array([gagliardo_first_variation(u, v, params, kernel) for v in bank])
