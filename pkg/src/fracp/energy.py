"""Gagliardo energy ``a``, potential energies ``b = b1 - b2`` and their first variations.

``a`` uses the pair quadrature of :mod:`fracp.kernel` on the interpolant; ``b``
uses the nodal shell measures of the profile, so ``b(T_σ u) = σ^N b(u)`` and
rearrangements preserve ``b`` up to rounding.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .kernel import AngularKernel, pair_gradient, pair_pairing, pair_sum
from .nonlinearity import Nonlinearity
from .operator import normalization_constant
from .params import Params
from .profiles import RadialProfile, interpolant_for, sphere_area


@dataclass(frozen=True)
class EnergyReport:
    """Energies of one profile.  ``a_value`` and the band estimate need a kernel."""

    b_value: float
    b1_value: float
    b2_value: float
    a_value: float | None = None
    diag_band_estimate: float | None = None
    quad_residual: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def _values_of(v, u: RadialProfile) -> np.ndarray:
    if isinstance(v, RadialProfile):
        if not np.array_equal(v.base_nodes, u.base_nodes) or v.scale != u.scale:
            raise DomainError("first variations need u and v on the same nodes")
        return v.values
    v = np.asarray(v, dtype=np.float64)
    if v.shape != u.values.shape:
        raise DomainError(f"direction has shape {v.shape}, expected {u.values.shape}")
    return v


def _prefactor(u: RadialProfile, params: Params) -> float:
    return normalization_constant(params) * u.scale ** (params.N - params.sp)


def gagliardo_parts(u: RadialProfile, params: Params, kernel: AngularKernel) -> tuple[float, float]:
    """``(a(u), near-diagonal band contribution)``."""
    kernel.check(params, u.base_nodes)
    E, near = pair_sum(kernel.rule, *kernel.sample(u.values), params.p, u.values[-1])
    c = _prefactor(u, params) / (2.0 * params.p)
    return c * E, c * near


def gagliardo_energy(u: RadialProfile, params: Params, kernel: AngularKernel) -> float:
    """``(C/2p) ∬ |u(x) - u(y)|^p |x - y|^{-(N+sp)} dx dy``.

    Raises
    ------
    KernelMismatch
        The kernel was built for another parameter triple or node set.
    """
    return gagliardo_parts(u, params, kernel)[0]


def gagliardo_first_variation(u: RadialProfile, v, params: Params, kernel: AngularKernel) -> float:
    """``(C/2) ∬ |Δu|^{p-2} Δu Δv |x-y|^{-(N+sp)}``, the derivative of ``a`` at ``u`` along ``v``."""
    kernel.check(params, u.base_nodes)
    vv = _values_of(v, u)
    val = pair_pairing(kernel.rule, kernel.sample(u.values), kernel.sample(vv), params.p, u.values[-1], vv[-1])
    return 0.5 * _prefactor(u, params) * val


def gagliardo_gradient(u: RadialProfile, params: Params, kernel: AngularKernel) -> np.ndarray:
    """Nodal gradient of ``a``: ``gagliardo_first_variation(u, v) = grad @ v.values``."""
    kernel.check(params, u.base_nodes)
    Ug, Ua, Ub = kernel.sample(u.values)
    gg, ga, gb, ginf = pair_gradient(kernel.rule, Ug, Ua, Ub, params.p, u.values[-1])
    ip = interpolant_for(kernel.nodes)
    g = ip.apply_transpose(np.concatenate([gg, ga, gb]), kernel.points)
    g[-1] += ginf
    return _prefactor(u, params) / (2.0 * params.p) * g


def _spline_b(u: RadialProfile, nl: Nonlinearity, params: Params, n: int = 4) -> float:
    # Gauss rule on the interpolant, used only as a refinement cross-check
    x, w = np.polynomial.legendre.leggauss(n)
    r = u.nodes
    h = np.diff(r)
    pts = (r[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    wts = (0.5 * h[:, None] * w[None, :]).ravel()
    return float(sphere_area(params.N) * np.sum(wts * pts ** (params.N - 1) * nl.G(u(pts))))


def potential_energy(u: RadialProfile, nl: Nonlinearity, params: Params, kernel: AngularKernel | None = None) -> EnergyReport:
    """``b = ∫ G(u)``, ``b1 = ∫ G1(u)``, ``b2 = ∫ G2(u)`` with nodal shell weights.

    With a ``kernel`` the report also carries ``a`` and its band part.
    ``quad_residual`` is the difference between ``b`` and a Gauss rule on the
    interpolant.
    """
    w = u.weights(params.N)
    vals = u.values
    b1 = float(w @ nl.G1(vals))
    b2 = float(w @ nl.G2(vals))
    b = b1 - b2
    a = band = None
    if kernel is not None:
        a, band = gagliardo_parts(u, params, kernel)
    resid = abs(b - _spline_b(u, nl, params))
    return EnergyReport(b, b1, b2, a, band, resid)


def potential_value(u: RadialProfile, nl: Nonlinearity, params: Params) -> float:
    """``b(u)`` alone (same rule as :func:`potential_energy`)."""
    w = u.weights(params.N)
    return float(w @ nl.G1(u.values)) - float(w @ nl.G2(u.values))


def potential_first_variation(u: RadialProfile, v, nl: Nonlinearity, params: Params) -> float:
    """``∫ g(u) v dx`` with the nodal shell weights."""
    vv = _values_of(v, u)
    return float(u.weights(params.N) @ (nl.g(u.values) * vv))
