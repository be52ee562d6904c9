"""Model nonlinearities ``g`` with the positive/negative split ``g = g1 - g2``.

``two_power``::

    g(t) = -m |t|^{p-2} t + |t|^{q-2} t,   G(t) = -(m/p)|t|^p + |t|^q / q

with ``g1(t) = |t|^{q-2} t`` and ``g2(t) = m |t|^{p-2} t``.

``bounded_tail`` freezes the growing part beyond ``|t| = T``: ``g1(t) = T^{q-1} sign(t)``
there.  It has the same small-``t`` behaviour and a sub-critical tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import Params
from .profiles import GridSpec, RadialProfile

FAMILIES = ("two_power", "bounded_tail")


def _spow(t, e):
    """Odd power ``|t|^{e-1} t`` (equal to 0 at t = 0 for e > 1)."""
    return np.sign(t) * np.abs(t) ** (e - 1.0)


@dataclass(frozen=True)
class Nonlinearity:
    """Closed-form nonlinearity; build with :func:`make_model`.

    Attributes
    ----------
    zeta_star : float
        Positive zero of ``G`` for the two-power law, ``(q m / p)^{1/(q-p)}``.
    zeta : float
        The witness with ``G(zeta) > 0`` used by :func:`initial_guess`.
    """

    m: float
    q: float
    p: float
    family: str = "two_power"
    T: float = math.inf
    zeta_star: float = 0.0
    zeta: float = 0.0

    # pieces ---------------------------------------------------------------
    def g1(self, t):
        t = np.asarray(t, dtype=np.float64)
        if math.isinf(self.T):
            return _spow(t, self.q)
        tc = np.clip(t, -self.T, self.T)
        return _spow(tc, self.q)

    def g2(self, t):
        return self.m * _spow(np.asarray(t, dtype=np.float64), self.p)

    def G1(self, t):
        a = np.abs(np.asarray(t, dtype=np.float64))
        if math.isinf(self.T):
            return a**self.q / self.q
        T = self.T
        return np.where(a <= T, a**self.q / self.q, T**self.q / self.q + T ** (self.q - 1.0) * (a - T))

    def G2(self, t):
        return self.m / self.p * np.abs(np.asarray(t, dtype=np.float64)) ** self.p

    def g(self, t):
        return self.g1(t) - self.g2(t)

    def G(self, t):
        return self.G1(t) - self.G2(t)

    def as_dict(self) -> dict:
        d = {"family": self.family, "m": self.m, "q": self.q, "zeta": self.zeta, "zeta_star": self.zeta_star}
        if self.family == "bounded_tail":
            d["T"] = self.T
        return d


def eval_all(nl: Nonlinearity, t):
    """``(g, G, g1, g2, G1, G2)`` at ``t``."""
    g1, g2, G1, G2 = nl.g1(t), nl.g2(t), nl.G1(t), nl.G2(t)
    return g1 - g2, G1 - G2, g1, g2, G1, G2


def _choose_zeta(nl: Nonlinearity) -> float:
    # smallest of k*zeta_star/3 (k = 1..6) reaching 10% of max G on [0, 2 zeta_star]
    zs = nl.zeta_star
    Gmax = float(np.max(nl.G(np.linspace(0.0, 2.0 * zs, 2001))))
    for k in range(1, 7):
        z = k * zs / 3.0
        if nl.G(z) > 0 and nl.G(z) >= 0.1 * Gmax:
            return z
    return 2.0 * zs


def make_model(m: float, q: float, params: Params, family: str = "two_power", T: float | None = None) -> Nonlinearity:
    """Build a nonlinearity satisfying the growth and sign conditions for ``params``.

    Raises
    ------
    DomainError
        ``m <= 0``, ``q <= p``, ``q >= pstar``, unknown family, or a tail cap
        ``T`` that is not beyond the positive zero of ``G``.
    """
    m = float(m)
    q = float(q)
    if not (m > 0 and math.isfinite(m)):
        raise DomainError(f"m must be positive, got {m!r}")
    if not q > params.p:
        raise DomainError(f"q must satisfy q > p = {params.p!r}, got q={q!r}")
    if not q < params.pstar:
        raise DomainError(f"q must satisfy q < pstar = {params.pstar!r}, got q={q!r}")
    if family not in FAMILIES:
        raise DomainError(f"unknown nonlinearity family {family!r}; expected one of {FAMILIES}")
    zeta_star = (q * m / params.p) ** (1.0 / (q - params.p))
    if family == "bounded_tail":
        T = 3.0 * zeta_star if T is None else float(T)
        if not T > zeta_star:
            raise DomainError(f"tail cap T must exceed zeta_star = {zeta_star!r}, got {T!r}")
    else:
        T = math.inf
    nl = Nonlinearity(m=m, q=q, p=params.p, family=family, T=T, zeta_star=zeta_star)
    return Nonlinearity(m=m, q=q, p=params.p, family=family, T=T, zeta_star=zeta_star, zeta=_choose_zeta(nl))


def initializer_value(nl: Nonlinearity, R: float, r):
    """``w_R(r) = clip(zeta (R + 1 - r), 0, zeta)``: plateau on ``r <= R``, linear ramp to 0 at ``R + 1``."""
    z = nl.zeta
    return np.clip(z * (R + 1.0 - np.asarray(r, dtype=np.float64)), 0.0, z)


def initial_guess(nl: Nonlinearity, params: Params, R: float, grid: GridSpec | None = None) -> RadialProfile:
    """Plateau of height ``zeta`` on ``|x| <= R`` with a unit linear ramp to 0.

    The grid defaults to :class:`GridSpec` and is enlarged (same cell count)
    when ``R + 1`` does not fit.
    """
    if not R > 0:
        raise DomainError(f"R must be positive, got {R!r}")
    grid = grid or GridSpec()
    if grid.Rmax < R + 1:
        grid = GridSpec(grid.M, 1.25 * (R + 1), grid.ratio, grid.n_graded)
    r = grid.nodes()
    return RadialProfile(r, initializer_value(nl, R, r))
