"""Parameter triple (N, s, p) with its derived quantities."""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class Params:
    """Validated triple with derived exponents.

    Build instances through :func:`validate`; the constructor does not check
    anything.
    """

    N: int
    s: float
    p: float
    pstar: float
    pointwise_ok: bool

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def kernel_exponent(self) -> float:
        """``N + s p``, the power of ``|x - y|`` in the kernel."""
        return self.N + self.s * self.p

    @property
    def q1(self) -> float:
        """Dilation exponent of the Gagliardo energy."""
        return self.N - self.s * self.p

    @property
    def q2(self) -> float:
        """Dilation exponent of the potential energy."""
        return float(self.N)


def validate(N, s, p) -> Params:
    """Check ``N >= 1``, ``0 < s < 1`` and ``1 < p < N/s`` and derive the rest.

    Every failure raises :class:`DomainError` naming the violated bound.
    """
    if isinstance(N, bool):
        raise DomainError(f"N must be an integer, got {N!r}")
    if isinstance(N, float) and N.is_integer():
        N = int(N)
    if not isinstance(N, numbers.Integral):
        raise DomainError(f"N must be an integer, got {N!r}")
    N = int(N)
    if N < 1:
        raise DomainError(f"N must satisfy N >= 1, got N={N}")
    try:
        s = float(s)
        p = float(p)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"s and p must be real numbers: {exc}") from None
    if not math.isfinite(s) or not 0.0 < s < 1.0:
        raise DomainError(f"s must satisfy 0 < s < 1, got s={s!r}")
    if not math.isfinite(p) or p <= 1.0:
        raise DomainError(f"p must satisfy p > 1, got p={p!r}")
    if p >= N / s:
        raise DomainError(f"p must satisfy p < N/s = {N / s!r}, got p={p!r}")
    pstar = N * p / (N - s * p)
    pointwise_ok = p >= 2.0 or s < 2.0 * (p - 1.0) / p
    return Params(N=N, s=s, p=p, pstar=pstar, pointwise_ok=pointwise_ok)
