"""Tower levels, pinned constants and the closed-form scalar formulas.

Everything here is a pure function of small integers, so the rest of the
package can import it freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath

MIN_LEVEL = 3
MAX_LEVEL = 12


class DomainError(ValueError):
    """Argument outside the domain of a formula."""


@dataclass(frozen=True)
class TowerParams:
    """Level ``k`` of the 2-power cyclotomic tower, ``m = 2^k``."""

    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or not MIN_LEVEL <= self.k <= MAX_LEVEL:
            raise DomainError(f"level k={self.k!r} outside [{MIN_LEVEL}, {MAX_LEVEL}]")

    @property
    def m(self) -> int:
        return 1 << self.k

    @property
    def n(self) -> int:
        return 1 << (self.k - 1)

    @property
    def r(self) -> int:
        return self.n // 2 - 1

    @property
    def J(self) -> tuple[int, ...]:
        return tuple(range(1, self.n, 2))


def level(k: int | TowerParams) -> TowerParams:
    return k if isinstance(k, TowerParams) else TowerParams(k)


def level_for_degree(n: int) -> int | None:
    """Tower index k with ``2^(k-1) = n``, or None if n is not a power of two."""
    if n < 1 or n & (n - 1):
        return None
    return n.bit_length()


@dataclass(frozen=True)
class PinnedConstants:
    alpha_d_mlwe: float = math.sqrt(1.36)
    C_worst: float = 3.10
    sigma_t: float = math.pi / (2 * math.sqrt(6))
    kappa_tail: float = 5.0
    kappa_emp_hawk: float = 1.6


CONSTANTS = PinnedConstants()
# Printed value of alpha_d used for every table row.
ALPHA_TABLE = 1.17


@lru_cache(maxsize=None)
def _trigamma_mp(j: int, prec: int) -> mpmath.mpf:
    with mpmath.workprec(prec):
        val = mpmath.pi ** 2 / 6
        for i in range(1, j):
            val -= mpmath.mpf(1) / (i * i)
        return +val


def trigamma(j: int) -> float:
    """psi'(j) for a positive integer, by the downward-free recurrence from pi^2/6.

    Working precision grows with ``log2 j`` so the cancellation in
    ``pi^2/6 - sum 1/i^2`` never eats into the 53 bits returned.
    """
    if not isinstance(j, int) or j < 1:
        raise DomainError(f"trigamma needs a positive integer, got {j!r}")
    prec = 80 + 2 * j.bit_length()
    return float(_trigamma_mp(j, prec))


def sigma_d(d: int) -> float:
    if not isinstance(d, int) or d < 1:
        raise DomainError(f"module rank must be >= 1, got {d!r}")
    return math.sqrt(0.25 * sum(trigamma(j) for j in range(1, d + 1)))


def sigma_d_squared(d: int) -> float:
    return sigma_d(d) ** 2


def gamma_threshold(d: int, n: int, alpha: float = ALPHA_TABLE, sigma: float | None = None) -> float:
    """alpha * exp(sigma_d * sqrt(2 ln n)), the (1+o(1)) factor taken as 1.

    ``sigma`` overrides sigma_d(d) (Falcon's table uses sigma_2 for d=1 targets).
    """
    if n < 8:
        raise DomainError(f"gamma_threshold needs n >= 8, got {n}")
    s = sigma_d(d) if sigma is None else sigma
    return alpha * math.exp(s * math.sqrt(2 * math.log(n)))


def gamma_99_formula(d: int, n: int, alpha: float = ALPHA_TABLE, sigma: float | None = None) -> float:
    return CONSTANTS.kappa_tail * gamma_threshold(d, n, alpha, sigma)


def predicted_rho_inf_median(d: int, n: int) -> float:
    """sigma_d * sqrt(2 ln(n/2)): median of the max over n/2 coordinates."""
    return sigma_d(d) * math.sqrt(2 * math.log(n / 2))
