"""Log-embedding L(g), projection onto the trace-zero hyperplane, variance statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .params import TowerParams, level
from .ring import DEFAULT_PRECISION, EmbeddingVector, RingElement, canonical_embed


class PrecisionError(ArithmeticError):
    """An embedding entry is too close to zero for the working precision."""


@dataclass(frozen=True)
class LogVector:
    level: TowerParams
    values: tuple  # mpf, one per j in J
    precision_bits: int = DEFAULT_PRECISION

    @classmethod
    def from_values(cls, k, values: Sequence, precision_bits: int = DEFAULT_PRECISION) -> "LogVector":
        lv = level(k)
        if len(values) != lv.n // 2:
            raise ValueError(f"need {lv.n // 2} entries, got {len(values)}")
        with mpmath.workprec(precision_bits + 32):
            vals = tuple(mpmath.mpf(v) for v in values)
        return cls(lv, vals, precision_bits)

    @classmethod
    def zero(cls, k, precision_bits: int = DEFAULT_PRECISION) -> "LogVector":
        lv = level(k)
        return cls(lv, (mpmath.mpf(0),) * (lv.n // 2), precision_bits)

    def _wp(self):
        return mpmath.workprec(self.precision_bits + 32)

    def __add__(self, other: "LogVector") -> "LogVector":
        with self._wp():
            return LogVector(self.level, tuple(a + b for a, b in zip(self.values, other.values)), self.precision_bits)

    def __sub__(self, other: "LogVector") -> "LogVector":
        with self._wp():
            return LogVector(self.level, tuple(a - b for a, b in zip(self.values, other.values)), self.precision_bits)

    def scale(self, c) -> "LogVector":
        with self._wp():
            return LogVector(self.level, tuple(c * a for a in self.values), self.precision_bits)

    def dot(self, other: "LogVector"):
        with self._wp():
            return mpmath.fdot(self.values, other.values)

    def inf_norm(self):
        return max(abs(v) for v in self.values)

    def total(self):
        with self._wp():
            return mpmath.fsum(self.values)

    def to_numpy(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])


def log_embed(e: EmbeddingVector) -> LogVector:
    """Entrywise log|sigma_j(g)| over J.

    Entries below 2^(-p/4) are refused with PrecisionError; the caller is
    expected to re-embed at doubled precision.
    """
    p = e.precision_bits
    floor = mpmath.ldexp(1, -p // 4)
    out = []
    with mpmath.workprec(p + 32):
        for v in e.values:
            a = abs(v)
            if a == 0 or a < floor:
                raise PrecisionError(f"|sigma_j| = {mpmath.nstr(a, 5)} below 2^-{p // 4}")
            out.append(mpmath.log(a))
    return LogVector(e.level, tuple(out), p)


def log_embed_element(g: RingElement, precision_bits: int = DEFAULT_PRECISION) -> LogVector:
    return log_embed(canonical_embed(g, precision_bits))


def project_H0(v: LogVector) -> LogVector:
    """Subtract the mean (2/n) * sum_j v_j from every entry."""
    with v._wp():
        mean = mpmath.fsum(v.values) / len(v.values)
        return LogVector(v.level, tuple(x - mean for x in v.values), v.precision_bits)


def per_component_variance(v: LogVector) -> float:
    """Mean squared entry of a projected log vector, (2/n) * ||v||^2.

    Each entry is one conjugate pair, so this is the variance of a single
    log|det| coordinate, the quantity that converges to (1/4) sum psi'(j).
    """
    with v._wp():
        return float(mpmath.fsum(x * x for x in v.values) / len(v.values))


def sum_squares_over_degree(v: LogVector) -> float:
    """(1/n) * ||v||^2 with n the ring degree (twice the vector length).

    Half of per_component_variance; kept for comparison with formulas that
    divide the n/2-entry vector by n.
    """
    with v._wp():
        return float(mpmath.fsum(x * x for x in v.values) / v.level.n)
