"""Gram-Schmidt, Babai nearest plane, exponent decoding and LLL."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from sympy import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMRankError

from .logembed import LogVector
from .ring import DEFAULT_PRECISION

# A rounding coefficient within this distance of a half-integer is reported as a tie.
TIE_WINDOW = mpmath.mpf(2) ** -20


class RankDeficient(ArithmeticError):
    pass


def _wp(prec: int):
    return mpmath.workprec(prec + 32)


def gram_schmidt(basis: Sequence[Sequence], precision_bits: int = DEFAULT_PRECISION):
    """Classical Gram-Schmidt of the rows of ``basis``.

    Returns (gso, mu, gso_sq) where gso[i] are the b*_i as mpf lists, mu is
    lower triangular with unit diagonal and gso_sq[i] = ||b*_i||^2.
    Rows may be LogVectors or plain sequences.
    """
    rows = [list(b.values) if isinstance(b, LogVector) else list(b) for b in basis]
    r = len(rows)
    floor = mpmath.ldexp(1, -precision_bits // 4)
    gso, gso_sq = [], []
    mu = [[mpmath.mpf(0)] * r for _ in range(r)]
    with _wp(precision_bits):
        rows = [[mpmath.mpf(x) for x in b] for b in rows]
        for i, b in enumerate(rows):
            v = list(b)
            for j in range(i):
                mu[i][j] = mpmath.fdot(b, gso[j]) / gso_sq[j]
                c = mu[i][j]
                v = [x - c * y for x, y in zip(v, gso[j])]
            mu[i][i] = mpmath.mpf(1)
            nsq = mpmath.fdot(v, v)
            if nsq < floor:
                raise RankDeficient(f"||b*_{i}||^2 = {mpmath.nstr(nsq, 5)} below 2^-{precision_bits // 4}")
            gso.append(v)
            gso_sq.append(nsq)
    return gso, mu, gso_sq


@dataclass(frozen=True)
class LatticeBasis:
    """Row basis with its Gram-Schmidt data, computed once."""

    vectors: tuple  # tuple of mpf tuples
    gso: tuple
    gso_sq: tuple
    mu: tuple
    precision_bits: int
    _np: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def build(cls, rows: Sequence[Sequence], precision_bits: int = DEFAULT_PRECISION) -> "LatticeBasis":
        gso, mu, gso_sq = gram_schmidt(rows, precision_bits)
        with _wp(precision_bits):
            vecs = tuple(tuple(mpmath.mpf(x) for x in (r.values if isinstance(r, LogVector) else r)) for r in rows)
        return cls(vecs, tuple(tuple(g) for g in gso), tuple(gso_sq), tuple(tuple(m) for m in mu), precision_bits)

    @property
    def rank(self) -> int:
        return len(self.vectors)

    def gso_norms(self) -> list[float]:
        return [float(mpmath.sqrt(s)) for s in self.gso_sq]

    def numpy(self):
        """float64 copies (basis, gso, gso_sq) for bulk statistics."""
        if not self._np:
            self._np["B"] = np.array([[float(x) for x in v] for v in self.vectors])
            self._np["G"] = np.array([[float(x) for x in v] for v in self.gso])
            self._np["S"] = np.array([float(s) for s in self.gso_sq])
        return self._np["B"], self._np["G"], self._np["S"]


@dataclass(frozen=True)
class CVPResult:
    v: tuple  # lattice point, mpf entries
    coeffs: tuple[int, ...]
    rho: tuple  # t - v
    rho_inf: float
    ties: int = 0  # roundings that landed within TIE_WINDOW of a half-integer
    min_tie_margin: float = 0.5


def round_half_up(x) -> tuple[int, object]:
    """Nearest integer, rounding anything within TIE_WINDOW of a half-integer up.

    Also returns |frac - 1/2|. Unlike ties-to-even this commutes with integer
    shifts, so Babai stays exactly translation-equivariant on exact ties.
    """
    f = mpmath.floor(x)
    frac = x - f
    fi = int(f)
    dist = abs(frac - mpmath.mpf(0.5))
    out = fi + 1 if frac > 0.5 or dist < TIE_WINDOW else fi
    return out, dist


def babai_nearest_plane(basis: LatticeBasis, t) -> CVPResult:
    """c_i = round(<t - sum_{j>i} c_j b_j, b*_i> / ||b*_i||^2), i = r..1."""
    tv = list(t.values) if isinstance(t, LogVector) else list(t)
    p = basis.precision_bits
    r = basis.rank
    coeffs = [0] * r
    ties = 0
    margin = mpmath.mpf(0.5)
    with _wp(p):
        cur = [mpmath.mpf(x) for x in tv]
        target = list(cur)
        for i in range(r - 1, -1, -1):
            x = mpmath.fdot(cur, basis.gso[i]) / basis.gso_sq[i]
            c, dist = round_half_up(x)
            if dist < TIE_WINDOW:
                ties += 1
            margin = min(margin, dist)
            coeffs[i] = c
            if c:
                cur = [a - c * b for a, b in zip(cur, basis.vectors[i])]
        v = [mpmath.mpf(0)] * len(target)
        for c, b in zip(coeffs, basis.vectors):
            if c:
                v = [a + c * y for a, y in zip(v, b)]
        rho = [a - b for a, b in zip(target, v)]
        rho_inf = max(abs(x) for x in rho) if rho else mpmath.mpf(0)
    return CVPResult(tuple(v), tuple(coeffs), tuple(rho), float(rho_inf), ties, float(margin))


def babai_float(basis: LatticeBasis, targets: np.ndarray) -> np.ndarray:
    """Vectorized float64 nearest plane over rows of ``targets``; returns coefficients.

    Used only for bulk statistics where 53 bits are ample.
    """
    B, G, S = basis.numpy()
    cur = np.array(targets, dtype=float, copy=True)
    single = cur.ndim == 1
    if single:
        cur = cur[None, :]
    coeffs = np.zeros((cur.shape[0], B.shape[0]), dtype=np.int64)
    for i in range(B.shape[0] - 1, -1, -1):
        x = cur @ G[i] / S[i]
        c = np.floor(x + 0.5).astype(np.int64)
        coeffs[:, i] = c
        cur -= c[:, None] * B[i][None, :]
    return coeffs[0] if single else coeffs


def decode_exponents(res: CVPResult, order: Sequence[int]) -> dict[int, int]:
    """Map coefficient i to unit index order[i]; zero coefficients are dropped."""
    if len(order) != len(res.coeffs):
        raise ValueError("basis order and coefficient vector differ in length")
    return {a: c for a, c in zip(order, res.coeffs) if c}


def lll_reduce(B: Sequence[Sequence[int]], delta: float | Fraction = 0.99) -> list[list[int]]:
    """LLL-reduce the integer row basis B (exact rational arithmetic)."""
    d = Fraction(delta).limit_denominator(10**6) if not isinstance(delta, Fraction) else delta
    if not Fraction(1, 4) < d < 1:
        raise ValueError(f"delta must lie in (1/4, 1), got {delta}")
    rows = [[int(x) for x in row] for row in B]
    if not rows:
        return []
    ncols = len(rows[0])
    M = DomainMatrix([[ZZ(x) for x in row] for row in rows], (len(rows), ncols), ZZ)
    try:
        R = M.lll(delta=QQ(d.numerator, d.denominator))
    except DMRankError as exc:
        raise RankDeficient(str(exc)) from exc
    return [[int(x) for x in row] for row in R.to_Matrix().tolist()]


def is_lll_reduced(B: Sequence[Sequence[int]], delta: float | Fraction = 0.99) -> bool:
    """Check size reduction and the Lovasz condition exactly over Q."""
    d = Fraction(delta).limit_denominator(10**6)
    rows = [[Fraction(x) for x in r] for r in B]
    gso, nsq = [], []
    mu = [[Fraction(0)] * len(rows) for _ in rows]
    for i, b in enumerate(rows):
        v = list(b)
        for j in range(i):
            mu[i][j] = sum(x * y for x, y in zip(b, gso[j])) / nsq[j]
            v = [x - mu[i][j] * y for x, y in zip(v, gso[j])]
        gso.append(v)
        nsq.append(sum(x * x for x in v))
    for i in range(len(rows)):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    for i in range(1, len(rows)):
        if nsq[i] < (d - mu[i][i - 1] ** 2) * nsq[i - 1]:
            return False
    return True
