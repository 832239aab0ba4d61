"""Module sampling, exact determinant ideal and the ring Gram-Schmidt diagnostic."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .params import TowerParams, level
from .ring import RingElement, divide_exact, inverse_field

MAX_RANK = 8
BALANCE_SAMPLES = 10_000


class SingularModule(ArithmeticError):
    pass


@dataclass(frozen=True)
class Dist:
    """Coefficient distribution: uniform (centered mod q), cbd (eta) or gaussian (sigma)."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("uniform", "cbd", "gaussian"):
            raise ValueError(f"unknown distribution {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Dist":
        kind, _, p = text.partition(":")
        defaults = {"uniform": 3329, "cbd": 2, "gaussian": 1.0}
        if kind not in defaults:
            raise ValueError(f"unknown distribution {text!r}")
        val = float(p) if p else defaults[kind]
        if kind != "gaussian":
            val = int(val)
        return cls(kind, val)

    def __str__(self):
        return f"{self.kind}:{self.param:g}"

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "uniform":
            q = int(self.param)
            half = (q - 1) // 2
            return rng.integers(-half, half + 1, size=size, dtype=np.int64)
        if self.kind == "cbd":
            eta = int(self.param)
            a = rng.integers(0, 2, size=tuple(np.atleast_1d(size)) + (eta,), dtype=np.int64).sum(-1)
            b = rng.integers(0, 2, size=tuple(np.atleast_1d(size)) + (eta,), dtype=np.int64).sum(-1)
            return a - b
        return np.rint(rng.normal(0.0, self.param, size=size)).astype(np.int64)

    def variance(self) -> float:
        """Closed-form coefficient variance (gaussian: of the continuous law before rounding)."""
        if self.kind == "uniform":
            half = (int(self.param) - 1) // 2
            return half * (half + 1) / 3
        if self.kind == "cbd":
            return self.param / 2
        return self.param ** 2


@lru_cache(maxsize=None)
def empirical_variance(dist: Dist, seed: int = 0, samples: int = BALANCE_SAMPLES) -> float:
    rng = np.random.default_rng([seed, 0xBA1])
    return float(np.var(dist.sample(rng, samples)))


@dataclass(frozen=True)
class ModuleMatrix:
    level: TowerParams
    d: int
    entries: tuple  # d rows of d RingElements
    dist: str = ""

    def __post_init__(self):
        if len(self.entries) != self.d or any(len(row) != self.d for row in self.entries):
            raise ValueError("entries must be d x d")
        for row in self.entries:
            for x in row:
                if x.level != self.level:
                    raise ValueError("all entries must share one level")

    def coeff_array(self) -> np.ndarray:
        """(d, d, n) float array of coefficients."""
        return np.array([[list(x.coeffs) for x in row] for row in self.entries], dtype=float)


def sample_module(d: int, k, dist: Dist | str, seed: int) -> ModuleMatrix:
    if d < 1 or d > MAX_RANK:
        raise ValueError(f"rank d must lie in [1, {MAX_RANK}]")
    lv = level(k)
    dist = Dist.parse(dist) if isinstance(dist, str) else dist
    rng = np.random.default_rng([seed, d, lv.k])
    arr = dist.sample(rng, (d, d, lv.n))
    entries = tuple(tuple(RingElement(lv, tuple(int(c) for c in arr[i, j])) for j in range(d)) for i in range(d))
    return ModuleMatrix(lv, d, entries, str(dist))


def _det_cofactor(M: Sequence[Sequence[RingElement]]) -> RingElement:
    d = len(M)
    if d == 1:
        return M[0][0]
    if d == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    acc = None
    for j in range(d):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det_cofactor(minor)
        if j % 2:
            term = -term
        acc = term if acc is None else acc + term
    return acc if acc is not None else RingElement.zero(M[0][0].level)


def _det_bareiss(M: Sequence[Sequence[RingElement]]) -> RingElement:
    A = [list(row) for row in M]
    d = len(A)
    lv = A[0][0].level
    sign = 1
    prev = RingElement.one(lv)
    for c in range(d - 1):
        if A[c][c].is_zero():
            swap = next((r for r in range(c + 1, d) if not A[r][c].is_zero()), None)
            if swap is None:
                return RingElement.zero(lv)
            A[c], A[swap] = A[swap], A[c]
            sign = -sign
        for i in range(c + 1, d):
            for j in range(c + 1, d):
                A[i][j] = divide_exact(A[c][c] * A[i][j] - A[i][c] * A[c][j], prev)
        prev = A[c][c]
    return A[d - 1][d - 1] if sign > 0 else -A[d - 1][d - 1]


def determinant(M: Sequence[Sequence[RingElement]]) -> RingElement:
    """Exact determinant over R: cofactor expansion for d <= 4, fraction-free elimination above."""
    return _det_cofactor(M) if len(M) <= 4 else _det_bareiss(M)


def ring_determinant(B: ModuleMatrix) -> RingElement:
    det = determinant(B.entries)
    if det.is_zero():
        raise SingularModule("det B = 0; resample")
    return det


def embed_batch(coeffs: np.ndarray) -> np.ndarray:
    """float64 canonical embedding over J for arrays (..., n) -> (..., n/2)."""
    n = coeffs.shape[-1]
    twist = np.exp(1j * np.pi * np.arange(n) / n)
    return (n * np.fft.ifft(coeffs * twist, axis=-1))[..., : n // 2]


@dataclass(frozen=True)
class GSODecomposition:
    # Diagonal elements as (numerator, positive integer denominator); None in det-only mode.
    diag_generators: tuple | None
    det_ideal_generator: RingElement
    balance_C: float
    per_index_balance: tuple[float, ...]
    mode: str = "full"


def _reduce_fraction(num: RingElement, den: int) -> tuple[RingElement, int]:
    g = den
    for c in num.coeffs:
        g = math.gcd(g, c)
    if g > 1:
        num = RingElement(num.level, tuple(c // g for c in num.coeffs))
        den //= g
    return num, den


def balance_profile(B: ModuleMatrix, dist: Dist | str | None = None, seed: int = 0) -> tuple[float, ...]:
    """mean_j |R_ii(sigma_j(B))|^2 / ((d - i + 1) * n * v), one value per diagonal index.

    v is the coefficient variance estimated from BALANCE_SAMPLES draws of the
    input distribution; (d - i + 1) * n * v is the expectation of |R_ii|^2 for
    a matrix of independent entries.
    """
    dist = Dist.parse(dist or B.dist) if not isinstance(dist, Dist) else dist
    v = empirical_variance(dist, seed)
    emb = embed_batch(B.coeff_array())  # (d, d, n/2)
    mats = np.moveaxis(emb, -1, 0)  # (n/2, d, d)
    R = np.linalg.qr(mats, mode="r")
    diag = np.abs(np.diagonal(R, axis1=-2, axis2=-1)) ** 2  # (n/2, d)
    n, d = B.level.n, B.d
    expected = np.array([(d - i) * n * v for i in range(d)])
    return tuple(float(x) for x in diag.mean(axis=0) / expected)


def gso_over_ring(B: ModuleMatrix, dist: Dist | str | None = None, seed: int = 0) -> GSODecomposition:
    """Exact diagonal via leading-minor ratios D_i / D_(i-1) plus the per-embedding balance constant.

    The diagonal elements multiply to det B exactly.  If a leading minor
    vanishes the diagonal is not defined this way and only the determinant is
    returned (mode "det-only").
    """
    det = ring_determinant(B)
    prof = balance_profile(B, dist, seed)
    C = max(prof)
    minors = [determinant([row[:i] for row in B.entries[:i]]) for i in range(1, B.d + 1)]
    if any(m.is_zero() for m in minors):
        return GSODecomposition(None, det, C, prof, "det-only")
    diag = [(minors[0], 1)]
    for i in range(1, B.d):
        inv_num, inv_den = inverse_field(minors[i - 1])
        diag.append(_reduce_fraction(minors[i] * inv_num, inv_den))
    return GSODecomposition(tuple(diag), det, C, prof, "full")


def reorder_columns(B: ModuleMatrix, permutation: Sequence[int]) -> ModuleMatrix:
    perm = [int(p) for p in permutation]
    if sorted(perm) != list(range(B.d)):
        raise ValueError(f"{permutation!r} is not a permutation of range({B.d})")
    entries = tuple(tuple(row[p] for p in perm) for row in B.entries)
    return ModuleMatrix(B.level, B.d, entries, B.dist)


def permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def best_ordering(B: ModuleMatrix, dist: Dist | str | None = None) -> tuple[tuple[int, ...], float]:
    """Column ordering with the smallest balance constant, by exhaustive search (d <= 4)."""
    if B.d > 4:
        raise ValueError("exhaustive ordering search is limited to d <= 4")
    best = None
    for perm in itertools.permutations(range(B.d)):
        C = max(balance_profile(reorder_columns(B, perm), dist))
        if best is None or C < best[1]:
            best = (perm, C)
    return best
