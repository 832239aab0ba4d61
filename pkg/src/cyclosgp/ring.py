"""Exact arithmetic in R = Z[zeta_m] = Z[x]/(x^n + 1), m = 2^k, and its embeddings."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath

from ._ntt import negacyclic_ntt
from .params import TowerParams, level

SCHOOLBOOK_MAX_N = 32
DEFAULT_PRECISION = 256
# Guard bits added on top of the requested precision for every embedding sum.
_GUARD = 24


class LevelMismatch(ValueError):
    pass


class NotDivisible(ArithmeticError):
    """Raised by divide_exact when the quotient is not in R."""


# --- raw negacyclic arithmetic on integer lists ---------------------------


def schoolbook(a: Sequence[int], b: Sequence[int]) -> list[int]:
    n = len(a)
    out = [0] * n
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if not bj:
                continue
            t = i + j
            if t < n:
                out[t] += ai * bj
            else:
                out[t - n] -= ai * bj
    return out


def _kronecker(a: Sequence[int], b: Sequence[int]) -> list[int]:
    # Pack into one big integer per operand, multiply, unpack signed digits.
    n = len(a)
    ma = max(abs(c) for c in a)
    mb = max(abs(c) for c in b)
    width = ma.bit_length() + mb.bit_length() + n.bit_length() + 2
    A = sum(c << (width * i) for i, c in enumerate(a))
    B = sum(c << (width * i) for i, c in enumerate(b))
    C = A * B
    mask = (1 << width) - 1
    half = 1 << (width - 1)
    full = []
    for _ in range(2 * n - 1):
        digit = C & mask
        C >>= width
        if digit >= half:
            digit -= 1 << width
            C += 1
        full.append(digit)
    return [full[i] - (full[i + n] if i + n < len(full) else 0) for i in range(n)]


def negacyclic_mul(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Dispatch: schoolbook for n <= 32, CRT-NTT above, Kronecker past the prime table."""
    if len(a) <= SCHOOLBOOK_MAX_N:
        return schoolbook(a, b)
    if not any(a) or not any(b):
        return [0] * len(a)
    try:
        return negacyclic_ntt(a, b)
    except OverflowError:
        return _kronecker(a, b)


def _alternate(c: Sequence[int]) -> list[int]:
    return [x if i % 2 == 0 else -x for i, x in enumerate(c)]


def tower_norm_adjugate(c: Sequence[int]) -> tuple[int, list[int]]:
    """Return (N(h), adj(h)) with h * adj(h) = N(h), via relative norms down the tower.

    h(x) h(-x) only has even powers, so it is an element H(x^2) one level down;
    N(h) = N(H) and adj(h) = h(-x) adj(H)(x^2).  This is the resultant of h
    and x^n + 1 computed in O(n^2) ring operations.
    """
    n = len(c)
    if n == 1:
        return c[0], [1]
    conj = _alternate(c)
    prod = negacyclic_mul(c, conj)
    norm, adj_down = tower_norm_adjugate(prod[0::2])
    lifted = [0] * n
    lifted[0::2] = adj_down
    return norm, negacyclic_mul(conj, lifted)


# --- ring elements ---------------------------------------------------------


@dataclass(frozen=True)
class RingElement:
    level: TowerParams
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.level.n:
            raise ValueError(f"need {self.level.n} coefficients, got {len(self.coeffs)}")

    # constructors
    @classmethod
    def from_coeffs(cls, k, coeffs: Iterable[int]) -> "RingElement":
        return cls(level(k), tuple(int(c) for c in coeffs))

    @classmethod
    def constant(cls, k, value: int) -> "RingElement":
        lv = level(k)
        return cls(lv, (int(value),) + (0,) * (lv.n - 1))

    @classmethod
    def zero(cls, k) -> "RingElement":
        return cls.constant(k, 0)

    @classmethod
    def one(cls, k) -> "RingElement":
        return cls.constant(k, 1)

    @classmethod
    def zeta_power(cls, k, t: int) -> "RingElement":
        """zeta^t, with zeta^n = -1 folded into the power basis."""
        return cls.from_exponents(k, [t])

    @classmethod
    def from_exponents(cls, k, exps: Iterable[int]) -> "RingElement":
        """Sum of zeta^t over the given (possibly negative) exponents."""
        lv = level(k)
        n, m = lv.n, lv.m
        out = [0] * n
        for t in exps:
            t %= m
            if t < n:
                out[t] += 1
            else:
                out[t - n] -= 1
        return cls(lv, tuple(out))

    # arithmetic
    def _check(self, other: "RingElement"):
        if not isinstance(other, RingElement):
            return NotImplemented
        if other.level != self.level:
            raise LevelMismatch(f"k={self.level.k} vs k={other.level.k}")
        return None

    def __add__(self, other):
        if isinstance(other, int):
            other = RingElement.constant(self.level, other)
        self._check(other)
        return RingElement(self.level, tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return RingElement(self.level, tuple(-x for x in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, int):
            other = RingElement.constant(self.level, other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return RingElement(self.level, tuple(other * x for x in self.coeffs))
        self._check(other)
        return RingElement(self.level, tuple(negacyclic_mul(self.coeffs, other.coeffs)))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers need divide_exact")
        result = RingElement.one(self.level)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def shift(self, t: int) -> "RingElement":
        """Multiply by zeta^t (a signed rotation)."""
        n, m = self.level.n, self.level.m
        t %= m
        out = [0] * n
        for i, c in enumerate(self.coeffs):
            s = (i + t) % m
            if s < n:
                out[s] += c
            else:
                out[s - n] -= c
        return RingElement(self.level, tuple(out))

    def galois(self, a: int) -> "RingElement":
        """Image under zeta -> zeta^a, a odd."""
        if a % 2 == 0:
            raise ValueError("Galois exponent must be odd")
        n, m = self.level.n, self.level.m
        out = [0] * n
        for i, c in enumerate(self.coeffs):
            s = (i * a) % m
            if s < n:
                out[s] += c
            else:
                out[s - n] -= c
        return RingElement(self.level, tuple(out))

    def conjugate(self) -> "RingElement":
        """Complex conjugation zeta -> zeta^-1."""
        return self.galois(self.level.m - 1)

    def l1_norm(self) -> int:
        return sum(abs(c) for c in self.coeffs)

    def sq_norm(self) -> int:
        return sum(c * c for c in self.coeffs)

    def max_bits(self) -> int:
        return max(abs(c) for c in self.coeffs).bit_length()

    def __repr__(self):
        shown = ", ".join(str(c) for c in self.coeffs[:8])
        more = ", ..." if self.level.n > 8 else ""
        return f"RingElement(k={self.level.k}, [{shown}{more}])"


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    return a + b


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    return a * b


def ring_mul_schoolbook(a: RingElement, b: RingElement) -> RingElement:
    a._check(b)
    return RingElement(a.level, tuple(schoolbook(a.coeffs, b.coeffs)))


def ring_mul_ntt(a: RingElement, b: RingElement) -> RingElement:
    a._check(b)
    return RingElement(a.level, tuple(negacyclic_ntt(a.coeffs, b.coeffs)))


def field_norm(g: RingElement) -> int:
    return tower_norm_adjugate(g.coeffs)[0]


def is_unit(g: RingElement) -> bool:
    return abs(field_norm(g)) == 1


def divide_exact(g: RingElement, h: RingElement) -> RingElement:
    """The q in R with q*h = g; NotDivisible when g/h is not integral.

    q = g * adj(h) / N(h), and every coefficient of g * adj(h) must be an
    exact multiple of N(h).  No tolerance is involved.
    """
    g._check(h)
    if h.is_zero():
        raise ZeroDivisionError("division by the zero element")
    norm, adj = tower_norm_adjugate(h.coeffs)
    num = negacyclic_mul(g.coeffs, adj)
    q = []
    for c in num:
        qc, rem = divmod(c, norm)
        if rem:
            raise NotDivisible(f"residue {rem} mod N(h)={norm}")
        q.append(qc)
    return RingElement(g.level, tuple(q))


def inverse_field(h: RingElement) -> tuple[RingElement, int]:
    """h^-1 as (numerator, integer denominator), denominator = N(h)."""
    norm, adj = tower_norm_adjugate(h.coeffs)
    if norm < 0:
        norm, adj = -norm, [-c for c in adj]
    return RingElement(h.level, tuple(adj)), norm


def linear_form(g: RingElement) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split g = a(zeta^2) + zeta * b(zeta^2) with a, b one level down."""
    return g.coeffs[0::2], g.coeffs[1::2]


def from_linear_form(k, a: Sequence[int], b: Sequence[int]) -> RingElement:
    lv = level(k)
    out = [0] * lv.n
    out[0::2] = a
    out[1::2] = b
    return RingElement(lv, tuple(out))


# --- canonical embedding ---------------------------------------------------


@dataclass(frozen=True)
class EmbeddingVector:
    level: TowerParams
    values: tuple  # mpc, one per j in J
    precision_bits: int


@lru_cache(maxsize=64)
def _root_table(n: int, prec: int):
    """cos(pi t / n), sin(pi t / n) for t in [0, 2n): the powers of zeta."""
    with mpmath.workprec(prec):
        cos = [mpmath.cospi(mpmath.mpf(t) / n) for t in range(2 * n)]
        sin = [mpmath.sinpi(mpmath.mpf(t) / n) for t in range(2 * n)]
    return cos, sin


def embed_at(coeffs: Sequence[int], j: int, n: int, prec: int) -> mpmath.mpc:
    """sigma_j(g) = sum_i c_i zeta^(i j) at working precision ``prec``."""
    cos, sin = _root_table(n, prec)
    m = 2 * n
    idx = [(i * j) % m for i in range(n)]
    with mpmath.workprec(prec):
        re = mpmath.fdot(coeffs, [cos[t] for t in idx])
        im = mpmath.fdot(coeffs, [sin[t] for t in idx])
        return mpmath.mpc(re, im)


def working_precision(g: RingElement, precision_bits: int) -> int:
    # Absolute error of each sum stays below 2^-precision_bits after the guard.
    return precision_bits + g.l1_norm().bit_length() + _GUARD


def canonical_embed(g: RingElement, precision_bits: int = DEFAULT_PRECISION) -> EmbeddingVector:
    if precision_bits < 64:
        raise ValueError("precision_bits must be >= 64")
    n = g.level.n
    prec = working_precision(g, precision_bits)
    vals = tuple(embed_at(g.coeffs, j, n, prec) for j in g.level.J)
    return EmbeddingVector(g.level, vals, precision_bits)


def field_norm_numeric(g: RingElement, precision_bits: int = DEFAULT_PRECISION) -> int:
    """Rounded product of |sigma_j(g)|^2 over J, the floating cross-check of field_norm."""
    # The norm can have n * log2 ||g||_1 bits; carry all of them plus margin.
    needed = g.level.n * (g.l1_norm().bit_length() + 1) + 64
    bits = max(precision_bits, needed)
    e = canonical_embed(g, bits)
    with mpmath.workprec(bits + 64):
        acc = mpmath.mpf(1)
        for v in e.values:
            acc *= abs(v) ** 2
        return int(mpmath.nint(acc))
