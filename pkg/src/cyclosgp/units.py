"""Cyclotomic units, the tower-factored representation and the log-unit basis."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .lattice import LatticeBasis
from .logembed import LogVector, PrecisionError, log_embed_element, project_H0
from .params import DomainError, TowerParams, level
from .ring import DEFAULT_PRECISION, RingElement, linear_form

# Refuse to expand a product whose coefficients are predicted to exceed this many bits.
EXPANSION_BUDGET_BITS = 1 << 16


class ExpansionBudgetExceeded(OverflowError):
    pass


def _check_index(a: int, lv: TowerParams, allow_one: bool = True):
    if a % 2 == 0:
        raise DomainError(f"unit index must be odd, got {a}")
    lo = 1 if allow_one else 3
    if not lo <= a < lv.n:
        raise DomainError(f"unit index {a} outside [{lo}, {lv.n}) at k={lv.k}")


def cyclotomic_unit(a: int, k) -> RingElement:
    """xi_a = sum_{|t| <= (a-1)/2} zeta^t, whose embeddings are sin(a pi j/m)/sin(pi j/m)."""
    lv = level(k)
    _check_index(a, lv)
    h = (a - 1) // 2
    return RingElement.from_exponents(lv, range(-h, h + 1))


def cyclotomic_unit_inverse(a: int, k) -> RingElement:
    """Exact inverse: zeta^h * sigma_a(1 + zeta + ... + zeta^(b-1)) with b = a^-1 mod m."""
    lv = level(k)
    _check_index(a, lv)
    h = (a - 1) // 2
    b = pow(a, -1, lv.m)
    return RingElement.from_exponents(lv, (h + a * i for i in range(b)))


def unit_indices(k) -> tuple[int, ...]:
    """Odd a with 1 < a < n, the r indices of the unit basis in ascending order."""
    return tuple(range(3, level(k).n, 2))


def unit_level(a: int) -> int:
    """Tower level L whose index window (2^(L-2), 2^(L-1)) contains a."""
    if a < 3 or a % 2 == 0:
        raise DomainError(f"unit index must be odd and >= 3, got {a}")
    return a.bit_length() + 1


def level_units(L: int) -> tuple[int, ...]:
    """Odd a in (2^(L-2), 2^(L-1)); for L = 3 this is {3}."""
    if L < 3:
        raise DomainError(f"level must be >= 3, got {L}")
    return tuple(a for a in range((1 << (L - 2)) + 1, 1 << (L - 1), 2))


def new_units_at_level(L: int) -> tuple[int, ...]:
    if L < 4:
        raise DomainError(f"new units are defined from level 4 upward, got {L}")
    return level_units(L)


def delta_rank(L: int) -> int:
    return 1 if L == 3 else 1 << (L - 3)


@lru_cache(maxsize=256)
def unit_log_row(a: int, k: int, precision_bits: int) -> tuple:
    """log|sigma_j(xi_a)| over J from the sine ratio."""
    lv = level(k)
    with mpmath.workprec(precision_bits + 32):
        return tuple(mpmath.log(abs(mpmath.sinpi(mpmath.mpf(a * j) / lv.m) / mpmath.sinpi(mpmath.mpf(j) / lv.m)))
                     for j in lv.J)


@dataclass(frozen=True)
class UnitExponents:
    level: TowerParams
    exps: Mapping[int, int]

    def __post_init__(self):
        for a in self.exps:
            _check_index(a, self.level, allow_one=False)

    @classmethod
    def of(cls, k, exps: Mapping[int, int]) -> "UnitExponents":
        return cls(level(k), {int(a): int(e) for a, e in exps.items() if e})

    def nonzero(self) -> dict[int, int]:
        return {a: e for a, e in self.exps.items() if e}


@dataclass(frozen=True)
class TowerFactoredElement:
    """base * zeta^torsion * prod xi_a^e_a, exponents grouped by tower level.

    ``factors`` maps each level L to the exponents of the unit indices in its
    window.  Nothing is multiplied out unless expand() is called.
    """

    level: TowerParams
    base: RingElement
    factors: Mapping[int, Mapping[int, int]] = field(default_factory=dict)
    torsion: int = 0

    def exponents(self) -> dict[int, int]:
        out = {}
        for exps in self.factors.values():
            out.update({a: e for a, e in exps.items() if e})
        return out

    def with_exponents(self, exps: Mapping[int, int]) -> "TowerFactoredElement":
        return TowerFactoredElement(self.level, self.base, _group(exps), self.torsion)

    def times_unit(self, exps: Mapping[int, int], torsion: int = 0) -> "TowerFactoredElement":
        cur = self.exponents()
        for a, e in exps.items():
            cur[a] = cur.get(a, 0) + e
        return TowerFactoredElement(self.level, self.base, _group(cur), (self.torsion + torsion) % self.level.m)

    def eval_log(self, j: int, precision_bits: int = DEFAULT_PRECISION):
        return tower_eval_log(self, j, precision_bits)

    def log_vector(self, precision_bits: int = DEFAULT_PRECISION) -> LogVector:
        base = log_embed_element(self.base, precision_bits)
        vals = list(base.values)
        with mpmath.workprec(precision_bits + 32):
            for a, e in self.exponents().items():
                row = unit_log_row(a, self.level.k, precision_bits)
                vals = [v + e * x for v, x in zip(vals, row)]
        return LogVector(self.level, tuple(vals), precision_bits)

    def storage_bits(self) -> int:
        """Bits to store base coefficients, exponents and torsion."""
        bits = sum(abs(c).bit_length() + 1 for c in self.base.coeffs)
        bits += sum(abs(e).bit_length() + 1 for e in self.exponents().values())
        return bits + self.level.k

    def predicted_bits(self) -> int:
        """Upper estimate of coefficient size after expansion.

        |sigma_j(base)| <= ||base||_1 and each coefficient is an average of
        embeddings, so log2 ||base||_1 plus the largest unit log bounds it.
        """
        exps = self.exponents()
        top = 0.0
        if exps:
            acc = np.zeros(self.level.n // 2)
            for a, e in exps.items():
                acc += e * np.array([float(x) for x in unit_log_row(a, self.level.k, 64)])
            top = max(0.0, float(acc.max()))
        return int(top / math.log(2)) + self.base.l1_norm().bit_length() + 2

    def expand(self, budget_bits: int = EXPANSION_BUDGET_BITS) -> RingElement:
        pred = self.predicted_bits()
        if pred > budget_bits:
            raise ExpansionBudgetExceeded(f"predicted {pred} coefficient bits exceeds budget {budget_bits}")
        k = self.level
        acc = self.base.shift(self.torsion)
        for a, e in sorted(self.exponents().items()):
            u = cyclotomic_unit(a, k) if e > 0 else cyclotomic_unit_inverse(a, k)
            acc = acc * (u ** abs(e))
        return acc

    def to_linear_form(self, budget_bits: int = EXPANSION_BUDGET_BITS):
        """(a, b) one level down with value a(zeta^2) + zeta * b(zeta^2)."""
        return linear_form(self.expand(budget_bits))


def _group(exps: Mapping[int, int]) -> dict[int, dict[int, int]]:
    out: dict[int, dict[int, int]] = {}
    for a, e in exps.items():
        if e:
            out.setdefault(unit_level(a), {})[a] = e
    return out


def unit_from_exponents(e: UnitExponents) -> TowerFactoredElement:
    return TowerFactoredElement(e.level, RingElement.one(e.level), _group(e.nonzero()), 0)


def tower_eval_log(t: TowerFactoredElement, j: int, precision_bits: int = DEFAULT_PRECISION):
    """log|sigma_j(t)| as a sum of per-factor logs; the product is never formed."""
    lv = t.level
    if j not in lv.J:
        raise DomainError(f"j={j} is not an embedding representative at k={lv.k}")
    idx = lv.J.index(j)
    from .ring import embed_at, working_precision

    with mpmath.workprec(precision_bits + 32):
        prec = working_precision(t.base, precision_bits)
        s = abs(embed_at(t.base.coeffs, j, lv.n, prec))
        if s < mpmath.ldexp(1, -precision_bits // 4):
            raise PrecisionError("base embedding underflow; retry at higher precision")
        total = mpmath.log(s)
        for L in sorted(t.factors):
            for a, e in t.factors[L].items():
                total += e * unit_log_row(a, lv.k, precision_bits)[idx]
        return total


@dataclass(frozen=True)
class UnitLatticeBasis:
    level: TowerParams
    order: tuple[int, ...]  # unit index a of each basis row
    lattice: LatticeBasis

    @property
    def precision_bits(self) -> int:
        return self.lattice.precision_bits

    @property
    def rank(self) -> int:
        return self.lattice.rank

    @property
    def basis(self) -> list[LogVector]:
        return [LogVector(self.level, v, self.precision_bits) for v in self.lattice.vectors]

    def gso_norms(self) -> list[float]:
        return self.lattice.gso_norms()

    def to_json(self) -> str:
        return json.dumps({
            "k": self.level.k,
            "precision_bits": self.precision_bits,
            "order": list(self.order),
            "basis": [[mpmath.nstr(x, self.precision_bits // 3 + 5) for x in v] for v in self.lattice.vectors],
            "gso_sq": [mpmath.nstr(x, self.precision_bits // 3 + 5) for x in self.lattice.gso_sq],
        })

    @classmethod
    def from_json(cls, text: str) -> "UnitLatticeBasis":
        d = json.loads(text)
        p = d["precision_bits"]
        with mpmath.workprec(p + 32):
            rows = [[mpmath.mpf(x) for x in v] for v in d["basis"]]
        return cls(level(d["k"]), tuple(d["order"]), LatticeBasis.build(rows, p))


@lru_cache(maxsize=32)
def _basis_cached(k: int, precision_bits: int, order: tuple[int, ...]) -> UnitLatticeBasis:
    lv = level(k)
    rows = []
    for a in order:
        v = LogVector(lv, unit_log_row(a, k, precision_bits), precision_bits)
        rows.append(project_H0(v))
    return UnitLatticeBasis(lv, order, LatticeBasis.build(rows, precision_bits))


def log_unit_basis(k, precision_bits: int = DEFAULT_PRECISION, order: Sequence[int] | None = None) -> UnitLatticeBasis:
    """Rows Pi_H0(L(xi_a)), ascending a unless a permutation ``order`` of the indices is given."""
    lv = level(k)
    idx = unit_indices(lv)
    if order is None:
        order = idx
    order = tuple(int(a) for a in order)
    if sorted(order) != list(idx):
        raise ValueError("order must be a permutation of the unit indices")
    return _basis_cached(lv.k, precision_bits, order)


def unit_log_matrix(L: int, precision_bits: int = 128) -> np.ndarray:
    return np.array([[float(x) for x in unit_log_row(a, L, precision_bits)] for a in unit_indices(L)])


def unit_rank_check(L: int) -> int:
    """Numeric rank of the log-embedding matrix of all cyclotomic units at level L."""
    level(L)
    M = unit_log_matrix(L)
    if M.size == 0:
        return 0
    return int(np.linalg.matrix_rank(M))
