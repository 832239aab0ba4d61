"""Principal ideals, the level-3 base case, norm descent and the per-level PIP loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..intlinalg import column_hnf_basis
from ..lattice import babai_nearest_plane, decode_exponents
from ..params import DomainError, TowerParams, level
from ..ring import DEFAULT_PRECISION, RingElement, field_norm
from ..sgp import adaptive_target, verify_same_ideal
from ..units import TowerFactoredElement, delta_rank, level_units, log_unit_basis
from .hsp import HSPInstance, hsp_sample, recover_relations, working_modulus

MAX_PIP_LEVEL = 8


class NotExpectedForm(ValueError):
    pass


class PIPError(ArithmeticError):
    def __init__(self, level_index: int, msg: str):
        super().__init__(f"level {level_index}: {msg}")
        self.level = level_index


@dataclass(frozen=True)
class PrincipalIdeal:
    """The fractional ideal (generator / denominator), generator-backed."""

    level: TowerParams
    generator: RingElement | TowerFactoredElement
    denominator: int = 1
    z_basis: tuple | None = None

    @classmethod
    def of(cls, g, denominator: int = 1) -> "PrincipalIdeal":
        return cls(g.level, g, int(denominator))

    def element(self) -> RingElement:
        g = self.generator
        return g.expand() if isinstance(g, TowerFactoredElement) else g

    def norm(self) -> Fraction:
        return Fraction(abs(field_norm(self.element())), self.denominator ** self.level.n)

    def with_z_basis(self) -> "PrincipalIdeal":
        """Attach the Z-basis (column HNF of the multiples g * zeta^i); integral ideals only."""
        if self.denominator != 1:
            raise ValueError("Z-basis is only attached to integral ideals")
        g = self.element()
        rows = [list(g.shift(i).coeffs) for i in range(self.level.n)]
        return PrincipalIdeal(self.level, self.generator, 1, tuple(tuple(r) for r in column_hnf_basis(rows)))

    def same_as(self, other: "PrincipalIdeal") -> bool:
        a = self.element() * other.denominator
        b = other.element() * self.denominator
        return verify_same_ideal(a, b)


def sqrt2_element() -> RingElement:
    """zeta + zeta^-1 at level 3, whose square is 2 and whose norm is 4."""
    return RingElement.from_exponents(3, [1, -1])


@dataclass(frozen=True)
class BaseCaseResult:
    e: int
    numerator: RingElement
    denominator: int


def _log4(x: int) -> int | None:
    e = 0
    while x > 1 and x % 4 == 0:
        x //= 4
        e += 1
    return e if x == 1 else None


def pip_base_case(I: PrincipalIdeal) -> BaseCaseResult:
    """Find e with I = (s^e), s = zeta + zeta^-1, from the exact norm 4^|e|.

    Negative e gives the fractional ideal generated by s^|e| / 2^|e|.
    Torsion and unit factors in the given generator are invisible here.
    """
    if I.level.k != 3:
        raise DomainError("the base case runs at level 3")
    nm = I.norm()
    if nm.denominator == 1:
        e = _log4(nm.numerator)
    else:
        e = _log4(nm.denominator) if nm.numerator == 1 else None
        e = -e if e is not None else None
    if e is None:
        raise NotExpectedForm(f"norm {nm} is not a power of 4")
    num = sqrt2_element() ** abs(e)
    den = 1 << abs(e) if e < 0 else 1
    cand = PrincipalIdeal(I.level, num, den)
    if not cand.same_as(I):
        raise NotExpectedForm(f"norm matches 4^{abs(e)} but I != (s^{e})")
    return BaseCaseResult(e, num, den)


def relative_norm_ideal(I: PrincipalIdeal) -> PrincipalIdeal:
    """I * conj(I), generated by g * conj(g): fixed by complex conjugation."""
    g = I.element()
    return PrincipalIdeal(I.level, g * g.conjugate(), I.denominator ** 2)


def descend_one_level(I: PrincipalIdeal) -> PrincipalIdeal:
    """Relative norm to the next level down: g(x) g(-x) is a polynomial in x^2."""
    if I.level.k <= 3:
        raise DomainError("no level below 3 in the tower")
    g = I.element()
    alt = RingElement(g.level, tuple(c if i % 2 == 0 else -c for i, c in enumerate(g.coeffs)))
    prod = g * alt
    lower = RingElement(level(I.level.k - 1), prod.coeffs[0::2])
    return PrincipalIdeal(lower.level, lower, I.denominator ** 2)


def dlog_instance(L: int, exps: list[int], modulus: int | None = None) -> HSPInstance:
    """Registers (x, y_a): hidden subgroup generated by (1, -e) and N Z^D.

    f(x, y) = g^x prod xi_a^y_a modulo everything outside the level-L window
    is constant exactly on cosets of this subgroup.
    """
    N = modulus or working_modulus(L)
    row = (1,) + tuple(-e % N for e in exps)
    return HSPInstance(L, N, len(exps) + 1, (row,))


def _first_coordinate_one(basis: list[list[int]], N: int) -> list[int]:
    """An integer combination of the rows with first coordinate 1, reduced mod N."""
    vec = None
    for row in basis:
        if vec is None:
            vec = list(row)
            continue
        a, b = vec[0], row[0]
        g, s, t = _xgcd(a, b)
        vec = [s * x + t * y for x, y in zip(vec, row)]
    if vec is None or abs(vec[0]) != 1:
        raise ArithmeticError("hidden lattice has no element with first coordinate 1")
    if vec[0] == -1:
        vec = [-x for x in vec]
    half = N // 2
    return [((x + half) % N) - half for x in vec]


def _xgcd(a: int, b: int):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


@dataclass
class TowerPIPResult:
    generator: TowerFactoredElement
    levels: list = field(default_factory=list)
    norm_chain: list = field(default_factory=list)
    verified: bool = False


def tower_pip(I: PrincipalIdeal, seed: int = 0, precision_bits: int = DEFAULT_PRECISION,
              samples_per_register: int = 4) -> TowerPIPResult:
    """Generator of I, stored tower-factored, level by level from 3 to k.

    Each level's unit exponents are the hidden period of a dlog instance; they
    are read back only from HSP samples.  The result is checked by exact
    division against the input generator.
    """
    lv = I.level
    if lv.k > MAX_PIP_LEVEL:
        raise DomainError(f"tower PIP emulation is limited to k <= {MAX_PIP_LEVEL}")
    if I.denominator != 1:
        raise ValueError("tower_pip expects an integral ideal")
    g = I.generator
    rng = np.random.default_rng([seed, lv.k, 0x919])

    # Norm descent: every relative norm keeps the absolute norm.
    chain = []
    J = PrincipalIdeal(lv, I.element())
    chain.append((lv.k, int(J.norm())))
    while J.level.k > 3:
        J = descend_one_level(J)
        chain.append((J.level.k, int(J.norm())))
    if len({v for _, v in chain}) != 1:
        raise PIPError(3, "relative norms disagree with the absolute norm")

    # Ground truth for the hidden periods: the unit part of g relative to the unit basis.
    t, prec = adaptive_target(g, precision_bits)
    basis = log_unit_basis(lv, prec)
    res = babai_nearest_plane(basis.lattice, t)
    truth = decode_exponents(res, basis.order)

    recovered: dict[int, int] = {}
    levels = []
    for L in range(3, lv.k + 1):
        U = level_units(L)
        e_true = [truth.get(a, 0) for a in U]
        inst = dlog_instance(L, e_true)
        samples = hsp_sample(inst, rng, samples_per_register * inst.num_registers)
        rel = recover_relations(samples, inst, samples_per_register)
        rel += [[inst.modulus if i == j else 0 for j in range(inst.num_registers)] for i in range(inst.num_registers)]
        vec = _first_coordinate_one(rel, inst.modulus)
        e_rec = [-y for y in vec[1:]]
        if e_rec != e_true:
            raise PIPError(L, f"recovered exponents {e_rec} differ from the hidden period {e_true}")
        recovered.update({a: e for a, e in zip(U, e_rec) if e})
        levels.append({"L": L, "delta_r": delta_rank(L), "registers": inst.num_registers,
                       "samples": len(samples), "exponents": e_rec})

    if isinstance(g, TowerFactoredElement):
        short = g.times_unit({a: -e for a, e in recovered.items()}).expand()
    else:
        short = TowerFactoredElement(lv, g).times_unit({a: -e for a, e in recovered.items()}).expand()
    out = TowerFactoredElement(lv, short).times_unit(recovered)
    ok = verify_same_ideal(I.element(), short)
    if not ok:
        raise PIPError(lv.k, "output does not generate the input ideal")
    return TowerPIPResult(out, levels, chain, ok)
