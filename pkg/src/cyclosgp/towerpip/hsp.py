"""Hidden-subgroup stand-in: uniform samples from H^perp and lattice recovery from them.

The quantum measurement in each HSP round returns a uniform element of the
annihilator H^perp of the hidden subgroup.  Here that distribution is produced
classically from a known relation lattice, and recovery uses only the samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from ..intlinalg import annihilator_lattice, integer_relations
from ..lattice import lll_reduce
from ..units import delta_rank, unit_indices, unit_log_row

# Samples per register requested before recovery is attempted.
SAMPLES_PER_REGISTER = 4
MAX_MODULUS_BITS = 64


class NeedMoreSamples(RuntimeError):
    pass


def precision_bits_for_level(L: int) -> int:
    """b_L = ceil(10 * L * 2^L)."""
    return 10 * L * (1 << L)


def working_modulus(L: int) -> int:
    return 1 << min(precision_bits_for_level(L), MAX_MODULUS_BITS)


@dataclass(frozen=True)
class HSPInstance:
    L: int
    modulus: int
    num_registers: int
    relation_lattice: tuple  # rows generating H (together with modulus * Z^D)
    labels: tuple = ()

    def annihilator_basis(self) -> list[list[int]]:
        return annihilator_lattice(self.relation_lattice, self.modulus, self.num_registers)


def planted_instance(L: int, relations: Sequence[Sequence[int]], modulus: int | None = None) -> HSPInstance:
    rels = tuple(tuple(int(x) for x in r) for r in relations)
    D = len(rels[0]) if rels else delta_rank(L)
    return HSPInstance(L, modulus or working_modulus(L), D, rels)


def hsp_sample(inst: HSPInstance, seed: int | np.random.Generator, count: int = 1) -> list[list[int]]:
    """Uniform elements of H^perp = {s : <s, h> = 0 mod N for h in H}.

    Uniform coefficients mod N on a basis of the annihilator lattice push
    forward to the uniform law on the finite group it spans modulo N.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    basis = _annihilator_cached(inst)
    N = inst.modulus
    out = []
    for _ in range(count):
        coef = [int.from_bytes(rng.bytes(N.bit_length() // 8 + 1), "little") % N for _ in basis]
        s = [0] * inst.num_registers
        for c, row in zip(coef, basis):
            if c:
                s = [x + c * y for x, y in zip(s, row)]
        out.append([x % N for x in s])
    return out


_ANNIHILATORS: dict = {}


def _annihilator_cached(inst: HSPInstance):
    key = (inst.modulus, inst.num_registers, inst.relation_lattice)
    if key not in _ANNIHILATORS:
        _ANNIHILATORS[key] = inst.annihilator_basis()
    return _ANNIHILATORS[key]


def recover_relations(samples: Sequence[Sequence[int]], inst: HSPInstance,
                      samples_per_register: int = SAMPLES_PER_REGISTER) -> list[list[int]]:
    """Short basis of the lattice annihilated by the samples, modulo N * Z^D.

    The annihilator of the samples contains N * Z^D; after LLL the genuine
    relations are the rows far shorter than N.  Raises NeedMoreSamples when
    there are too few samples to have pinned down H^perp.
    """
    D = inst.num_registers
    if len(samples) < samples_per_register * D:
        raise NeedMoreSamples(f"{len(samples)} samples, need {samples_per_register * D}")
    lat = annihilator_lattice(samples, inst.modulus, D)
    red = lll_reduce(lat, 0.99)
    cutoff = 1 << (inst.modulus.bit_length() // 2)
    return [row for row in red if max(abs(x) for x in row) < cutoff]


def same_lattice_mod(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]], modulus: int, dim: int) -> bool:
    """Whether a + N Z^D and b + N Z^D are the same lattice (compared via their annihilators)."""
    return _hnf_key(a, modulus, dim) == _hnf_key(b, modulus, dim)


def _hnf_key(rows, modulus, dim):
    from ..intlinalg import column_hnf_basis

    gens = [list(r) for r in rows] + [[modulus if i == j else 0 for j in range(dim)] for i in range(dim)]
    return tuple(tuple(r) for r in column_hnf_basis(gens))


# --- the unit-relation instance ----------------------------------------------


def antisymmetric_log_part(a: int, L: int, precision_bits: int = 256) -> list:
    """log|sigma_j(xi_a)| - log|sigma_(n-j)(xi_a)| for j < n/2 at level L.

    sigma_j and sigma_(n-j) agree in absolute value on the level below, so a
    unit lies in the level-(L-1) unit group times roots of unity exactly
    when this vector vanishes.
    """
    row = unit_log_row(a, L, precision_bits)
    h = len(row)
    with mpmath.workprec(precision_bits + 32):
        return [row[i] - row[h - 1 - i] for i in range(h // 2)]


def unit_relation_instance(L: int, precision_bits: int = 256, modulus: int | None = None) -> HSPInstance:
    """Registers are all level-L cyclotomic units; H = exponent vectors whose product descends to level L-1.

    The ground truth comes from integer relations among the antisymmetric log
    parts, found by LLL and checked numerically.
    """
    idx = unit_indices(L)
    vecs = [antisymmetric_log_part(a, L, precision_bits) for a in idx]
    rels = integer_relations(vecs, precision_bits)
    return HSPInstance(L, modulus or working_modulus(L), len(idx), tuple(tuple(r) for r in rels), idx)


def descends_one_level(relation: Sequence[int], L: int, precision_bits: int = 256, tol_bits: int = 60) -> bool:
    """Membership of prod xi_a^r_a in the level-(L-1) units, by the log criterion."""
    idx = unit_indices(L)
    with mpmath.workprec(precision_bits + 32):
        acc = None
        for a, r in zip(idx, relation):
            if not r:
                continue
            v = antisymmetric_log_part(a, L, precision_bits)
            acc = [r * x for x in v] if acc is None else [s + r * x for s, x in zip(acc, v)]
        if acc is None:
            return True
        return max(abs(x) for x in acc) < mpmath.ldexp(1, -tol_bits)
