import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclosgp.logembed import log_embed_element, project_H0
from cyclosgp.params import CONSTANTS, DomainError, level
from cyclosgp.ring import RingElement, canonical_embed, field_norm, is_unit
from cyclosgp.units import (
    ExpansionBudgetExceeded,
    TowerFactoredElement,
    UnitExponents,
    UnitLatticeBasis,
    cyclotomic_unit,
    cyclotomic_unit_inverse,
    delta_rank,
    level_units,
    log_unit_basis,
    new_units_at_level,
    tower_eval_log,
    unit_from_exponents,
    unit_indices,
    unit_level,
    unit_log_row,
    unit_rank_check,
)

SILVER = 1 + math.sqrt(2)  # sin(3 pi/8) / sin(pi/8)


def test_unit_one_is_one():
    assert cyclotomic_unit(1, 5) == RingElement.one(5)


def test_xi3_at_k3_sine_ratio():
    xi = cyclotomic_unit(3, 3)
    emb = canonical_embed(xi, 64).values
    assert abs(complex(emb[0])) == pytest.approx(SILVER)
    assert is_unit(xi)


@pytest.mark.xfail(strict=True, reason="zeta^-1 + 1 + zeta at m=8 is 1 + zeta - zeta^3, "
                                       "not 1: only zeta^2 + zeta^-2 vanishes there")
def test_xi3_at_k3_equals_one():
    assert cyclotomic_unit(3, 3) == RingElement.one(3)


@pytest.mark.parametrize("k", [3, 4, 5, 6])
def test_all_cyclotomic_units_are_units(k):
    for a in unit_indices(k):
        xi = cyclotomic_unit(a, k)
        assert abs(field_norm(xi)) == 1
        assert xi * cyclotomic_unit_inverse(a, k) == RingElement.one(k)


@pytest.mark.parametrize("k", [4, 6])
def test_unit_log_row_matches_embedding(k):
    for a in unit_indices(k):
        direct = log_embed_element(cyclotomic_unit(a, k))
        row = unit_log_row(a, k, 256)
        assert max(abs(x - y) for x, y in zip(direct.values, row)) < mpmath.ldexp(1, -200)


def test_bad_indices():
    for a in (2, 0, 16):
        with pytest.raises(DomainError):
            cyclotomic_unit(a, 5)


def test_new_units_at_level():
    assert new_units_at_level(4) == (5, 7)
    assert new_units_at_level(5) == (9, 11, 13, 15)
    assert len(new_units_at_level(9)) == 64
    with pytest.raises(DomainError):
        new_units_at_level(3)


@given(st.integers(4, 12))
def test_level_windows_partition_indices(k):
    windows = [a for L in range(3, k + 1) for a in level_units(L)]
    assert tuple(windows) == unit_indices(k)
    assert len(windows) == level(k).r
    assert all(len(level_units(L)) == delta_rank(L) for L in range(3, k + 1))
    assert all(unit_level(a) <= k for a in windows)


def test_index_three_belongs_to_level_three():
    assert unit_level(3) == 3
    assert level_units(3) == (3,)


@pytest.mark.xfail(strict=True, reason="xi_3 exists already at k=3 (n=4, 1 < 3 < 4)")
def test_index_three_first_exists_at_level_four():
    with pytest.raises(DomainError):
        cyclotomic_unit(3, 3)


def test_unit_from_exponents():
    one = unit_from_exponents(UnitExponents.of(5, {}))
    assert one.expand() == RingElement.one(5)
    t = unit_from_exponents(UnitExponents.of(4, {3: 1}))
    assert t.factors == {3: {3: 1}}
    assert t.expand() == cyclotomic_unit(3, 4)


def test_factored_log_is_weighted_sum():
    k = 6
    rnd = random.Random(6)
    exps = {a: rnd.randint(-32, 32) for a in unit_indices(k)}
    t = unit_from_exponents(UnitExponents.of(k, exps))
    got = t.log_vector(256)
    with mpmath.workprec(300):
        want = [sum(e * unit_log_row(a, k, 256)[i] for a, e in exps.items()) for i in range(16)]
    assert max(abs(x - y) for x, y in zip(got.values, want)) < mpmath.ldexp(1, -150)


def test_tower_eval_log_examples():
    one = unit_from_exponents(UnitExponents.of(5, {}))
    assert tower_eval_log(one, 1) == 0
    xi = TowerFactoredElement(level(3), RingElement.one(3), {3: {3: 1}})
    assert float(tower_eval_log(xi, 1)) == pytest.approx(math.log(SILVER))
    e = {3: 5, 7: -2, 13: 4}
    a = unit_from_exponents(UnitExponents.of(5, e))
    b = unit_from_exponents(UnitExponents.of(5, {x: -y for x, y in e.items()}))
    for j in level(5).J:
        assert abs(tower_eval_log(a, j) + tower_eval_log(b, j)) < mpmath.ldexp(1, -200)


def test_tower_eval_log_equals_expanded_embedding():
    base = RingElement.from_coeffs(5, [1, -2, 0, 1, 3, 0, 0, 1, -1, 0, 2, 0, 0, 0, 1, 1])
    t = TowerFactoredElement(level(5), base).times_unit({3: 4, 9: -3, 15: 2}, torsion=5)
    emb = log_embed_element(t.expand())
    for idx, j in enumerate(level(5).J):
        assert abs(tower_eval_log(t, j) - emb.values[idx]) < mpmath.ldexp(1, -150)


def test_expansion_budget():
    t = unit_from_exponents(UnitExponents.of(8, {3: 10 ** 6}))
    with pytest.raises(ExpansionBudgetExceeded):
        t.expand()
    assert t.storage_bits() < 200


def test_storage_within_n2_logn():
    k = 8
    n = level(k).n
    rnd = random.Random(8)
    exps = {a: rnd.randint(-n, n) for a in unit_indices(k)}
    base = RingElement.from_coeffs(k, [rnd.randint(-3, 3) for _ in range(n)])
    t = TowerFactoredElement(level(k), base).times_unit(exps)
    assert t.storage_bits() <= n * n * math.log2(n)


def test_log_basis_k3_direct():
    B = log_unit_basis(3)
    assert B.rank == 1
    v = B.lattice.vectors[0]
    # |sigma_3(xi_3)| = 1 / (1 + sqrt 2), so the log pair is already trace-zero
    h = math.log(SILVER)
    assert [float(x) for x in v] == pytest.approx([h, -h])


@pytest.mark.parametrize("k,rank", [(5, 7), (6, 15)])
def test_log_basis_rank_and_trace_zero(k, rank):
    B = log_unit_basis(k)
    assert B.rank == rank
    for v in B.basis:
        assert abs(v.total()) < mpmath.ldexp(1, -200)


def test_coarse_ratio_at_k4():
    B = log_unit_basis(4)
    ratio = CONSTANTS.sigma_t / min(B.gso_norms())
    # n/2-coordinate convention; the full n-coordinate embedding scales norms by sqrt 2
    assert ratio == pytest.approx(0.4545, abs=1e-3)
    assert ratio / math.sqrt(2) == pytest.approx(0.3214, abs=1e-3)


@pytest.mark.parametrize("L,rank", [(3, 1), (4, 3), (5, 7), (6, 15), (7, 31)])
def test_unit_rank_check(L, rank):
    assert unit_rank_check(L) == rank


def test_basis_json_roundtrip():
    B = log_unit_basis(5, 128)
    C = UnitLatticeBasis.from_json(B.to_json())
    assert C.order == B.order
    assert C.gso_norms() == pytest.approx(B.gso_norms(), rel=1e-30)


def test_basis_order_permutation():
    idx = unit_indices(5)
    B = log_unit_basis(5, order=tuple(reversed(idx)))
    assert B.order == tuple(reversed(idx))
    with pytest.raises(ValueError):
        log_unit_basis(5, order=(3, 5))
