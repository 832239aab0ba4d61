"""Exact integer linear algebra: HNF, lattices annihilated mod N, integer relations."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import mpmath
import sympy
from sympy.matrices.normalforms import hermite_normal_form

from .lattice import lll_reduce


def column_hnf_basis(generators: Sequence[Sequence[int]]) -> list[list[int]]:
    """Square row basis of the full-rank lattice spanned by ``generators`` (rows)."""
    M = sympy.Matrix(generators).T
    H = hermite_normal_form(M)
    return [[int(x) for x in H[:, j]] for j in range(H.shape[1])]


def annihilator_lattice(samples: Sequence[Sequence[int]], modulus: int, dim: int) -> list[list[int]]:
    """Basis of {x in Z^dim : <s, x> = 0 mod N for every sample s}.

    The samples together with N*Z^dim span a full-rank lattice P; the
    annihilator is N times its dual, N * P^{-T}, which is integral.
    """
    gens = [[int(x) % modulus for x in s] for s in samples]
    gens += [[modulus if i == j else 0 for j in range(dim)] for i in range(dim)]
    P = column_hnf_basis(gens)
    Pinv = sympy.Matrix(P).inv()
    dual = (Pinv.T * modulus)
    rows = []
    for i in range(dim):
        row = []
        for x in dual[i, :]:
            fx = Fraction(int(sympy.numer(x)), int(sympy.denom(x)))
            if fx.denominator != 1:
                raise ArithmeticError("annihilator basis is not integral")
            row.append(int(fx))
        rows.append(row)
    return rows


def integer_relations(vectors: Sequence[Sequence], precision_bits: int = 256, weight_bits: int | None = None,
                      tolerance_bits: int | None = None) -> list[list[int]]:
    """Small integer relations sum_i r_i v_i = 0 among real vectors.

    Builds the embedding lattice [I | W*V] with W = 2^weight_bits, LLL-reduces
    it, and keeps the rows whose weighted tail is numerically zero and whose
    coefficients stay below 2^(weight_bits/4).  Spurious near-relations have
    coefficients around W^(1/m), so the size cap rejects them even when the
    residual test alone would not.  Relations are returned LLL-reduced.
    """
    m = len(vectors)
    w = weight_bits if weight_bits is not None else precision_bits // 2
    tol = tolerance_bits if tolerance_bits is not None else precision_bits // 3
    with mpmath.workprec(precision_bits + 32):
        W = mpmath.ldexp(1, w)
        rows = []
        for i, v in enumerate(vectors):
            ident = [1 if i == j else 0 for j in range(m)]
            rows.append(ident + [int(mpmath.nint(W * mpmath.mpf(x))) for x in v])
    red = lll_reduce(rows, 0.99)
    out = []
    with mpmath.workprec(precision_bits + 32):
        for row in red:
            r = row[:m]
            if not any(r) or max(abs(x) for x in r) >= 1 << (w // 4):
                continue
            ncols = len(vectors[0])
            resid = max(abs(mpmath.fsum(r[i] * mpmath.mpf(vectors[i][c]) for i in range(m))) for c in range(ncols))
            if resid < mpmath.ldexp(1, -tol):
                out.append(r)
    return out
