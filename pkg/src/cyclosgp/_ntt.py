"""Exact negacyclic convolution via word-sized NTT primes and CRT.

Every prime is ``c * 2^17 + 1 < 2^31`` so a primitive ``2n``-th root exists
for all n <= 2^16, and products of two residues fit in int64.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy

_PRIME_STEP = 1 << 17
_PRIME_LIMIT = 1 << 31


@lru_cache(maxsize=1)
def _all_primes() -> tuple[int, ...]:
    out = []
    c = (_PRIME_LIMIT - 1) // _PRIME_STEP
    while c > 0:
        p = c * _PRIME_STEP + 1
        if sympy.isprime(p):
            out.append(p)
        c -= 1
    return tuple(out)


def _primes_for_bits(bits: int) -> tuple[int, ...]:
    primes = _all_primes()
    out, acc = [], 0
    for p in primes:
        out.append(p)
        acc += p.bit_length() - 1
        if acc > bits:
            return tuple(out)
    raise OverflowError(f"product needs {bits} bits, beyond the NTT prime table")


@lru_cache(maxsize=None)
def _psi(p: int, n: int) -> int:
    """A primitive 2n-th root of unity mod p."""
    order = 2 * n
    g = 2
    while True:
        cand = pow(g, (p - 1) // order, p)
        if pow(cand, n, p) == p - 1:
            return cand
        g += 1


@lru_cache(maxsize=None)
def _tables(primes: tuple[int, ...], n: int):
    P = np.array(primes, dtype=np.int64)[:, None]
    logn = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.int64)
    for i in range(n):
        rev[i] = int(format(i, f"0{logn}b")[::-1], 2) if logn else 0
    twist = np.empty((len(primes), n), dtype=np.int64)
    untwist = np.empty_like(twist)
    stage_roots = []
    stage_roots_inv = []
    n_inv = np.empty((len(primes), 1), dtype=np.int64)
    for row, p in enumerate(primes):
        psi = _psi(p, n)
        psi_inv = pow(psi, p - 2, p)
        ninv = pow(n, p - 2, p)
        n_inv[row, 0] = ninv
        acc, acc_inv = 1, 1
        for i in range(n):
            twist[row, i] = acc
            untwist[row, i] = acc_inv * ninv % p
            acc = acc * psi % p
            acc_inv = acc_inv * psi_inv % p
    for s in range(logn):
        half = 1 << s
        fw = np.empty((len(primes), half), dtype=np.int64)
        bw = np.empty_like(fw)
        for row, p in enumerate(primes):
            omega = pow(_psi(p, n), 2 * (n // (2 * half)), p)
            omega_inv = pow(omega, p - 2, p)
            a, b = 1, 1
            for j in range(half):
                fw[row, j] = a
                bw[row, j] = b
                a = a * omega % p
                b = b * omega_inv % p
        stage_roots.append(fw)
        stage_roots_inv.append(bw)
    return P, rev, twist, untwist, stage_roots, stage_roots_inv


def _transform(x: np.ndarray, P: np.ndarray, rev: np.ndarray, roots) -> np.ndarray:
    x = x[:, rev]
    nprimes, n = x.shape
    for s, w in enumerate(roots):
        half = 1 << s
        blocks = x.reshape(nprimes, n // (2 * half), 2, half)
        u = blocks[:, :, 0, :]
        v = blocks[:, :, 1, :] * w[:, None, :] % P[:, :, None]
        top = (u + v) % P[:, :, None]
        bot = (u - v) % P[:, :, None]
        x = np.stack([top, bot], axis=2).reshape(nprimes, n)
    return x


def _residues(coeffs, primes: tuple[int, ...]) -> np.ndarray:
    return np.array([[c % p for c in coeffs] for p in primes], dtype=np.int64)


def negacyclic_ntt(a, b) -> list[int]:
    """Product of a and b in Z[x]/(x^n + 1), exact for integers of any size."""
    n = len(a)
    if n != len(b):
        raise ValueError("length mismatch")
    if n == 1:
        return [a[0] * b[0]]
    ma = max((abs(c) for c in a), default=0)
    mb = max((abs(c) for c in b), default=0)
    if ma == 0 or mb == 0:
        return [0] * n
    bound_bits = ma.bit_length() + mb.bit_length() + n.bit_length() + 2
    primes = _primes_for_bits(bound_bits)
    P, rev, twist, untwist, fw, bw = _tables(primes, n)
    fa = _transform(_residues(a, primes) * twist % P, P, rev, fw)
    fb = _transform(_residues(b, primes) * twist % P, P, rev, fw)
    prod = _transform(fa * fb % P, P, rev, bw) * untwist % P
    return _crt(prod, primes)


@lru_cache(maxsize=None)
def _crt_basis(primes: tuple[int, ...]):
    M = 1
    for p in primes:
        M *= p
    coef = []
    for p in primes:
        Mi = M // p
        coef.append(Mi * pow(Mi % p, p - 2, p))
    return M, coef


def _crt(res: np.ndarray, primes: tuple[int, ...]) -> list[int]:
    M, coef = _crt_basis(primes)
    half = M >> 1
    rows = res.tolist()
    out = []
    for i in range(res.shape[1]):
        x = sum(coef[j] * rows[j][i] for j in range(len(primes))) % M
        out.append(x - M if x > half else x)
    return out
