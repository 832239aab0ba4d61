"""Short generator recovery: log-embed, Babai on the unit lattice, divide out the unit."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .lattice import CVPResult, babai_nearest_plane, decode_exponents
from .logembed import LogVector, PrecisionError, log_embed_element, project_H0
from .params import level
from .ring import DEFAULT_PRECISION, NotDivisible, RingElement, divide_exact, is_unit
from .units import (
    ExpansionBudgetExceeded,
    TowerFactoredElement,
    UnitExponents,
    log_unit_basis,
    unit_from_exponents,
    unit_indices,
)

MAX_ORDER_RETRIES = 3
MAX_DOUBLINGS = 3
ML_KEM_THRESHOLD = 3329 / 2


class RecoveryError(ArithmeticError):
    pass


@dataclass
class AttackOutcome:
    g0: RingElement | None
    gamma: float
    residual: LogVector
    unit_exponents: UnitExponents
    threshold: float
    passed: bool
    retries: int
    precision_bits: int
    order: tuple[int, ...]
    timings: dict = field(default_factory=dict)

    @property
    def rho_inf(self) -> float:
        return math.log(self.gamma)


def approximation_factor(rho) -> float:
    vals = rho.values if isinstance(rho, LogVector) else rho
    if len(vals) == 0:
        return 1.0
    return math.exp(float(max(abs(x) for x in vals)))


def obfuscate_generator(g0: RingElement, exp_bound: int, seed: int):
    """g0 times a random unit with exponents uniform in [-exp_bound, exp_bound], kept factored."""
    if g0.is_zero():
        raise ValueError("g0 must be nonzero")
    lv = g0.level
    rng = np.random.default_rng([seed, lv.k, exp_bound])
    idx = unit_indices(lv)
    draws = rng.integers(-exp_bound, exp_bound + 1, size=len(idx)) if exp_bound > 0 else np.zeros(len(idx), int)
    planted = UnitExponents.of(lv, {a: int(e) for a, e in zip(idx, draws)})
    g = TowerFactoredElement(lv, g0).times_unit(planted.exps)
    return g, planted


def _target(g, precision_bits: int) -> LogVector:
    if isinstance(g, TowerFactoredElement):
        return project_H0(g.log_vector(precision_bits))
    return project_H0(log_embed_element(g, precision_bits))


def adaptive_target(g, precision_bits: int = DEFAULT_PRECISION) -> tuple[LogVector, int]:
    """Projected log vector, doubling precision on underflow; returns (t, bits used)."""
    prec = precision_bits
    for _ in range(MAX_DOUBLINGS):
        try:
            return _target(g, prec), prec
        except PrecisionError:
            prec *= 2
    return _target(g, prec), prec


def _divide_out(g, exps: dict[int, int]) -> RingElement:
    """g * prod xi_a^-e_a, as one exact expansion of the (short) quotient."""
    if isinstance(g, TowerFactoredElement):
        neg = {a: -e for a, e in exps.items()}
        return g.times_unit(neg).expand()
    unit = unit_from_exponents(UnitExponents.of(g.level, exps))
    try:
        eps = unit.expand()
    except ExpansionBudgetExceeded:
        return TowerFactoredElement(g.level, g).times_unit({a: -e for a, e in exps.items()}).expand()
    return divide_exact(g, eps)


def _orderings(k, seed: int):
    idx = unit_indices(k)
    yield idx
    yield tuple(reversed(idx))
    rng = np.random.default_rng([seed, 0x0DE5])
    while True:
        yield tuple(int(a) for a in rng.permutation(idx))


def short_generator_recover(g, threshold: float = ML_KEM_THRESHOLD, precision_bits: int = DEFAULT_PRECISION,
                            order=None, max_retries: int = MAX_ORDER_RETRIES, seed: int = 0) -> AttackOutcome:
    """Recover a short generator of (g) for g a RingElement or a TowerFactoredElement.

    Retries with other basis orderings while gamma >= threshold (best outcome
    kept), and doubles precision on an embedding underflow, a Babai tie or a
    failed division.
    """
    lv = g.level
    orders = _orderings(lv, seed) if order is None else iter([tuple(order)])
    best = None
    retries = 0
    for attempt, ordr in enumerate(orders):
        if attempt > max_retries:
            break
        out = _recover_once(g, threshold, precision_bits, ordr)
        out.retries = retries
        if best is None or out.gamma < best.gamma:
            best = out
        if out.passed:
            break
        retries += 1
    return best


def _recover_once(g, threshold: float, precision_bits: int, order) -> AttackOutcome:
    lv = g.level
    prec = precision_bits
    last_err = None
    tie_seen = False
    for _ in range(MAX_DOUBLINGS + 1):
        timings = {}
        t0 = time.perf_counter()
        try:
            t = _target(g, prec)
        except PrecisionError as exc:
            last_err = exc
            prec *= 2
            continue
        t1 = time.perf_counter()
        basis = log_unit_basis(lv, prec, order)
        res: CVPResult = babai_nearest_plane(basis.lattice, t)
        t2 = time.perf_counter()
        if res.ties and not tie_seen:
            # A tie that survives a doubling is exact (two equally short
            # generators), and rounding ties up settles it deterministically.
            tie_seen = True
            prec *= 2
            continue
        exps = decode_exponents(res, basis.order)
        try:
            g0 = _divide_out(g, exps)
        except (NotDivisible, ExpansionBudgetExceeded) as exc:
            last_err = exc
            prec *= 2
            continue
        t3 = time.perf_counter()
        timings.update(log_embed=t1 - t0, cvp=t2 - t1, divide=t3 - t2)
        residual = LogVector(lv, res.rho, prec)
        gamma = approximation_factor(residual)
        return AttackOutcome(g0, gamma, residual, UnitExponents.of(lv, exps), threshold, gamma < threshold, 0,
                             prec, basis.order, timings)
    raise RecoveryError(f"recovery failed after {MAX_DOUBLINGS} precision doublings: {last_err}")


def verify_same_ideal(g: RingElement, g0: RingElement) -> bool:
    """True iff g / g0 lies in R and is a unit."""
    if isinstance(g, TowerFactoredElement):
        g = g.expand()
    try:
        q = divide_exact(g, g0)
    except NotDivisible:
        return False
    return is_unit(q)


def equal_up_to_torsion(a: RingElement, b: RingElement) -> int | None:
    """Smallest t with a = zeta^t * b, or None; zeta^n = -1 covers the sign."""
    if a.level != b.level:
        return None
    for t in range(a.level.m):
        if b.shift(t) == a:
            return t
    return None


def gaussian_generator(k, seed: int, sigma: float = 1.0) -> RingElement:
    """Short g0 with rounded i.i.d. Gaussian coefficients (never zero)."""
    lv = level(k)
    rng = np.random.default_rng([seed, lv.k, 0x90])
    while True:
        c = np.rint(rng.normal(0.0, sigma, size=lv.n)).astype(int)
        if c.any():
            return RingElement(lv, tuple(int(x) for x in c))


@dataclass
class PlantResult:
    k: int
    seed: int
    exp_bound: int
    planted: dict
    recovered: dict
    torsion: int | None
    same_ideal: bool
    gamma: float
    outcome: AttackOutcome

    @property
    def exact(self) -> bool:
        return self.torsion is not None


def plant_and_recover(k, exp_bound: int, seed: int, threshold: float = ML_KEM_THRESHOLD,
                      precision_bits: int = DEFAULT_PRECISION, max_retries: int = 0) -> PlantResult:
    g0 = gaussian_generator(k, seed)
    g, planted = obfuscate_generator(g0, exp_bound, seed)
    out = short_generator_recover(g, threshold, precision_bits, max_retries=max_retries, seed=seed)
    tors = equal_up_to_torsion(out.g0, g0)
    same = verify_same_ideal(g0, out.g0)
    return PlantResult(level(k).k, seed, exp_bound, planted.nonzero(), out.unit_exponents.nonzero(), tors, same,
                       out.gamma, out)


def transcript(res: PlantResult) -> dict:
    o = res.outcome
    return {
        "k": res.k,
        "seed": res.seed,
        "exp_bound": res.exp_bound,
        "planted_exponents": {str(a): e for a, e in sorted(res.planted.items())},
        "recovered_exponents": {str(a): e for a, e in sorted(res.recovered.items())},
        "recovered_g0": list(o.g0.coeffs),
        "torsion_shift": res.torsion,
        "exact_recovery": res.exact,
        "same_ideal": res.same_ideal,
        "gamma": o.gamma,
        "threshold": o.threshold,
        "pass": o.passed,
        "retries": o.retries,
        "precision_bits": o.precision_bits,
        "timings_s": o.timings,
    }


def transcript_json(res: PlantResult, include_timings: bool = True) -> str:
    d = transcript(res)
    if not include_timings:
        d.pop("timings_s")
    return json.dumps(d, indent=2)
