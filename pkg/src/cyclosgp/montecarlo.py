"""Monte Carlo statistics of the log-determinant residual and the approximation factor gamma."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .modreduce import Dist, embed_batch
from .params import ALPHA_TABLE, level_for_degree, predicted_rho_inf_median, sigma_d_squared

DEFAULT_TRIALS = 10_000
FULL_CVP_MAX_TRIALS = 1_000
# Extreme-value predictions are only checked from this degree up.
ASYMPTOTIC_MIN_N = 64


@dataclass(frozen=True)
class TrialConfig:
    model: str = "ring"  # ring | gaussian
    d: int = 4
    n: int = 256
    dist: str = "uniform:3329"
    num_trials: int = DEFAULT_TRIALS
    seed: int = 1
    alpha_d: float = ALPHA_TABLE
    apply_alpha: bool = False
    threshold: float = 3329 / 2
    full_cvp: bool = False
    start_index: int = 0

    def __post_init__(self):
        if self.model not in ("ring", "gaussian"):
            raise ValueError(f"model must be ring or gaussian, got {self.model!r}")
        if self.num_trials < 1:
            raise ValueError("num_trials must be >= 1")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two >= 2")
        if self.full_cvp and self.num_trials > FULL_CVP_MAX_TRIALS:
            raise ValueError(f"full-CVP mode is limited to {FULL_CVP_MAX_TRIALS} trials")
        Dist.parse(self.dist)


def nearest_rank(sorted_vals: np.ndarray, q: float) -> float:
    """Order statistic of rank ceil(q * N) (1-based), no interpolation."""
    N = len(sorted_vals)
    idx = max(1, math.ceil(q * N)) - 1
    return float(sorted_vals[idx])


@dataclass
class GammaStats:
    config: TrialConfig
    rho_inf: np.ndarray  # per trial, in trial-index order
    sigma_sq: np.ndarray
    resamples: int = 0
    nonzero_cvp: int = 0
    runtime: float = 0.0
    indices: tuple = ()  # (start, stop) ranges covered

    @property
    def num_trials(self) -> int:
        return len(self.rho_inf)

    @property
    def scale(self) -> float:
        return self.config.alpha_d if self.config.apply_alpha else 1.0

    @property
    def per_trial_gamma(self) -> np.ndarray:
        return np.sort(self.scale * np.exp(self.rho_inf))

    @property
    def median(self) -> float:
        return nearest_rank(self.per_trial_gamma, 0.5)

    @property
    def p99(self) -> float:
        return nearest_rank(self.per_trial_gamma, 0.99)

    @property
    def max(self) -> float:
        return float(self.per_trial_gamma[-1])

    @property
    def median_rho_inf(self) -> float:
        return nearest_rank(np.sort(self.rho_inf), 0.5)

    @property
    def mean_sigma_sq(self) -> float:
        return float(np.mean(self.sigma_sq))

    @property
    def failures(self) -> int:
        return int(np.sum(self.scale * np.exp(self.rho_inf) >= self.config.threshold))

    def summary(self) -> dict:
        g_raw = np.sort(np.exp(self.rho_inf))
        return {
            "model": self.config.model,
            "d": self.config.d,
            "n": self.config.n,
            "dist": self.config.dist if self.config.model == "ring" else "complex-gaussian",
            "num_trials": self.num_trials,
            "seed": self.config.seed,
            "median_gamma": self.median,
            "p99_gamma": self.p99,
            "max_gamma": self.max,
            "median_gamma_raw": nearest_rank(g_raw, 0.5),
            "p99_gamma_raw": nearest_rank(g_raw, 0.99),
            "median_gamma_with_alpha": self.config.alpha_d * nearest_rank(g_raw, 0.5),
            "p99_gamma_with_alpha": self.config.alpha_d * nearest_rank(g_raw, 0.99),
            "alpha_applied": self.config.apply_alpha,
            "median_rho_inf": self.median_rho_inf,
            "mean_sigma_sq": self.mean_sigma_sq,
            "target_sigma_sq": sigma_d_squared(self.config.d),
            "threshold": self.config.threshold,
            "failures": self.failures,
            "resamples": self.resamples,
            "nonzero_cvp": self.nonzero_cvp,
        }

    def to_json(self, per_trial: bool = False, meta: bool = True) -> str:
        d = {"schema_version": 1, "config": asdict(self.config), "summary": self.summary()}
        if meta:
            d["runtime_s"] = self.runtime
        if per_trial:
            d["per_trial_rho_inf"] = [float(x) for x in self.rho_inf]
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GammaStats":
        d = json.loads(text)
        cfg = TrialConfig(**d["config"])
        if "per_trial_rho_inf" not in d:
            raise ValueError("stats file lacks per-trial data; rerun with --per-trial")
        rho = np.array(d["per_trial_rho_inf"])
        return cls(cfg, rho, np.full(len(rho), d["summary"]["mean_sigma_sq"]), d["summary"]["resamples"],
                   d["summary"]["nonzero_cvp"], d.get("runtime_s", 0.0))


TABLE_COLUMNS = ("d", "med(γ)", "γ_99%", "Pr[γ<q/2]", "99% margin to q/2")


def csv_row(stats: GammaStats) -> dict:
    return {
        "d": stats.config.d,
        "med(γ)": f"{stats.median:.1f}",
        "γ_99%": f"{stats.p99:.0f}",
        "Pr[γ<q/2]": f"{1 - stats.failures / stats.num_trials:.4f}",
        "99% margin to q/2": f"{stats.config.threshold / stats.p99:.0f}x",
    }


def to_csv(stats_list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS)
    w.writeheader()
    for s in stats_list:
        w.writerow(csv_row(s))
    return buf.getvalue()


def _one_trial(cfg: TrialConfig, index: int, dist: Dist | None, basis=None):
    rng = np.random.default_rng([cfg.seed, index])
    half = cfg.n // 2
    resamples = 0
    while True:
        if cfg.model == "ring":
            coeffs = dist.sample(rng, (cfg.d, cfg.d, cfg.n)).astype(float)
            mats = np.moveaxis(embed_batch(coeffs), -1, 0)
        else:
            re = rng.standard_normal((half, cfg.d, cfg.d))
            im = rng.standard_normal((half, cfg.d, cfg.d))
            mats = (re + 1j * im) / math.sqrt(2)
        sign, logabs = np.linalg.slogdet(mats)
        if np.all(np.isfinite(logabs)) and np.all(sign != 0):
            break
        resamples += 1
    t = logabs - logabs.mean()
    nonzero = 0
    if basis is not None:
        from .lattice import babai_float

        c = babai_float(basis.lattice, t)
        if np.any(c):
            nonzero = 1
            B, _, _ = basis.lattice.numpy()
            t = t - c @ B
    return float(np.max(np.abs(t))), float(np.mean(t * t)), resamples, nonzero


def _run_range(cfg: TrialConfig, start: int, stop: int):
    dist = Dist.parse(cfg.dist) if cfg.model == "ring" else None
    basis = None
    if cfg.full_cvp:
        from .units import log_unit_basis

        basis = log_unit_basis(level_for_degree(cfg.n), 128)
    rho = np.empty(stop - start)
    sig = np.empty(stop - start)
    res = nz = 0
    for i, idx in enumerate(range(start, stop)):
        rho[i], sig[i], r, z = _one_trial(cfg, idx, dist, basis)
        res += r
        nz += z
    return rho, sig, res, nz


def run_trials(cfg: TrialConfig, workers: int = 1, progress: bool = False) -> GammaStats:
    """Deterministic given cfg: trial i draws from SeedSequence([seed, i])."""
    t0 = time.perf_counter()
    start, stop = cfg.start_index, cfg.start_index + cfg.num_trials
    if workers <= 1:
        rho, sig, res, nz = _run_range(cfg, start, stop)
    else:
        chunk = max(1, math.ceil(cfg.num_trials / (workers * 4)))
        bounds = [(s, min(s + chunk, stop)) for s in range(start, stop, chunk)]
        parts = []
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_run_range, cfg, a, b) for a, b in bounds]
            for i, f in enumerate(futs):
                parts.append(f.result())
                if progress:
                    print(f"\r{i + 1}/{len(futs)} chunks", end="", file=sys.stderr)
        if progress:
            print(file=sys.stderr)
        rho = np.concatenate([p[0] for p in parts])
        sig = np.concatenate([p[1] for p in parts])
        res = sum(p[2] for p in parts)
        nz = sum(p[3] for p in parts)
    return GammaStats(cfg, rho, sig, res, nz, time.perf_counter() - t0, ((start, stop),))


def merge(a: GammaStats, b: GammaStats) -> GammaStats:
    """Pool two runs over disjoint trial-index ranges of the same configuration."""
    ca = replace(a.config, num_trials=1, start_index=0)
    cb = replace(b.config, num_trials=1, start_index=0)
    if ca != cb:
        raise ValueError("cannot merge runs with different configurations")
    ranges = sorted(a.indices + b.indices)
    for (s1, e1), (s2, e2) in zip(ranges, ranges[1:]):
        if s2 < e1:
            raise ValueError("trial index ranges overlap")
    # Concatenate in index order so the merged arrays match a single run.
    first, second = (a, b) if min(a.indices)[0] < min(b.indices)[0] else (b, a)
    cfg = replace(a.config, num_trials=a.num_trials + b.num_trials, start_index=min(ranges)[0])
    return GammaStats(cfg, np.concatenate([first.rho_inf, second.rho_inf]),
                      np.concatenate([first.sigma_sq, second.sigma_sq]), a.resamples + b.resamples,
                      a.nonzero_cvp + b.nonzero_cvp, a.runtime + b.runtime, tuple(ranges))


@dataclass
class ExtremeValueReport:
    d: int
    n: int
    median_rho_inf: float
    predicted: float
    relative_deviation: float
    in_regime: bool
    passed: bool | None


def extreme_value_check(stats: GammaStats, d: int, n: int, tolerance: float = 0.10) -> ExtremeValueReport:
    """Median ||rho||_inf against sigma_d * sqrt(2 ln(n/2)); no verdict below n = 64."""
    if stats.num_trials < 1000:
        raise ValueError("extreme-value check needs at least 1000 trials")
    pred = predicted_rho_inf_median(d, n)
    med = stats.median_rho_inf
    dev = (med - pred) / pred
    in_regime = n >= ASYMPTOTIC_MIN_N
    return ExtremeValueReport(d, n, med, pred, dev, in_regime, abs(dev) <= tolerance if in_regime else None)


@dataclass
class SingularTailReport:
    d: int
    num_trials: int
    eps: tuple
    empirical: tuple
    predicted: tuple  # (d eps)^2
    exact: tuple  # 1 - exp(-(d eps)^2)
    events: tuple


def singular_tail_check(d: int, n: int = 256, num_trials: int = 100_000, seed: int = 0,
                        eps=(0.01, 0.02, 0.05), batch: int = 100_000) -> SingularTailReport:
    """Pr[s_min < eps * tau] for d x d standard complex Gaussian matrices, tau = sqrt(d).

    tau = sqrt(d) is the typical column norm.  d * s_min^2 is exactly
    exponential with mean 1, so the probability is 1 - exp(-(d eps)^2),
    which is (d eps)^2 to first order.  n does not enter: every embedding
    site is one independent draw.
    """
    if d < 1 or d > 8:
        raise ValueError("d must lie in [1, 8]")
    rng = np.random.default_rng([seed, d, 0x5111])
    tau = math.sqrt(d)
    counts = np.zeros(len(eps), dtype=np.int64)
    done = 0
    while done < num_trials:
        b = min(batch, num_trials - done)
        M = (rng.standard_normal((b, d, d)) + 1j * rng.standard_normal((b, d, d))) / math.sqrt(2)
        smin = np.linalg.svd(M, compute_uv=False)[:, -1]
        for i, e in enumerate(eps):
            counts[i] += int(np.sum(smin < e * tau))
        done += b
    emp = tuple(float(c) / num_trials for c in counts)
    pred = tuple((d * e) ** 2 for e in eps)
    exact = tuple(-math.expm1(-((d * e) ** 2)) for e in eps)
    return SingularTailReport(d, num_trials, tuple(eps), emp, pred, exact, tuple(int(c) for c in counts))


@dataclass
class TailReport:
    failure_probability: float
    margin: float
    failures: int
    num_trials: int
    threshold: float
    p99: float


def tail_report(stats: GammaStats, threshold: float | None = None) -> TailReport:
    thr = stats.config.threshold if threshold is None else threshold
    g = stats.scale * np.exp(stats.rho_inf)
    fails = int(np.sum(g >= thr))
    return TailReport(fails / stats.num_trials, thr / stats.p99, fails, stats.num_trials, thr, stats.p99)


def plot_series(stats: GammaStats, bins: int = 60) -> str:
    """CSV of (series, x, y): log-spaced gamma histogram and the empirical CDF of ||rho||_inf."""
    g = stats.per_trial_gamma
    edges = np.geomspace(max(g[0], 1.0), g[-1] * 1.0001, bins + 1)
    hist, _ = np.histogram(g, edges)
    rho = np.sort(stats.rho_inf)
    ecdf = np.arange(1, len(rho) + 1) / len(rho)
    step = max(1, len(rho) // 200)
    buf = io.StringIO()
    buf.write("series,x,y\n")
    for lo, hi, h in zip(edges[:-1], edges[1:], hist):
        buf.write(f"gamma_hist,{math.sqrt(lo * hi):.6g},{int(h)}\n")
    for x, y in zip(rho[::step], ecdf[::step]):
        buf.write(f"rho_inf_ecdf,{x:.6g},{y:.6g}\n")
    return buf.getvalue()


def default_workers() -> int:
    return os.cpu_count() or 1
