"""Scheme parameter catalog and approximation-factor margins."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .params import ALPHA_TABLE, CONSTANTS, gamma_threshold, level_for_degree, sigma_d


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    family: str  # module-lwe | ntru-gpv | module-lip | ntru
    d: int
    n: int
    q: int | None
    sigma_ver: float | None
    sigma_choice: str  # sigma_1 | sigma_2 | sigma_d
    printed_gamma_th: float
    printed_gamma_99: float
    printed_threshold: str
    printed_margin: float
    printed_gamma_99_emp: float | None = None
    printed_margin_emp: float | None = None
    conditionally_broken: bool = False

    @property
    def threshold(self) -> float:
        if self.q is not None:
            return self.q / 2
        return hawk_beta(self.n, self.sigma_ver)

    @property
    def tower_k(self) -> int | None:
        return level_for_degree(self.n)

    @property
    def formula_only(self) -> bool:
        return self.tower_k is None

    @property
    def sigma(self) -> float:
        if self.sigma_choice == "sigma_1":
            return sigma_d(1)
        if self.sigma_choice == "sigma_2":
            return sigma_d(2)
        return sigma_d(self.d)


def hawk_beta(n: int, sigma_ver: float) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return sigma_ver * math.sqrt(8 * n)


_CATALOG = (
    SchemeSpec("ML-KEM-512", "module-lwe", 2, 256, 3329, None, "sigma_d", 14.5, 73, "1664.5", 23),
    SchemeSpec("ML-KEM-768", "module-lwe", 3, 256, 3329, None, "sigma_d", 17.9, 90, "1664.5", 19),
    SchemeSpec("ML-KEM-1024", "module-lwe", 4, 256, 3329, None, "sigma_d", 20.6, 103, "1664.5", 16),
    SchemeSpec("Falcon-512", "ntru-gpv", 2, 512, 12289, None, "sigma_2", 16.9, 85, "6145", 72),
    SchemeSpec("Falcon-1024", "ntru-gpv", 2, 1024, 12289, None, "sigma_2", 19.6, 98, "6145", 63),
    SchemeSpec("Hawk-256", "module-lip", 2, 256, None, 1.042, "sigma_2", 14.5, 73, "beta=47", 0.65, 23, 2.02, True),
    SchemeSpec("Hawk-512", "module-lip", 2, 512, None, 1.425, "sigma_2", 16.9, 85, "beta=91", 1.08, 26, 3.47),
    SchemeSpec("Hawk-1024", "module-lip", 2, 1024, None, 1.571, "sigma_2", 19.6, 98, "beta=142", 1.45, 29, 4.84),
    SchemeSpec("NTRU-HPS-2048-509", "ntru", 2, 508, 2048, None, "sigma_2", 16.9, 85, "1024", 12),
    SchemeSpec("NTRU-HPS-2048-677", "ntru", 2, 676, 2048, None, "sigma_2", 18.0, 90, "1024", 11),
    SchemeSpec("NTRU-HPS-4096-821", "ntru", 2, 820, 4096, None, "sigma_2", 18.7, 94, "2048", 22),
    SchemeSpec("NTRU-HRSS-701", "ntru", 2, 700, 8192, None, "sigma_2", 18.1, 91, "4096", 45),
)


def scheme_catalog() -> list[SchemeSpec]:
    return list(_CATALOG)


def find_scheme(name: str) -> SchemeSpec:
    key = name.lower()
    for s in _CATALOG:
        if s.name.lower() == key:
            return s
    raise KeyError(f"unknown scheme {name!r}; known: {', '.join(s.name for s in _CATALOG)}")


@dataclass
class MarginReport:
    name: str
    mode: str
    gamma_th: float
    gamma_99: float
    threshold: float
    margin: float
    broken: bool
    conditionally_broken: bool
    formula_only: bool


def margin(spec: SchemeSpec, mode: str = "formula", stats=None, alpha: float = ALPHA_TABLE) -> MarginReport:
    """threshold / gamma_99 with gamma_99 = 5 gamma_th (formula), the simulated p99
    (empirical, needs GammaStats) or kappa_emp * gamma_th (kappa_emp)."""
    g_th = gamma_threshold(spec.d, spec.n, alpha, sigma=spec.sigma)
    if mode == "formula":
        g99 = CONSTANTS.kappa_tail * g_th
    elif mode == "empirical":
        if stats is None:
            raise ValueError("empirical mode needs GammaStats for the scheme's (d, n)")
        g99 = stats.p99
    elif mode == "kappa_emp":
        g99 = CONSTANTS.kappa_emp_hawk * g_th
    else:
        raise ValueError(f"unknown margin mode {mode!r}")
    m = spec.threshold / g99
    return MarginReport(spec.name, mode, g_th, g99, spec.threshold, m, m > 1, spec.conditionally_broken,
                        spec.formula_only)


TABLE_HEADERS = ("Scheme", "Family", "d", "n", "q", "γ_th", "γ_99%", "Threshold", "Margin")
_FAMILY_LABEL = {"module-lwe": "Module-LWE", "ntru-gpv": "NTRU-GPV", "module-lip": "Module-LIP", "ntru": "NTRU"}


def table_rows(specs=None, mode: str = "formula", stats=None) -> list[dict]:
    rows = []
    for s in specs or _CATALOG:
        r = margin(s, mode, stats)
        thr = f"{s.threshold:g}" if s.q is not None else f"beta={s.threshold:.0f}"
        rows.append({
            "Scheme": s.name + ("^" if s.conditionally_broken else ""),
            "Family": _FAMILY_LABEL[s.family],
            "d": s.d,
            "n": s.n,
            "q": s.q if s.q is not None else "--",
            "γ_th": f"{r.gamma_th:.1f}",
            "γ_99%": f"{r.gamma_99:.0f}",
            "Threshold": thr,
            "Margin": f"{r.margin:.2f}x" if r.margin < 10 else f"{r.margin:.0f}x",
        })
    return rows


def format_table(rows: list[dict]) -> str:
    widths = {h: max(len(h), *(len(str(r[h])) for r in rows)) for h in TABLE_HEADERS}
    out = ["  ".join(h.ljust(widths[h]) for h in TABLE_HEADERS)]
    out.append("  ".join("-" * widths[h] for h in TABLE_HEADERS))
    for r in rows:
        out.append("  ".join(str(r[h]).ljust(widths[h]) for h in TABLE_HEADERS))
    if any(str(r["Scheme"]).endswith("^") for r in rows):
        out.append("^ conditionally broken: empirical margin above 1 with kappa_emp = 1.6")
    return "\n".join(out)


def catalog_json(specs=None, mode: str = "formula", stats=None) -> str:
    items = []
    for s in specs or _CATALOG:
        d = asdict(s)
        d["threshold"] = s.threshold
        d["tower_k"] = s.tower_k
        d["formula_only"] = s.formula_only
        d["margin"] = asdict(margin(s, mode, stats))
        items.append(d)
    return json.dumps({"schema_version": 1, "mode": mode, "schemes": items}, indent=2)
