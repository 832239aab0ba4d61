"""Batch command-line front end: simulate, attack, resources, schemes.

Exit codes: 0 success, 1 attack or verification failure, 2 usage error.
Machine output goes to stdout (or --out); progress and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .params import DomainError, level

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

MAX_K = 12
MAX_PLANT_K = 9
# Relative --out and --empirical paths resolve against this directory when set.
DATA_DIR_ENV = "CYCLOSGP_DATA_DIR"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "json"
    threads: int = 1
    meta: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _resolve(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(DATA_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(cfg: RunConfig, text: str):
    if not text.endswith("\n"):
        text += "\n"
    dest = _resolve(cfg.out)
    if dest is None:
        sys.stdout.write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)


def _with_meta(d: dict, cfg: RunConfig, extra: dict | None = None) -> dict:
    d = dict(d)
    d.setdefault("schema_version", 1)
    if cfg.meta:
        import datetime
        from . import __version__

        d["meta"] = {"version": __version__, "run_config": json.loads(cfg.to_json()),
                     "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(), **(extra or {})}
    return d


def _dumps(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True)


def _check_k(k: int, limit: int, what: str):
    if not 3 <= k <= MAX_K:
        raise UsageError(f"--k must lie in [3, {MAX_K}], got {k}")
    if k > limit:
        raise UsageError(f"{what} is limited to k <= {limit}, got {k}")


# -- simulate ----------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    from . import montecarlo as mc

    o = cfg.options
    try:
        tc = mc.TrialConfig(model=o["model"], d=o["d"], n=o["n"], dist=o["dist"], num_trials=o["trials"],
                            seed=o["seed"], apply_alpha=o["apply_alpha"], threshold=o["threshold"],
                            full_cvp=o["full_cvp"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    stats = mc.run_trials(tc, workers=cfg.threads, progress=o["progress"])
    if cfg.format == "json":
        text = stats.to_json(per_trial=o["per_trial"], meta=cfg.meta)
    elif cfg.format == "csv":
        text = mc.to_csv([stats])
    else:
        s = stats.summary()
        text = "\n".join(f"{k:<26} {v}" for k, v in s.items())
    _emit(cfg, text)
    if o.get("emit_plot_data"):
        p = _resolve(o["emit_plot_data"])
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(mc.plot_series(stats))
    return EXIT_OK


# -- attack ------------------------------------------------------------------

def cmd_attack(cfg: RunConfig) -> int:
    from . import sgp

    o = cfg.options
    k = o["k"]
    if o["mode"] == "pip":
        return _attack_pip(cfg)
    _check_k(k, MAX_PLANT_K, "plant-and-recover")
    bound = o["exp_bound"] if o["exp_bound"] is not None else level(k).n
    if bound < 0:
        raise UsageError("--exp-bound must be >= 0")
    try:
        res = sgp.plant_and_recover(k, bound, o["seed"], o["threshold"], o["precision"], o["retries"])
    except sgp.RecoveryError as exc:
        print(f"recovery failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    d = sgp.transcript(res)
    if not cfg.meta:
        d.pop("timings_s")
    ok = res.same_ideal and res.outcome.passed
    if cfg.format == "json":
        _emit(cfg, _dumps(_with_meta(d, cfg)))
    else:
        _emit(cfg, "\n".join(f"{k_:<22} {v}" for k_, v in d.items() if k_ != "recovered_g0"))
    print(f"gamma={res.gamma:.4g} threshold={res.outcome.threshold:g} exact={res.exact} "
          f"{'PASS' if ok else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAILURE


def _attack_pip(cfg: RunConfig) -> int:
    from .sgp import gaussian_generator, obfuscate_generator
    from .towerpip import PrincipalIdeal, pip_base_case, tower_pip
    from .towerpip.pip import MAX_PIP_LEVEL, NotExpectedForm, PIPError, sqrt2_element

    o = cfg.options
    k = o["k"]
    _check_k(k, MAX_PIP_LEVEL, "tower PIP emulation")
    if k == 3:
        e = o["exp_bound"] if o["exp_bound"] is not None else 1
        I = PrincipalIdeal.of(sqrt2_element() ** abs(e), 1)
        try:
            r = pip_base_case(I)
        except NotExpectedForm as exc:
            print(f"base case failed: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        d = {"k": 3, "mode": "pip", "e": r.e, "generator": list(r.numerator.coeffs), "denominator": r.denominator,
             "verified": True}
        _emit(cfg, _dumps(_with_meta(d, cfg)))
        return EXIT_OK
    bound = o["exp_bound"] if o["exp_bound"] is not None else level(k).n
    g0 = gaussian_generator(k, o["seed"])
    g, planted = obfuscate_generator(g0, bound, o["seed"])
    try:
        r = tower_pip(PrincipalIdeal.of(g), seed=o["seed"], precision_bits=o["precision"])
    except PIPError as exc:
        print(f"tower PIP failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    d = {"k": k, "mode": "pip", "seed": o["seed"], "exp_bound": bound,
         "levels": r.levels, "norm_chain": [[L, str(v)] for L, v in r.norm_chain],
         "generator_exponents": {str(a): e for a, e in sorted(r.generator.exponents().items())},
         "verified": r.verified}
    _emit(cfg, _dumps(_with_meta(d, cfg)))
    return EXIT_OK if r.verified else EXIT_FAILURE


# -- resources ---------------------------------------------------------------

def cmd_resources(cfg: RunConfig) -> int:
    from .towerpip.resources import resource_estimate

    o = cfg.options
    _check_k(o["k"], MAX_K, "resource estimation")
    if o["code_distance"] < 1:
        raise UsageError("--code-distance must be >= 1")
    est = resource_estimate(o["k"], o["code_distance"], o["error_target"])
    if cfg.format == "json":
        _emit(cfg, _dumps(_with_meta(est.to_dict(), cfg)))
    elif cfg.format == "csv":
        rows = est.rows()
        _emit(cfg, "row,value\n" + "".join(f"{k},{v}\n" for k, v in rows.items()))
    else:
        _emit(cfg, est.to_text())
    return EXIT_OK


# -- schemes -----------------------------------------------------------------

def cmd_schemes(cfg: RunConfig) -> int:
    from . import schemes as sc

    o = cfg.options
    specs = sc.scheme_catalog()
    if o["only"]:
        try:
            specs = [sc.find_scheme(name) for name in o["only"]]
        except KeyError as exc:
            raise UsageError(exc.args[0]) from exc
    stats = None
    mode = o["mode"]
    if o["empirical"]:
        from .montecarlo import GammaStats

        p = _resolve(o["empirical"])
        if not p.exists():
            raise UsageError(f"stats file {p} not found; run `simulate --per-trial --out {o['empirical']}` first")
        try:
            stats = GammaStats.from_json(p.read_text())
        except (ValueError, KeyError) as exc:
            raise UsageError(f"bad stats file {p}: {exc}") from exc
        mode = "empirical"
    elif mode == "empirical":
        raise UsageError("empirical mode needs --empirical STATS.json")

    reports = []
    for s in specs:
        r = sc.margin(s, mode, stats)
        item = asdict(r)
        if s.family == "module-lip":
            k_emp = sc.margin(s, "kappa_emp")
            item["kappa_emp_gamma_99"] = k_emp.gamma_99
            item["kappa_emp_margin"] = k_emp.margin
            item["flag"] = (f"conditionally broken: margin {k_emp.margin:.2f}x with kappa_emp"
                            if s.conditionally_broken else None)
        reports.append(item)
    if cfg.format == "json":
        _emit(cfg, _dumps(_with_meta({"mode": mode, "schemes": reports}, cfg)))
    elif cfg.format == "csv":
        rows = sc.table_rows(specs, mode, stats)
        lines = [",".join(sc.TABLE_HEADERS)] + [",".join(str(r[h]) for h in sc.TABLE_HEADERS) for r in rows]
        _emit(cfg, "\n".join(lines))
    else:
        text = sc.format_table(sc.table_rows(specs, mode, stats))
        flags = [f"{r['name']}: {r['flag']}" for r in reports if r.get("flag")]
        _emit(cfg, "\n".join([text] + flags))
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    from .montecarlo import DEFAULT_TRIALS, default_workers
    from .ring import DEFAULT_PRECISION

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "table"), default=None)
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    common.add_argument("--no-meta", action="store_true", help="omit timestamps and timings for byte-stable output")

    p = argparse.ArgumentParser(prog="cyclosgp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo approximation-factor statistics")
    s.add_argument("--d", type=int, required=True, help="module rank")
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--model", choices=("ring", "gaussian"), default="ring")
    s.add_argument("--dist", default="uniform:3329", help="uniform:Q | cbd:ETA | gaussian:SIGMA")
    s.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="10000 by default; 100000 for the full tail")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--threshold", type=float, default=3329 / 2)
    s.add_argument("--apply-alpha", action="store_true", help="scale gamma by alpha_d = 1.17")
    s.add_argument("--full-cvp", action="store_true", help="also run Babai per trial (<= 1000 trials)")
    s.add_argument("--per-trial", action="store_true", help="include per-trial data in the JSON")
    s.add_argument("--emit-plot-data", metavar="CSV", help="write histogram and ECDF series as CSV")
    s.add_argument("--progress", action="store_true")

    a = sub.add_parser("attack", parents=[common], help="synthesized short-generator recovery")
    a.add_argument("--k", type=int, required=True, help="tower level, m = 2^k")
    a.add_argument("--exp-bound", type=int, default=None, help="planted unit exponent bound (default n)")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--mode", choices=("plant", "pip"), default="plant")
    a.add_argument("--threshold", type=float, default=3329 / 2)
    a.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    a.add_argument("--retries", type=int, default=3, help="alternative basis orderings to try")

    r = sub.add_parser("resources", parents=[common], help="quantum resource table")
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--code-distance", type=int, default=30)
    r.add_argument("--error-target", type=float, default=1e-15)

    c = sub.add_parser("schemes", parents=[common], help="scheme margin table")
    c.add_argument("--only", action="append", help="restrict to a scheme (repeatable)")
    c.add_argument("--mode", choices=("formula", "kappa_emp", "empirical"), default="formula")
    c.add_argument("--empirical", metavar="STATS.json", help="simulate output with --per-trial")

    p.set_defaults(_default_workers=default_workers)
    return p


_DEFAULT_FORMAT = {"simulate": "json", "attack": "json", "resources": "table", "schemes": "table"}
_HANDLERS = {"simulate": cmd_simulate, "attack": cmd_attack, "resources": cmd_resources, "schemes": cmd_schemes}
_COMMON = ("out", "format", "threads", "no_meta", "subcommand", "_default_workers")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    threads = ns.threads if ns.threads is not None else ns._default_workers()
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    opts = {k: v for k, v in vars(ns).items() if k not in _COMMON}
    return RunConfig(ns.subcommand, opts, ns.out, ns.format or _DEFAULT_FORMAT[ns.subcommand], threads,
                     not ns.no_meta)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = config_from_args(ns)
        return _HANDLERS[cfg.subcommand](cfg)
    except (UsageError, DomainError) as exc:
        print(f"cyclosgp {ns.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
