"""Quantum cost model for the tower PIP, calibrated once against the ML-KEM-1024 row set."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources as _res

from ..params import level
from ..units import delta_rank
from .hsp import precision_bits_for_level

CALIBRATION_FILE = "resource_calibration.json"
DEFAULT_CODE_DISTANCE = 30
DEFAULT_ERROR_TARGET = 1e-15

ROW_LABELS = (
    ("new_units_top", "New units at top level (Delta r_{k})"),
    ("hsp_repetitions_top", "HSP repetitions at top level"),
    ("oracle_gates_top", "Oracle gates per HSP call (NTT, n={n})"),
    ("qft_gates_top", "Per-HSP QFT cost (top level)"),
    ("level_total_top", "Total logical gates (top level)"),
    ("logical_gates", "Total logical gates (all levels)"),
    ("logical_qubits", "Logical qubits"),
    ("physical_qubits", "Physical qubits (surface code, d={d}, {err:g} error)"),
    ("physical_gates", "Physical gate operations"),
)


def load_calibration() -> dict:
    text = _res.files(__package__).joinpath(CALIBRATION_FILE).read_text()
    return json.loads(text)


@dataclass
class LevelCost:
    L: int
    n_L: int
    delta_r: int
    b_L: int
    repetitions: int
    oracle_gates: int
    qft_gates: float
    level_total_gates: float
    level_qubits: int


@dataclass
class ResourceEstimate:
    k: int
    code_distance: int
    phys_error_target: float
    per_level: list = field(default_factory=list)
    logical_gates: float = 0.0
    logical_qubits: int = 0
    logical_qubits_formula: int = 0
    classical_bits: float = 0.0
    physical_qubits: float = 0.0
    physical_gates: float = 0.0
    calibration_version: int = 0
    extrapolated: bool = False

    @property
    def top(self) -> LevelCost:
        return self.per_level[-1]

    def rows(self) -> dict:
        t = self.top
        return {
            "new_units_top": t.delta_r,
            "hsp_repetitions_top": t.repetitions,
            "oracle_gates_top": t.oracle_gates,
            "qft_gates_top": t.qft_gates,
            "level_total_top": t.level_total_gates,
            "logical_gates": self.logical_gates,
            "logical_qubits": self.logical_qubits,
            "physical_qubits": self.physical_qubits,
            "physical_gates": self.physical_gates,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rows"] = self.rows()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        n = self.top.n_L
        lines = [f"Quantum resource cost, k={self.k}, n={n}"
                 + (" (extrapolated from the k=9 calibration)" if self.extrapolated else "")]
        vals = self.rows()
        width = 58
        for key, label in ROW_LABELS:
            lab = label.format(k=self.k, n=n, d=self.code_distance, err=self.phys_error_target)
            v = vals[key]
            if key == "physical_gates" or key == "logical_gates":
                shown = f"{v:.3g} (2^{math.log2(v):.1f})" if v > 0 else "0"
            elif isinstance(v, float):
                shown = f"{v:.3g}"
            else:
                shown = str(v)
            lines.append(f"{lab:<{width}} {shown}")
        lines.append(f"{'Logical qubits, sum of Delta r_L * b_L':<{width}} {self.logical_qubits_formula}")
        lines.append(f"{'Classical bit operations, sum Delta r_L^5 b_L^2':<{width}} {self.classical_bits:.3g}")
        return "\n".join(lines)


def _levels(k: int, c_qft: float) -> list[LevelCost]:
    out = []
    for L in range(3, k + 1):
        n_L = 1 << (L - 1)
        dr = delta_rank(L)
        b = precision_bits_for_level(L)
        oracle = n_L * (L - 1)
        qft = c_qft * n_L * L * L
        out.append(LevelCost(L, n_L, dr, b, dr, oracle, qft, dr * dr * (oracle + qft), dr * b))
    return out


def calibrate(fit_level: int = 9, code_distance: int = DEFAULT_CODE_DISTANCE, targets: dict | None = None) -> dict:
    """Refit the four constants so the fit level reproduces the target rows exactly."""
    targets = targets or load_calibration()["targets"]
    n = 1 << (fit_level - 1)
    c_qft = targets["qft_gates_top"] / (n * fit_level ** 2)
    levels = _levels(fit_level, c_qft)
    gates = sum(x.level_total_gates for x in levels)
    c_lq = targets["logical_qubits"] / (n * n * math.log2(n))
    overhead = 2 * code_distance ** 2
    c_pq = targets["physical_qubits"] / (targets["logical_qubits"] * overhead)
    c_pg = 2.0 ** targets["physical_gates_log2"] / (gates * overhead)
    return {"c_qft": c_qft, "c_logical_qubits": c_lq, "c_physical_qubits": c_pq, "c_physical_gates": c_pg}


def resource_estimate(k: int, code_distance: int = DEFAULT_CODE_DISTANCE,
                      phys_error_target: float = DEFAULT_ERROR_TARGET, calibration: dict | None = None) -> ResourceEstimate:
    lv = level(k)
    cal = calibration or load_calibration()
    c = cal["constants"]
    levels = _levels(lv.k, c["c_qft"])
    n = lv.n
    est = ResourceEstimate(lv.k, code_distance, phys_error_target, levels)
    est.logical_gates = sum(x.level_total_gates for x in levels)
    est.logical_qubits = math.ceil(c["c_logical_qubits"] * n * n * math.log2(n))
    est.logical_qubits_formula = sum(x.level_qubits for x in levels)
    est.classical_bits = float(sum(x.delta_r ** 5 * x.b_L ** 2 for x in levels))
    overhead = 2 * code_distance ** 2
    est.physical_qubits = c["c_physical_qubits"] * est.logical_qubits * overhead
    est.physical_gates = c["c_physical_gates"] * est.logical_gates * overhead
    est.calibration_version = cal.get("version", 0)
    est.extrapolated = lv.k != cal.get("fit_level", 9) or code_distance != cal.get("fit_code_distance", 30)
    return est
