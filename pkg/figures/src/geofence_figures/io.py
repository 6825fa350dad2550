"""CSV loading and schema validation for simulator sweep outputs."""

from __future__ import annotations

import csv
from dataclasses import dataclass

SWEEP_COLUMNS = ("policy", "n", "tau_ms", "trials", "p_det", "p_early",
                 "mean_t_det_s", "ci_halfwidth", "status")
NMIN_COLUMNS = ("policy", "tau_ms", "target", "n_min", "trials", "p_det",
                "p_det_lower")

METRICS = ("p_det", "p_early", "mean_t_det_s")
METRIC_LABELS = {"p_det": "detection rate",
                 "p_early": "early-detection probability",
                 "mean_t_det_s": "mean time to detect (s)"}


class SchemaError(ValueError):
    """Input file does not match the documented CSV schema."""


def _read_rows(path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column '{missing[0]}'")
        return list(reader)


def load_sweep(path) -> list[dict]:
    rows = _read_rows(path, SWEEP_COLUMNS)
    out = []
    for row in rows:
        parsed = {"policy": row["policy"], "status": row["status"]}
        for col in ("n", "tau_ms", "trials"):
            parsed[col] = int(row[col]) if row[col] else None
        for col in ("p_det", "p_early", "mean_t_det_s", "ci_halfwidth"):
            parsed[col] = float(row[col]) if row[col] else None
        out.append(parsed)
    return out


def load_nmin(path) -> list[dict]:
    rows = _read_rows(path, NMIN_COLUMNS)
    out = []
    for row in rows:
        out.append({
            "policy": row["policy"],
            "tau_ms": int(row["tau_ms"]),
            "target": float(row["target"]),
            "n_min": int(row["n_min"]) if row["n_min"] else None,
        })
    return out


@dataclass
class SweepGrid:
    """Sweep rows arranged on the (N, tau) lattice for one policy."""

    policy: str
    n_values: list[int]
    tau_values: list[int]
    values: dict          # metric -> 2d list [tau_idx][n_idx] or None
    masked_cells: int     # lattice cells without a usable row

    def value_matrix(self, metric: str):
        return self.values[metric]


def arrange(rows: list[dict], policy: str) -> SweepGrid:
    mine = [r for r in rows if r["policy"] == policy]
    n_values = sorted({r["n"] for r in mine})
    tau_values = sorted({r["tau_ms"] for r in mine})
    index = {(r["tau_ms"], r["n"]): r for r in mine}
    values = {m: [[None] * len(n_values) for _ in tau_values]
              for m in METRICS}
    masked = 0
    for ti, tau in enumerate(tau_values):
        for ni, n in enumerate(n_values):
            row = index.get((tau, n))
            usable = row is not None and row["status"] == "ok"
            if not usable:
                masked += 1
                continue
            for m in METRICS:
                values[m][ti][ni] = row[m]
    return SweepGrid(policy, n_values, tau_values, values, masked)
