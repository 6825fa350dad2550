"""Render the (N, tau) metric heatmap panel from a sweep CSV.

One panel row per policy (learned controller on top), one column per
metric; device count on x, duty-cycle period on y, both level-spaced on
their logarithmic grids. Cells without a usable row render as hatched
gray rather than interpolating.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import (METRIC_LABELS, METRICS, SchemaError, SweepGrid, arrange,
                 load_sweep)

POLICY_ORDER = ("rl", "grid")
POLICY_LABELS = {"rl": "learned", "grid": "grid baseline"}


def _masked_matrix(grid: SweepGrid, metric: str) -> np.ma.MaskedArray:
    raw = grid.value_matrix(metric)
    data = np.array([[np.nan if v is None else v for v in row]
                     for row in raw], dtype=float)
    return np.ma.masked_invalid(data)


def render_heatmaps(sweep_path, out_path, vmin=None, vmax=None) -> dict:
    """Write the panel figure; returns bookkeeping counts."""
    rows = load_sweep(sweep_path)
    policies = [p for p in POLICY_ORDER
                if any(r["policy"] == p for r in rows)]
    if not policies:
        raise SchemaError(f"{sweep_path}: no rows")
    grids = {p: arrange(rows, p) for p in policies}
    n_rows = len(policies)
    fig, axes = plt.subplots(n_rows, len(METRICS),
                             figsize=(4.2 * len(METRICS), 3.2 * n_rows),
                             squeeze=False)
    masked_total = 0
    for pi, policy in enumerate(policies):
        grid = grids[policy]
        for mi, metric in enumerate(METRICS):
            ax = axes[pi][mi]
            mat = _masked_matrix(grid, metric)
            masked_total += int(mat.mask.sum()) if mat.mask.shape else 0
            lo = vmin if vmin is not None else (0.0 if metric != "mean_t_det_s" else None)
            hi = vmax if vmax is not None else (1.0 if metric != "mean_t_det_s" else None)
            mesh = ax.pcolormesh(mat, cmap="viridis", vmin=lo, vmax=hi,
                                 edgecolors="none")
            ax.set_facecolor("0.82")
            ax.set_xticks(np.arange(len(grid.n_values)) + 0.5)
            ax.set_xticklabels(grid.n_values, fontsize=7)
            ax.set_yticks(np.arange(len(grid.tau_values)) + 0.5)
            ax.set_yticklabels(grid.tau_values, fontsize=7)
            ax.set_xlabel("devices N")
            if mi == 0:
                ax.set_ylabel(f"{POLICY_LABELS[policy]}\nduty period "
                              r"$\tau$ (ms)")
            ax.set_title(METRIC_LABELS[metric], fontsize=9)
            fig.colorbar(mesh, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"panels": n_rows * len(METRICS), "masked_cells": masked_total,
            "policies": policies}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="geofence-fig-heatmaps",
        description="(N, tau) metric heatmap panel from a sweep CSV")
    parser.add_argument("--in", dest="sweep", required=True,
                        help="sweep CSV path")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--vmin", type=float, default=None)
    parser.add_argument("--vmax", type=float, default=None)
    args = parser.parse_args(argv)
    try:
        info = render_heatmaps(args.sweep, args.out, args.vmin, args.vmax)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}: {info['panels']} panels, "
          f"{info['masked_cells']} masked cells")
    return 0


if __name__ == "__main__":
    sys.exit(main())
