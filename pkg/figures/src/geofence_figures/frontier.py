"""Render a detection-rate map with the minimum-density frontier overlay.

The map comes from the sweep CSV for one policy; the dashed black curve
with red markers traces the smallest device count meeting the
reliability target at each duty-cycle period, read from the nmin CSV.
Rows with no attained minimum are skipped with a warning.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import SchemaError, arrange, load_nmin, load_sweep


def render_frontier(sweep_path, nmin_path, out_path,
                    policy: str = "grid") -> dict:
    """Write the overlay figure; returns bookkeeping counts."""
    rows = load_sweep(sweep_path)
    if not any(r["policy"] == policy for r in rows):
        raise SchemaError(f"{sweep_path}: no rows for policy '{policy}'")
    grid = arrange(rows, policy)
    frontier = [r for r in load_nmin(nmin_path) if r["policy"] == policy]
    raw = grid.value_matrix("p_det")
    data = np.array([[np.nan if v is None else v for v in row]
                     for row in raw], dtype=float)
    mat = np.ma.masked_invalid(data)

    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    mesh = ax.pcolormesh(mat, cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_facecolor("0.82")
    n_index = {n: i for i, n in enumerate(grid.n_values)}
    tau_index = {t: i for i, t in enumerate(grid.tau_values)}
    xs, ys = [], []
    skipped = 0
    for row in sorted(frontier, key=lambda r: r["tau_ms"]):
        if row["n_min"] is None:
            print(f"warning: no attained minimum at tau={row['tau_ms']} ms;"
                  " skipped", file=sys.stderr)
            skipped += 1
            continue
        if row["n_min"] not in n_index or row["tau_ms"] not in tau_index:
            skipped += 1
            continue
        xs.append(n_index[row["n_min"]] + 0.5)
        ys.append(tau_index[row["tau_ms"]] + 0.5)
    if xs:
        ax.plot(xs, ys, "k--", linewidth=1.4)
        ax.plot(xs, ys, "o", color="red", markersize=5)
    ax.set_xticks(np.arange(len(grid.n_values)) + 0.5)
    ax.set_xticklabels(grid.n_values, fontsize=7)
    ax.set_yticks(np.arange(len(grid.tau_values)) + 0.5)
    ax.set_yticklabels(grid.tau_values, fontsize=7)
    ax.set_xlabel("devices N")
    ax.set_ylabel(r"duty period $\tau$ (ms)")
    ax.set_title(f"detection rate, {policy} policy", fontsize=10)
    fig.colorbar(mesh, ax=ax, shrink=0.9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"markers": len(xs), "skipped": skipped}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="geofence-fig-frontier",
        description="detection-rate map with minimum-density frontier")
    parser.add_argument("--in", dest="sweep", required=True,
                        help="sweep CSV path")
    parser.add_argument("--nmin", required=True, help="nmin CSV path")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--policy", default="grid",
                        choices=["grid", "rl"])
    args = parser.parse_args(argv)
    try:
        info = render_frontier(args.sweep, args.nmin, args.out, args.policy)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}: {info['markers']} frontier markers, "
          f"{info['skipped']} skipped")
    return 0


if __name__ == "__main__":
    sys.exit(main())
