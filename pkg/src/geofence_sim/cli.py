"""Command-line front end.

Subcommands: run-one, sweep, nmin, energy-table. Configuration comes
from an optional JSON file plus flag overrides; all outputs land in the
directory named by --out.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .energy import EnergyParams
from .environment import ArrivalProfile, GeofenceLayout
from .experiments import (SweepSpec, emit_energy_table, energy_table_base,
                          find_nmin, sweep, write_energy_csv, write_nmin_csv,
                          write_sweep_csv)
from .policy import OutcomeWeights
from .simulate import ConfigError, SimConfig, run

_SIM_SECTIONS = {"layout": GeofenceLayout, "profile": ArrivalProfile,
                 "energy": EnergyParams, "weights": OutcomeWeights}


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}")


def build_sim_config(doc: dict, args) -> SimConfig:
    sim_doc = dict(doc.get("sim", {}))
    kwargs = {}
    for section, cls in _SIM_SECTIONS.items():
        if section in sim_doc:
            try:
                kwargs[section] = cls(**sim_doc.pop(section))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{section}: {exc}")
    kwargs.update(sim_doc)
    if args.seed is not None:
        kwargs["seed"] = args.seed
    kwargs.setdefault("seed", 1)
    if getattr(args, "policy", None):
        kwargs["policy_kind"] = args.policy
    try:
        cfg = SimConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"sim: {exc}")
    cfg.validate()
    return cfg


def build_sweep_spec(doc: dict, base: SimConfig, args) -> SweepSpec:
    sw = dict(doc.get("sweep", {}))
    for key in ("n_values", "tau_values_ms", "policies"):
        if key in sw:
            sw[key] = tuple(sw[key])
    if args.trials is not None:
        sw["trials"] = args.trials
    if getattr(args, "parallel", None):
        sw["workers"] = args.parallel
    if args.seed is not None:
        sw["seed_root"] = args.seed
    if getattr(args, "policy", None):
        sw["policies"] = (args.policy,)
    try:
        spec = SweepSpec(base=base, **sw)
    except TypeError as exc:
        raise ConfigError(f"sweep: {exc}")
    spec.validate()
    return spec


def _out_dir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_run_one(args) -> int:
    doc = load_config(args.config) if args.config else {}
    cfg = build_sim_config(doc, args)
    metrics, events = run(cfg)
    out = _out_dir(args)
    with open(os.path.join(out, "metrics.json"), "w", encoding="utf-8") as fh:
        fh.write(metrics.to_json() + "\n")
    with open(os.path.join(out, "events.jsonl"), "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(ev.to_json_line() + "\n")
    print(f"intruders={metrics.n_intruders} p_det={metrics.p_det} "
          f"p_early={metrics.p_early} mean_t_det_s={metrics.mean_t_det_s}")
    return 0


def cmd_sweep(args) -> int:
    doc = load_config(args.config) if args.config else {}
    base = build_sim_config(doc, args)
    spec = build_sweep_spec(doc, base, args)
    rows = sweep(spec)
    out = _out_dir(args)
    path = os.path.join(out, "sweep.csv")
    write_sweep_csv(rows, path)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_nmin(args) -> int:
    doc = load_config(args.config) if args.config else {}
    base = build_sim_config(doc, args)
    spec = build_sweep_spec(doc, base, args)
    rows = []
    cache: dict = {}
    for policy in spec.policies:
        for tau in spec.tau_values_ms:
            rows.append(find_nmin(tau, args.target, spec, policy,
                                  cache=cache))
    rows.sort(key=lambda r: (r["policy"], r["tau_ms"]))
    out = _out_dir(args)
    path = os.path.join(out, "nmin.csv")
    write_nmin_csv(rows, path)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_energy_table(args) -> int:
    if args.config:
        doc = load_config(args.config)
        base = build_sim_config(doc, args)
    else:
        base = energy_table_base(args.seed if args.seed is not None else 1)
    if args.force_n20 and base.n_devices != 20:
        base = replace(base, n_devices=20)
    rows = emit_energy_table(base, rl_episodes=args.rl_episodes)
    out = _out_dir(args)
    path = os.path.join(out, "energy_table.csv")
    write_energy_csv(rows, path)
    header = (f"{'time':>6} {'RL avg%':>8} {'Grid avg%':>9} "
              f"{'RL avail':>8} {'Grid avail':>10} "
              f"{'RL depl':>7} {'Grid depl':>9}")
    print(header)
    for r in rows:
        print(f"{r['time']:>6} {r['rl_avg_pct']:>8.2f} "
              f"{r['grid_avg_pct']:>9.2f} {r['rl_available']:>8d} "
              f"{r['grid_available']:>10d} {r['rl_depleted']:>7d} "
              f"{r['grid_depleted']:>9d}")
    print(f"wrote {path}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geofence-sim",
        description="Energy-aware perimeter monitoring simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--policy", choices=["grid", "rl"], default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--parallel", type=int, default=None,
                       help="worker processes for sweep cells")

    p_run = sub.add_parser("run-one", help="one simulation run")
    common(p_run)
    p_run.set_defaults(func=cmd_run_one)

    p_sweep = sub.add_parser("sweep", help="(N, tau) metric sweep")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_nmin = sub.add_parser("nmin", help="minimum N meeting a target")
    common(p_nmin)
    p_nmin.add_argument("--target", type=float, default=0.99,
                        help="detection-rate target")
    p_nmin.set_defaults(func=cmd_nmin)

    p_energy = sub.add_parser("energy-table",
                              help="daily energy comparison table")
    common(p_energy)
    p_energy.add_argument("--rl-episodes", type=int, default=200)
    p_energy.add_argument("--force-n20", action="store_true",
                          help="override device count to 20")
    p_energy.set_defaults(func=cmd_energy_table)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
