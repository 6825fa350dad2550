"""Per-TTI simulation of the monitored area.

One run advances a fixed phase order each TTI: spawn arrivals, move
intruders, harvest tick when due, activation/rotation decisions, action
energy charges, sensing, detection reports, periodic status reports,
fusion and wake-up selection, outcome resolution, learning update,
metric accumulation. Wake-up requests take effect on the next TTI.

Two interchangeable engines exist: a literal per-TTI reference loop
(this module) and an event-driven engine (``event_engine``) that skips
idle time while reproducing the same visible behavior. ``run`` picks the
event engine whenever it supports the configuration.

The learned controller re-decides activation every ``tau`` TTIs and the
chosen activation holds for the window; the grid baseline wakes each
device for the single TTI of its periodic slot. Rewards and Q updates
fire at decision epochs over the elapsed window, with the idle and
coverage terms time-averaged and resolved detection errors summed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .energy import EnergyParams
from .environment import (ArrivalProfile, GeofenceLayout, IntruderTrajectory,
                          crossing_times, position_at, sample_arrivals,
                          spawn_trajectory)
from .fgs import (DetectionReport, EventRecord, coverage_fraction, fuse,
                  predict, select_wakeups)
from .policy import (ACTIONS, GridConfig, IntruderOutcome, OutcomeWeights,
                     QPolicy, encode_fields, grid_placement, grid_schedule,
                     object_error, objective)
from .sensing import SensorPose, Vec2, rotate_pose, sensing_power

DEFAULT_SNAPSHOT_HOURS = (6.0, 9.0, 12.0, 15.0, 18.0, 21.0)


class ConfigError(ValueError):
    """Invalid simulation configuration; the message names the field."""


@dataclass(kw_only=True)
class SimConfig:
    seed: int
    layout: GeofenceLayout = field(default_factory=GeofenceLayout)
    profile: ArrivalProfile = field(default_factory=ArrivalProfile)
    energy: EnergyParams = field(default_factory=EnergyParams)
    fov: float = 60.0
    r_max: float = 3.0
    eta: float = 1.0
    p_th: float = math.exp(-0.5)
    n_devices: int = 20
    policy_kind: str = "grid"  # "grid" or "rl"
    tau: int = 8
    phase_mode: str = "staggered"
    tti_duration: float = 0.001
    horizon_ttis: int = 3_600_000
    intruder_speed: float = 1.0
    weights: OutcomeWeights = field(default_factory=OutcomeWeights)
    alpha: Optional[float] = None  # None: mean arrivals/TTI from the profile
    status_report_period_ttis: int = 900_000
    k_rot_ttis: int = 100
    wakeup_horizon_ttis: int = 2_000
    wakeup_sample_period_ttis: int = 50
    wakeups_enabled: Optional[bool] = None  # None: on for rl, off for grid
    suppress_after_fusion: bool = True
    coverage_samples: int = 1024
    initial_level: Optional[float] = None  # None: start full
    placement: Optional[list[SensorPose]] = None
    trajectories: Optional[list[IntruderTrajectory]] = None
    snapshot_hours: tuple = ()
    rl_epsilon: float = 0.1
    rl_alpha_lr: float = 0.1
    rl_gamma: float = 0.9
    rotation_enabled: bool = True
    engine: str = "auto"  # "auto", "event" or "reference"

    def validate(self) -> None:
        if not isinstance(self.seed, int):
            raise ConfigError("seed: must be an integer")
        if self.policy_kind not in ("grid", "rl"):
            raise ConfigError("policy_kind: must be 'grid' or 'rl'")
        if self.n_devices < 1:
            raise ConfigError("n_devices: must be >= 1")
        if self.tau < 1:
            raise ConfigError("tau: must be >= 1")
        if self.tti_duration <= 0.0:
            raise ConfigError("tti_duration: must be > 0")
        if self.horizon_ttis < 0:
            raise ConfigError("horizon_ttis: must be >= 0")
        if not 0.0 < self.p_th <= 1.0:
            raise ConfigError("p_th: must lie in (0, 1]")
        if self.fov <= 0.0 or self.fov > 360.0:
            raise ConfigError("fov: must lie in (0, 360]")
        if self.r_max <= 0.0:
            raise ConfigError("r_max: must be > 0")
        if self.eta < 0.0:
            raise ConfigError("eta: must be >= 0")
        if self.intruder_speed <= 0.0:
            raise ConfigError("intruder_speed: must be > 0")
        if self.status_report_period_ttis < 1:
            raise ConfigError("status_report_period_ttis: must be >= 1")
        if self.k_rot_ttis < 1:
            raise ConfigError("k_rot_ttis: must be >= 1")
        if self.coverage_samples < 4:
            raise ConfigError("coverage_samples: must be >= 4")
        if self.initial_level is not None and not (
                0.0 <= self.initial_level <= self.energy.c_max):
            raise ConfigError("initial_level: must lie in [0, c_max]")
        if self.placement is not None and len(self.placement) != self.n_devices:
            raise ConfigError("placement: length must equal n_devices")
        if self.engine not in ("auto", "event", "reference"):
            raise ConfigError("engine: must be 'auto', 'event' or 'reference'")
        if self.phase_mode not in ("staggered", "aligned"):
            raise ConfigError("phase_mode: must be 'staggered' or 'aligned'")
        if self.rl_epsilon < 0.0 or self.rl_epsilon > 1.0:
            raise ConfigError("rl_epsilon: must lie in [0, 1]")

    def effective_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return self.profile.alpha_per_tti(self.tti_duration)

    def wakeups_on(self) -> bool:
        if self.wakeups_enabled is None:
            return self.policy_kind == "rl"
        return self.wakeups_enabled

    def build_placement(self) -> list[SensorPose]:
        if self.placement is not None:
            return list(self.placement)
        return grid_placement(self.n_devices, self.layout, fov=self.fov,
                              r_max=self.r_max, eta=self.eta)

    def snapshot_ttis(self) -> list[int]:
        out = []
        for h in self.snapshot_hours:
            t = int(round(h * 3600.0 / self.tti_duration))
            if 0 <= t < self.horizon_ttis:
                out.append(t)
        return sorted(set(out))

    def rot_epoch_stride(self) -> int:
        """Decision epochs between permitted orientation updates."""
        return max(1, math.ceil(self.k_rot_ttis / self.tau))


@dataclass
class MetricsRecord:
    n_intruders: int
    p_det: Optional[float]
    p_early: Optional[float]
    mean_t_det_s: Optional[float]
    objective_value: Optional[float]
    outcomes: list[IntruderOutcome]
    snapshots: list[dict]
    energy: dict

    def to_json(self) -> str:
        doc = {
            "n_intruders": self.n_intruders,
            "p_det": self.p_det,
            "p_early": self.p_early,
            "mean_t_det_s": self.mean_t_det_s,
            "objective_value": self.objective_value,
            "outcomes": [
                {"object_id": o.object_id, "t_in": o.t_in, "t_g": o.t_g,
                 "t_det": o.t_det} for o in self.outcomes],
            "snapshots": self.snapshots,
            "energy": self.energy,
        }
        return json.dumps(doc, sort_keys=True)


def summarize_outcomes(outcomes: list[IntruderOutcome], cfg: SimConfig,
                       alpha: float, snapshots: list[dict],
                       energy: dict) -> MetricsRecord:
    outs = sorted(outcomes, key=lambda o: o.object_id)
    n_intruders = len(outs)
    if n_intruders:
        detected = [o for o in outs if o.detected]
        p_det = len(detected) / n_intruders
        p_early = sum(1 for o in outs if o.early) / n_intruders
        mean_t = (sum(o.t_det - o.t_in for o in detected)
                  * cfg.tti_duration / len(detected)) if detected else None
        errors = [object_error(o.t_det, o.t_g, cfg.weights) for o in outs]
        obj_val = objective(errors, alpha, cfg.horizon_ttis) \
            if cfg.horizon_ttis > 0 and alpha > 0.0 else None
    else:
        p_det = p_early = mean_t = obj_val = None
    return MetricsRecord(n_intruders, p_det, p_early, mean_t, obj_val,
                         outs, snapshots, energy)


def build_trajectories(config: SimConfig) -> list[IntruderTrajectory]:
    """Arrival times and trajectories for a run, drawn up front so that
    every engine sees the identical intruder set."""
    if config.trajectories is not None:
        return sorted([t for t in config.trajectories
                       if t.t_spawn < config.horizon_ttis],
                      key=lambda tr: (tr.t_spawn, tr.id))
    seq = np.random.SeedSequence(entropy=(config.seed, 0xA11))
    arr_rng, traj_rng = [np.random.default_rng(s) for s in seq.spawn(2)]
    spawns = sample_arrivals(config.profile, config.horizon_ttis,
                             config.tti_duration, arr_rng)
    return [spawn_trajectory(config.layout, t, traj_rng, traj_id=i,
                             speed=config.intruder_speed)
            for i, t in enumerate(spawns)]


def harvest_rng(config: SimConfig) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(config.seed, 0xEA7)))


def policy_rng(config: SimConfig) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(config.seed, 0xAC7)))


def epoch_reward(delta_tti_sum: float, n: int, width: int, cov_integral: float,
                 error_sum: float, alpha: float,
                 weights: OutcomeWeights) -> float:
    """Decision-window reward: time-averaged idle and coverage terms, with
    resolved detection errors summed (not averaged) so a miss is not
    diluted by the window length."""
    return (1.0 - delta_tti_sum / (n * width)) \
        + weights.mu2 * (cov_integral / width) \
        - alpha * weights.mu3 * error_sum


class PiecewiseSum:
    """Integral of a piecewise-constant signal, accumulated on change so
    that both engines sum the identical float sequence."""

    def __init__(self, t0: int, value: float):
        self.t_last = t0
        self.value = value
        self.total = 0.0

    def advance(self, t: int, new_value: float) -> None:
        if t > self.t_last:
            self.total += self.value * (t - self.t_last)
            self.t_last = t
        self.value = new_value

    def take(self, t: int) -> float:
        self.advance(t, self.value)
        out = self.total
        self.total = 0.0
        return out


class _LiveObject:
    __slots__ = ("traj", "t_g", "t_exit", "fused_tti", "reports", "crossed",
                 "new_report")

    def __init__(self, traj: IntruderTrajectory, t_g: int, t_exit: int):
        self.traj = traj
        self.t_g = t_g
        self.t_exit = t_exit
        self.fused_tti: Optional[int] = None
        self.reports: list[DetectionReport] = []
        self.crossed: set[int] = set()
        self.new_report = False


class SimState:
    """Mutable world state for the reference per-TTI loop."""

    def __init__(self, config: SimConfig, policy: Optional[QPolicy] = None,
                 learn: bool = False):
        config.validate()
        self.config = config
        self.learn = learn
        self.tti = 0
        self.poses = config.build_placement()
        n = config.n_devices
        init = config.energy.c_max if config.initial_level is None \
            else config.initial_level
        self.levels = [init] * n
        self.delta = [0] * n
        self.active_since = [-1] * n
        self.initial_levels = list(self.levels)
        self.harvested = [0.0] * n
        self.consumed = {"tx": [0.0] * n, "wur": [0.0] * n,
                         "rot": [0.0] * n, "sense": [0.0] * n}
        self.grid_cfg = GridConfig(n, config.tau, config.phase_mode)
        self.trajectories = build_trajectories(config)
        self.next_spawn_idx = 0
        self.live: dict[int, _LiveObject] = {}
        self.recent_dead: dict[int, _LiveObject] = {}
        self.pending_wakeups: list[int] = []
        self.outcomes: list[IntruderOutcome] = []
        self.events: list[EventRecord] = []
        self.snapshots: list[dict] = []
        self.snapshot_ttis = set(config.snapshot_ttis())
        self.rng_harvest = harvest_rng(config)
        self.rng_policy = policy_rng(config)
        self.policy = policy
        if config.policy_kind == "rl" and self.policy is None:
            self.policy = QPolicy(epsilon=config.rl_epsilon,
                                  alpha_lr=config.rl_alpha_lr,
                                  gamma=config.rl_gamma)
        self.alpha = config.effective_alpha()
        # decision-window accumulators (rl only)
        self.window_start = 0
        self.window_delta = PiecewiseSum(0, 0.0)
        self.window_cov = PiecewiseSum(0, 0.0)
        self.window_errors = 0.0
        self.last_keys: Optional[list] = None
        self.last_actions: Optional[list[int]] = None
        self._cov_cache: dict = {}

    # -- helpers -------------------------------------------------------

    def _available(self, i: int) -> bool:
        return self.levels[i] / self.config.energy.c_max \
            >= self.config.energy.availability_threshold

    def _try_consume(self, i: int, cost: float, kind: str) -> bool:
        if self.levels[i] >= cost:
            self.levels[i] -= cost
            self.consumed[kind][i] += cost
            return True
        return False

    def _coverage(self) -> float:
        """Coverage by devices that are both activated and available; a
        drained device covers nothing. Evaluated at decision instants."""
        ids = [i for i in range(len(self.poses))
               if self.delta[i] == 1 and self._available(i)]
        key = tuple((i, self.poses[i].theta_min) for i in ids)
        val = self._cov_cache.get(key)
        if val is None:
            val = coverage_fraction([self.poses[i] for i in ids],
                                    self.config.layout, self.config.p_th,
                                    self.config.coverage_samples)
            self._cov_cache[key] = val
        return val

    def _conf_at_decide(self, i: int, t: int) -> float:
        """Latest camera confidence the controller reads for device i:
        the sensing power at TTI t-1, gated on the device having held an
        active state through t-1 and being available now."""
        cfg = self.config
        if t == 0 or self.delta[i] != 1 or self.active_since[i] > t - 1:
            return 0.0
        if not self._available(i):
            return 0.0
        best = 0.0
        for objs in (self.live, self.recent_dead):
            for oid in sorted(objs):
                obj = objs[oid]
                if not obj.traj.t_spawn <= t - 1 < obj.t_exit:
                    continue
                if obj.fused_tti is not None and obj.fused_tti < t - 1 \
                        and cfg.suppress_after_fusion:
                    continue
                pos = position_at(obj.traj, t - 1, cfg.tti_duration)
                p = sensing_power(self.poses[i], pos)
                if p > best:
                    best = p
        return best

    def _resolve(self, obj: _LiveObject, t_det: Optional[int]) -> None:
        self.outcomes.append(IntruderOutcome(obj.traj.id, obj.traj.t_spawn,
                                             obj.t_g, t_det))
        self.window_errors += object_error(t_det, obj.t_g,
                                           self.config.weights)

    # -- one TTI -------------------------------------------------------

    def step(self) -> None:
        cfg = self.config
        t = self.tti
        n = cfg.n_devices

        # (1) spawns
        while (self.next_spawn_idx < len(self.trajectories)
               and self.trajectories[self.next_spawn_idx].t_spawn == t):
            traj = self.trajectories[self.next_spawn_idx]
            self.next_spawn_idx += 1
            _, t_g, t_exit = crossing_times(traj, cfg.layout,
                                            cfg.tti_duration)
            self.live[traj.id] = _LiveObject(traj, t_g, t_exit)

        # (3) harvest tick
        if t > 0 and t % cfg.energy.harvest_period_ttis == 0:
            draws = self.rng_harvest.random(n)
            for i in range(n):
                if draws[i] < cfg.energy.lam:
                    new = min(self.levels[i] + cfg.energy.p_b,
                              cfg.energy.c_max)
                    self.harvested[i] += new - self.levels[i]
                    self.levels[i] = new

        # (4) pending wake-ups, then activation decisions
        woke = False
        for i in self.pending_wakeups:
            if self.delta[i] == 0 and self._try_consume(i, cfg.energy.p_wur,
                                                        "wur"):
                self.delta[i] = 1
                self.active_since[i] = t
                woke = True
        self.pending_wakeups = []
        if woke and cfg.policy_kind == "rl":
            self.window_delta.advance(t, float(sum(self.delta)))
            self.window_cov.advance(t, self._coverage())

        if cfg.policy_kind == "grid":
            for i in range(n):
                new = grid_schedule(i, t, self.grid_cfg)
                if new != self.delta[i]:
                    self.delta[i] = new
                    if new == 1:
                        self.active_since[i] = t
        elif t % cfg.tau == 0:
            self._rl_decide(t)

        # (6) sensing by active, available, energy-feasible devices
        report_queue: list[tuple[int, int, float, Vec2]] = []
        for i in range(n):
            if self.delta[i] != 1 or not self._available(i):
                continue
            if cfg.energy.p_sense > 0.0 and not self._try_consume(
                    i, cfg.energy.p_sense, "sense"):
                continue
            for oid in sorted(self.live):
                obj = self.live[oid]
                if obj.fused_tti is not None and cfg.suppress_after_fusion:
                    continue
                pos = position_at(obj.traj, t, cfg.tti_duration)
                p = sensing_power(self.poses[i], pos)
                if p >= cfg.p_th and i not in obj.crossed:
                    obj.crossed.add(i)
                    report_queue.append((i, oid, p, pos))

        # (7) detection reports (each device reports an object once)
        for i, oid, p, pos in report_queue:
            obj = self.live[oid]
            if self._try_consume(i, cfg.energy.p_tx, "tx"):
                rep = DetectionReport(i, t, p, pos)
                obj.reports.append(rep)
                obj.new_report = True
                self.events.append(EventRecord(t, "report", i, oid, p))

        # (8) periodic status reports
        if t > 0 and t % cfg.status_report_period_ttis == 0:
            for i in range(n):
                self._try_consume(i, cfg.energy.p_tx, "tx")

        # (9) fusion, prediction, wake-up selection
        for oid in sorted(self.live):
            obj = self.live[oid]
            if not obj.new_report:
                continue
            obj.new_report = False
            if obj.fused_tti is None:
                t_det = fuse(obj.reports, cfg.p_th)
                if t_det is not None:
                    obj.fused_tti = t_det
                    self.events.append(
                        EventRecord(t, "fusion", None, oid, float(t_det)))
                    self._resolve(obj, t_det)
                    if cfg.wakeups_on():
                        track = predict(obj.reports, cfg.layout.center,
                                        cfg.intruder_speed, cfg.tti_duration)
                        devices = [(i, self.poses[i], self.delta[i] == 0,
                                    self._available(i)) for i in range(n)]
                        for dev in select_wakeups(
                                track, devices, cfg.p_th,
                                cfg.wakeup_horizon_ttis, cfg.tti_duration,
                                cfg.wakeup_sample_period_ttis):
                            self.pending_wakeups.append(dev)
                            self.events.append(
                                EventRecord(t, "wakeup", dev, oid, None))

        # (10) despawns resolve on the object's final TTI inside the zone
        for oid in sorted(self.live):
            obj = self.live[oid]
            if t == obj.t_exit - 1:
                if obj.fused_tti is None:
                    self._resolve(obj, None)
                del self.live[oid]
                if cfg.policy_kind == "rl":
                    self.recent_dead[oid] = obj

        # (11) window integrals advance lazily on change; nothing per TTI

        # (12) snapshot at end of TTI
        if t in self.snapshot_ttis:
            self._record_snapshot(t)

        self.tti = t + 1

    def _rl_decide(self, t: int) -> None:
        cfg = self.config
        n = cfg.n_devices
        for oid in [o for o, obj in self.recent_dead.items()
                    if obj.t_exit < t]:
            del self.recent_dead[oid]
        keys = []
        for i in range(n):
            pose = self.poses[i]
            keys.append(encode_fields(
                self.delta[i], pose.theta_min, self._conf_at_decide(i, t),
                pose.position.x, pose.position.y, self.levels[i],
                cfg.p_th, cfg.energy.c_max))
        if self.learn and self.last_keys is not None and t > self.window_start:
            width = t - self.window_start
            r = epoch_reward(self.window_delta.take(t), n, width,
                             self.window_cov.take(t), self.window_errors,
                             self.alpha, cfg.weights)
            for i in range(n):
                self.policy.q_update(self.last_keys[i], self.last_actions[i],
                                     r, keys[i])
        else:
            self.window_delta.take(t)
            self.window_cov.take(t)
        self.window_errors = 0.0
        self.window_start = t

        allow_rot = cfg.rotation_enabled and \
            (t // cfg.tau) % cfg.rot_epoch_stride() == 0
        actions = [self.policy.select_action(keys[i], self.rng_policy,
                                             allow_rotation=allow_rot)
                   for i in range(n)]
        for i in range(n):
            want, rot = ACTIONS[actions[i]]
            if rot != 0:
                new_pose, steps = rotate_pose(self.poses[i], rot)
                if self._try_consume(i, steps * cfg.energy.p_rot_bin, "rot"):
                    self.poses[i] = new_pose
            if want == 1 and self.delta[i] == 0:
                if self._try_consume(i, cfg.energy.p_wur, "wur"):
                    self.delta[i] = 1
                    self.active_since[i] = t
            elif want == 0 and self.delta[i] == 1:
                self.delta[i] = 0
        self.last_keys = keys
        self.last_actions = actions
        self.window_delta.advance(t, float(sum(self.delta)))
        self.window_cov.advance(t, self._coverage())

    def _record_snapshot(self, t: int) -> None:
        cfg = self.config
        n = cfg.n_devices
        avg_pct = sum(self.levels) / (n * cfg.energy.c_max) * 100.0
        available = sum(1 for i in range(n) if self._available(i))
        depleted = sum(1 for lv in self.levels if lv <= 1e-12)
        self.snapshots.append({"tti": t, "avg_pct": avg_pct,
                               "available": available, "depleted": depleted})

    def metrics(self) -> MetricsRecord:
        energy = {
            "initial": list(self.initial_levels),
            "harvested": list(self.harvested),
            "consumed_tx": list(self.consumed["tx"]),
            "consumed_wur": list(self.consumed["wur"]),
            "consumed_rot": list(self.consumed["rot"]),
            "consumed_sense": list(self.consumed["sense"]),
            "final": list(self.levels),
        }
        return summarize_outcomes(self.outcomes, self.config, self.alpha,
                                  list(self.snapshots), energy)


def step(state: SimState, config: SimConfig = None,
         policy: Optional[QPolicy] = None,
         rng: Optional[np.random.Generator] = None) -> SimState:
    """Advance the reference state machine by one TTI.

    ``config``, ``policy`` and ``rng`` ride inside the state; the extra
    parameters are accepted for call-site clarity and must match when
    given.
    """
    if config is not None and config is not state.config:
        raise ValueError("config does not match the state's config")
    if policy is not None and policy is not state.policy:
        raise ValueError("policy does not match the state's policy")
    state.step()
    return state


def _run_reference(config: SimConfig, policy: Optional[QPolicy],
                   learn: bool) -> tuple[MetricsRecord, list[EventRecord]]:
    state = SimState(config, policy, learn)
    while state.tti < config.horizon_ttis:
        state.step()
    return state.metrics(), state.events


def run(config: SimConfig, policy: Optional[QPolicy] = None,
        learn: bool = False) -> tuple[MetricsRecord, list[EventRecord]]:
    """Execute a full run and return (metrics, event log).

    Identical seed and config give byte-identical metrics JSON and event
    logs.
    """
    from . import event_engine as _fast

    config.validate()
    engine = config.engine
    if engine == "auto":
        unsupported = config.policy_kind == "grid" and config.wakeups_on()
        engine = "reference" if unsupported else "event"
    if engine == "event":
        return _fast.run_event(config, policy, learn)
    return _run_reference(config, policy, learn)


def run_day(config: SimConfig, policy: Optional[QPolicy] = None,
            learn: bool = False) -> tuple[MetricsRecord, list[EventRecord]]:
    """24 h run with energy snapshots at the standard report hours."""
    day_horizon = int(round(86_400.0 / config.tti_duration))
    cfg = replace(config, horizon_ttis=day_horizon,
                  snapshot_hours=config.snapshot_hours
                  or DEFAULT_SNAPSHOT_HOURS)
    return run(cfg, policy, learn)
