"""Event-driven engine equivalent to the reference per-TTI loop.

Instead of visiting every TTI it processes a queue of events (spawns,
harvest ticks, decision epochs, candidate detection TTIs, status reports,
fusions, despawns, snapshots) ordered by TTI and by the in-TTI phase
order of the reference loop. Detection candidates are precomputed
geometrically: for each device and intruder, the TTIs where the device
is scheduled active and the sensing power reaches the threshold.

Per-TTI sensing energy (p_sense > 0) is integrated in closed form between
events, which matches the sequential reference arithmetic to about 1e-9
on buffer levels; with p_sense == 0 the engines agree exactly.
"""

from __future__ import annotations

import heapq
import math
from typing import Optional

import numpy as np

from .environment import crossing_times, perimeter_point, position_at
from .fgs import DetectionReport, EventRecord, fuse, predict, select_wakeups
from .policy import (ACTIONS, GridConfig, QPolicy, encode_fields,
                     grid_phase, object_error)
from .sensing import SensorPose, rotate_pose, sensing_power

# in-TTI phase priorities, mirroring the reference loop
P_SPAWN = 10
P_HARVEST = 30
P_WAKEUP = 40
P_DECIDE = 41
P_CAND = 60
P_STATUS = 80
P_FGS = 90
P_DESPAWN = 100
P_SNAP = 120


def _positions(traj, ts: np.ndarray, tti_duration: float):
    """Vectorized twin of environment.position_at for in-lifetime TTIs."""
    s = (ts - traj.t_spawn) * tti_duration * traj.speed
    l1, l2 = traj.leg_lengths
    ex, ey = traj.entry_point.x, traj.entry_point.y
    vx, vy = traj.via_point.x, traj.via_point.y
    gx, gy = traj.exit_point.x, traj.exit_point.y
    f1 = s / l1
    f2 = (s - l1) / l2
    on1 = s <= l1
    px = np.where(on1, ex + f1 * (vx - ex), vx + f2 * (gx - vx))
    py = np.where(on1, ey + f1 * (vy - ey), vy + f2 * (gy - vy))
    return px, py


def _power_at(pose: SensorPose, px, py):
    """Vectorized sensing power, matching sensing.sensing_power."""
    dx = px - pose.position.x
    dy = py - pose.position.y
    r = np.hypot(dx, dy)
    theta = np.mod(np.degrees(np.arctan2(dy, dx)), 360.0)
    theta = np.where(r == 0.0, 0.0, theta)
    offset = np.mod(theta - pose.theta_min, 360.0)
    ok = (offset <= pose.fov) & (r <= pose.r_max)
    return np.where(ok, np.exp(-pose.eta * r), 0.0)


def _interval_ttis(traj, px0: float, py0: float, reach: float, t_lo: int,
                   t_hi: int, tti_duration: float) -> list[tuple[int, int]]:
    """TTI intervals [a, b) where the path lies within ``reach`` of a
    point, intersected with [t_lo, t_hi)."""
    step = tti_duration * traj.speed
    l1, l2 = traj.leg_lengths
    out = []
    offset = 0.0
    for ax, ay, bx, by, length in (
            (traj.entry_point.x, traj.entry_point.y,
             traj.via_point.x, traj.via_point.y, l1),
            (traj.via_point.x, traj.via_point.y,
             traj.exit_point.x, traj.exit_point.y, l2)):
        ux = (bx - ax) / length
        uy = (by - ay) / length
        wx = px0 - ax
        wy = py0 - ay
        b = ux * wx + uy * wy
        c = wx * wx + wy * wy - reach * reach
        disc = b * b - c
        if disc >= 0.0:
            root = math.sqrt(disc)
            s0 = max(0.0, b - root)
            s1 = min(length, b + root)
            if s0 <= s1:
                a_t = traj.t_spawn + int(
                    math.ceil((offset + s0) / step - 1e-9))
                b_t = traj.t_spawn + int(
                    math.floor((offset + s1) / step + 1e-9)) + 1
                a_t = max(a_t, t_lo)
                b_t = min(b_t, t_hi)
                if a_t < b_t:
                    out.append((a_t, b_t))
        offset += length
    if len(out) == 2 and out[1][0] <= out[0][1]:  # overlap around the via
        out = [(out[0][0], max(out[0][1], out[1][1]))]
    return out


class _Obj:
    __slots__ = ("traj", "t_g", "t_exit", "fused_tti", "reports", "crossed",
                 "new_report")

    def __init__(self, traj, t_g, t_exit):
        self.traj = traj
        self.t_g = t_g
        self.t_exit = t_exit
        self.fused_tti = None
        self.reports = []
        self.crossed = set()
        self.new_report = False


class EventEngine:
    def __init__(self, config, policy: Optional[QPolicy], learn: bool):
        from . import simulate as sim

        self.sim = sim
        self.cfg = cfg = config
        self.learn = learn
        n = cfg.n_devices
        self.n = n
        self.poses: list[SensorPose] = cfg.build_placement()
        init = cfg.energy.c_max if cfg.initial_level is None \
            else cfg.initial_level
        self.level = [init] * n
        self.initial_levels = [init] * n
        self.delta = [0] * n
        self.active_since = [-1] * n
        self.harvested = [0.0] * n
        self.consumed = {"tx": [0.0] * n, "wur": [0.0] * n,
                         "rot": [0.0] * n, "sense": [0.0] * n}
        self.last_int = [0] * n          # sensing-drain integration boundary
        self.last_sensed_tti = [-1] * n  # TTI whose sense charge is applied
        self.grid_cfg = GridConfig(n, cfg.tau, cfg.phase_mode)
        self.phases = [grid_phase(i, self.grid_cfg) for i in range(n)]
        self.is_grid = cfg.policy_kind == "grid"
        self.policy = policy
        if not self.is_grid and self.policy is None:
            self.policy = QPolicy(epsilon=cfg.rl_epsilon,
                                  alpha_lr=cfg.rl_alpha_lr,
                                  gamma=cfg.rl_gamma)
        self.rng_harvest = sim.harvest_rng(cfg)
        self.rng_policy = sim.policy_rng(cfg)
        self.alpha = cfg.effective_alpha()
        self.trajectories = sim.build_trajectories(cfg)
        self.live: dict[int, _Obj] = {}
        self.recent_dead: dict[int, _Obj] = {}
        self.outcomes = []
        self.events: list[EventRecord] = []
        self.snapshots: list[dict] = []
        self.cand: dict[tuple[int, int], list] = {}
        self.window_start = 0
        self.window_end = min(cfg.tau, cfg.horizon_ttis)
        self.window_delta = sim.PiecewiseSum(0, 0.0)
        self.window_cov = sim.PiecewiseSum(0, 0.0)
        self.window_errors = 0.0
        self.last_keys = None
        self.last_actions = None
        self._seq = 0
        self._key_cache: list = [None] * n
        self.heap: list = []
        self._fgs_scheduled = -1
        self._settled_tti = -1
        self._cov_masks: dict = {}
        self._cov_cache: dict = {}
        self._cov_points = None
        # sensing power can only reach p_th within this distance
        if cfg.eta > 0.0:
            self.reach = min(cfg.r_max, -math.log(cfg.p_th) / cfg.eta) + 1e-9
        else:
            self.reach = cfg.r_max + 1e-9
        self._seed_static_events()

    # -- plumbing ------------------------------------------------------

    def _push(self, tti: int, prio: int, tie: int, kind: str, payload=None):
        if tti >= self.cfg.horizon_ttis:
            return
        self._seq += 1
        heapq.heappush(self.heap, (tti, prio, tie, self._seq, kind, payload))

    def _seed_static_events(self):
        cfg = self.cfg
        for idx, traj in enumerate(self.trajectories):
            self._push(traj.t_spawn, P_SPAWN, traj.id, "spawn", idx)
        period = cfg.energy.harvest_period_ttis
        for t in range(period, cfg.horizon_ttis, period):
            self._push(t, P_HARVEST, 0, "harvest")
        sp = cfg.status_report_period_ttis
        for t in range(sp, cfg.horizon_ttis, sp):
            self._push(t, P_STATUS, 0, "status")
        for t in cfg.snapshot_ttis():
            self._push(t, P_SNAP, 0, "snap")
        if not self.is_grid:
            self._push(0, P_DECIDE, 0, "decide")

    def _available(self, i: int) -> bool:
        return self.level[i] / self.cfg.energy.c_max \
            >= self.cfg.energy.availability_threshold

    def _scheduled_active(self, i: int, t: int) -> bool:
        if self.is_grid:
            return (t - self.phases[i]) % self.cfg.tau == 0
        return self.delta[i] == 1 and self.active_since[i] <= t

    def _active_count(self, i: int, a: int, b: int) -> int:
        """Scheduled-active TTIs of device i in [a, b)."""
        if a >= b:
            return 0
        if self.is_grid:
            tau = self.cfg.tau
            ph = self.phases[i]
            return (b - ph - 1) // tau - (a - ph - 1) // tau
        return (b - a) if self.delta[i] == 1 else 0

    def _integrate(self, i: int, t: int) -> None:
        """Apply sensing-energy drain for device i over [last_int, t)."""
        a = self.last_int[i]
        if t <= a:
            return
        ps = self.cfg.energy.p_sense
        if ps > 0.0:
            count = self._active_count(i, a, t)
            if self.last_sensed_tti[i] >= a:
                count -= 1  # that TTI's charge was applied explicitly
            if count > 0:
                lv = self.level[i]
                floor_lv = self.cfg.energy.availability_threshold \
                    * self.cfg.energy.c_max
                gate = max(floor_lv, ps)
                if lv >= gate:
                    k = min(count, int(math.floor((lv - gate) / ps)) + 1)
                    spend = k * ps
                    self.level[i] = lv - spend
                    self.consumed["sense"][i] += spend
                    self._key_cache[i] = None
        self.last_int[i] = t

    def _integrate_all(self, t: int) -> None:
        for i in range(self.n):
            self._integrate(i, t)

    def _senses_at(self, i: int, t: int) -> bool:
        """Whether device i senses at TTI t (caller guarantees it is
        scheduled active there); applies that TTI's sensing charge."""
        if self.last_sensed_tti[i] == t:
            return True
        self._integrate(i, t)
        lv = self.level[i]
        if lv / self.cfg.energy.c_max < self.cfg.energy.availability_threshold:
            return False
        ps = self.cfg.energy.p_sense
        if ps > 0.0:
            if lv < ps:
                return False
            self.level[i] = lv - ps
            self.consumed["sense"][i] += ps
            self._key_cache[i] = None
        self.last_sensed_tti[i] = t
        return True

    def _settle_tti(self, t: int) -> None:
        """Bring buffer levels to their post-sensing value for TTI t, for
        phases that read energy after the sensing phase."""
        if self._settled_tti == t:
            return
        self._settled_tti = t
        if self.cfg.energy.p_sense == 0.0:
            return
        for i in range(self.n):
            if self._scheduled_active(i, t):
                self._senses_at(i, t)
            else:
                self._integrate(i, t)

    # -- coverage ------------------------------------------------------

    def _coverage(self) -> float:
        """Coverage by devices that are both activated and available; a
        drained device covers nothing. Evaluated at decision instants."""
        cfg = self.cfg
        ids = [i for i in range(self.n)
               if self.delta[i] == 1 and self._available(i)]
        key = tuple((i, self.poses[i].theta_min) for i in ids)
        val = self._cov_cache.get(key)
        if val is not None:
            return val
        if self._cov_points is None:
            m = cfg.coverage_samples
            perim = cfg.layout.protected_perimeter
            pts = [perimeter_point(cfg.layout.center,
                                   cfg.layout.protected_half_width,
                                   k * perim / m) for k in range(m)]
            self._cov_points = (np.array([p.x for p in pts]),
                                np.array([p.y for p in pts]))
        px, py = self._cov_points
        union = None
        for i in ids:
            pose = self.poses[i]
            ck = (i, pose.theta_min)
            mask = self._cov_masks.get(ck)
            if mask is None:
                mask = _power_at(pose, px, py) >= cfg.p_th
                self._cov_masks[ck] = mask
            union = mask if union is None else (union | mask)
        covered = 0 if union is None else int(np.count_nonzero(union))
        val = covered / cfg.coverage_samples
        self._cov_cache[key] = val
        return val

    # -- candidates ----------------------------------------------------

    def _compute_candidates(self, oid: int, i: int, t_lo: int,
                            t_hi: int) -> None:
        obj = self.live[oid]
        if i in obj.crossed:
            return
        cfg = self.cfg
        pose = self.poses[i]
        t_hi = min(t_hi, obj.t_exit, cfg.horizon_ttis)
        if t_lo >= t_hi:
            return
        ts_parts = []
        pw_parts = []
        for a, b in _interval_ttis(obj.traj, pose.position.x, pose.position.y,
                                   self.reach, t_lo, t_hi, cfg.tti_duration):
            if self.is_grid:
                tau = cfg.tau
                first = a + (self.phases[i] - a) % tau
                ts = np.arange(first, b, tau, dtype=np.int64)
            else:
                ts = np.arange(a, b, dtype=np.int64)
            if ts.size == 0:
                continue
            px, py = _positions(obj.traj, ts, cfg.tti_duration)
            power = _power_at(pose, px, py)
            sel = power >= cfg.p_th
            if np.any(sel):
                ts_parts.append(ts[sel])
                pw_parts.append(power[sel])
        if not ts_parts:
            self.cand.pop((oid, i), None)
            return
        ts = np.concatenate(ts_parts)
        pw = np.concatenate(pw_parts)
        order = np.argsort(ts, kind="stable")
        self.cand[(oid, i)] = [ts[order], pw[order], 0]
        self._push(int(ts[order][0]), P_CAND, (i, oid), "cand", (oid, i))

    def _advance_candidate(self, oid: int, i: int) -> None:
        entry = self.cand.get((oid, i))
        if entry is None:
            return
        ts, pw, ptr = entry
        ptr += 1
        if ptr >= len(ts):
            self.cand.pop((oid, i), None)
            return
        entry[2] = ptr
        self._push(int(ts[ptr]), P_CAND, (i, oid), "cand", (oid, i))

    # -- event handlers ------------------------------------------------

    def _on_spawn(self, t: int, idx: int) -> None:
        cfg = self.cfg
        traj = self.trajectories[idx]
        _, t_g, t_exit = crossing_times(traj, cfg.layout, cfg.tti_duration)
        obj = _Obj(traj, t_g, t_exit)
        self.live[traj.id] = obj
        self._push(t_exit - 1, P_DESPAWN, traj.id, "despawn", traj.id)
        if self.is_grid:
            for i in range(self.n):
                self._compute_candidates(traj.id, i, t, t_exit)
        else:
            for i in range(self.n):
                if self.delta[i] == 1:
                    self._compute_candidates(traj.id, i, t, self.window_end)

    def _on_harvest(self, t: int) -> None:
        cfg = self.cfg
        self._integrate_all(t)
        draws = self.rng_harvest.random(self.n)
        for i in range(self.n):
            if draws[i] < cfg.energy.lam:
                new = min(self.level[i] + cfg.energy.p_b, cfg.energy.c_max)
                self.harvested[i] += new - self.level[i]
                self.level[i] = new
                self._key_cache[i] = None

    def _on_status(self, t: int) -> None:
        p_tx = self.cfg.energy.p_tx
        self._settle_tti(t)
        self._integrate_all(t)
        for i in range(self.n):
            if self.level[i] >= p_tx:
                self.level[i] -= p_tx
                self.consumed["tx"][i] += p_tx
                self._key_cache[i] = None

    def _on_candidate(self, t: int, oid: int, i: int) -> None:
        obj = self.live.get(oid)
        if obj is None or i in obj.crossed:
            return
        cfg = self.cfg
        if obj.fused_tti is not None and obj.fused_tti < t \
                and cfg.suppress_after_fusion:
            self.cand.pop((oid, i), None)
            return
        if not self._senses_at(i, t):
            self._advance_candidate(oid, i)
            return
        obj.crossed.add(i)
        self.cand.pop((oid, i), None)
        if self.level[i] >= cfg.energy.p_tx:
            self.level[i] -= cfg.energy.p_tx
            self.consumed["tx"][i] += cfg.energy.p_tx
            self._key_cache[i] = None
            pos = position_at(obj.traj, t, cfg.tti_duration)
            conf = sensing_power(self.poses[i], pos)
            obj.reports.append(DetectionReport(i, t, conf, pos))
            obj.new_report = True
            self.events.append(EventRecord(t, "report", i, oid, conf))
            if self._fgs_scheduled != t:
                self._fgs_scheduled = t
                self._push(t, P_FGS, 0, "fgs")

    def _on_fgs(self, t: int) -> None:
        cfg = self.cfg
        for oid in sorted(self.live):
            obj = self.live[oid]
            if not obj.new_report:
                continue
            obj.new_report = False
            if obj.fused_tti is not None:
                continue
            t_det = fuse(obj.reports, cfg.p_th)
            if t_det is None:
                continue
            obj.fused_tti = t_det
            self.events.append(EventRecord(t, "fusion", None, oid,
                                           float(t_det)))
            self._resolve(obj, t_det)
            if cfg.suppress_after_fusion:
                for i in range(self.n):
                    self.cand.pop((oid, i), None)
            if cfg.wakeups_on():
                self._settle_tti(t)
                self._integrate_all(t)
                track = predict(obj.reports, cfg.layout.center,
                                cfg.intruder_speed, cfg.tti_duration)
                devices = [(i, self.poses[i], self.delta[i] == 0,
                            self._available(i)) for i in range(self.n)]
                for dev in select_wakeups(track, devices, cfg.p_th,
                                          cfg.wakeup_horizon_ttis,
                                          cfg.tti_duration,
                                          cfg.wakeup_sample_period_ttis):
                    self._push(t + 1, P_WAKEUP, dev, "wakeup", dev)
                    self.events.append(EventRecord(t, "wakeup", dev, oid,
                                                   None))

    def _on_wakeup(self, t: int, i: int) -> None:
        cfg = self.cfg
        if self.delta[i] != 0:
            return
        self._integrate(i, t)
        if self.level[i] < cfg.energy.p_wur:
            return
        self.level[i] -= cfg.energy.p_wur
        self.consumed["wur"][i] += cfg.energy.p_wur
        self.delta[i] = 1
        self.active_since[i] = t
        self._key_cache[i] = None
        self._integrate_all(t)  # coverage availability reads all levels
        self.window_delta.advance(t, float(sum(self.delta)))
        self.window_cov.advance(t, self._coverage())
        for oid in sorted(self.live):
            obj = self.live[oid]
            if obj.fused_tti is not None and cfg.suppress_after_fusion:
                continue
            self._compute_candidates(oid, i, t, self.window_end)

    def _on_despawn(self, t: int, oid: int) -> None:
        obj = self.live.pop(oid, None)
        if obj is None:
            return
        if obj.fused_tti is None:
            self._resolve(obj, None)
        for i in range(self.n):
            self.cand.pop((oid, i), None)
        if not self.is_grid:
            self.recent_dead[oid] = obj  # kept for next-TTI state encoding

    def _on_snapshot(self, t: int) -> None:
        cfg = self.cfg
        self._settle_tti(t)
        self._integrate_all(t)
        avg_pct = sum(self.level) / (self.n * cfg.energy.c_max) * 100.0
        available = sum(1 for i in range(self.n) if self._available(i))
        depleted = sum(1 for lv in self.level if lv <= 1e-12)
        self.snapshots.append({"tti": t, "avg_pct": avg_pct,
                               "available": available, "depleted": depleted})

    def _resolve(self, obj: _Obj, t_det: Optional[int]) -> None:
        from .policy import IntruderOutcome

        self.outcomes.append(IntruderOutcome(obj.traj.id, obj.traj.t_spawn,
                                             obj.t_g, t_det))
        self.window_errors += object_error(t_det, obj.t_g, self.cfg.weights)

    # -- controller decisions (rl only) --------------------------------

    def _conf_at_decide(self, i: int, t: int) -> float:
        cfg = self.cfg
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

    def _on_decide(self, t: int) -> None:
        cfg = self.cfg
        n = self.n
        for oid in [o for o, obj in self.recent_dead.items()
                    if obj.t_exit < t]:
            del self.recent_dead[oid]
        self._integrate_all(t)
        busy = bool(self.live) or bool(self.recent_dead)
        keys = []
        for i in range(n):
            if not busy and self._key_cache[i] is not None:
                keys.append(self._key_cache[i])
                continue
            pose = self.poses[i]
            key = encode_fields(
                self.delta[i], pose.theta_min, self._conf_at_decide(i, t),
                pose.position.x, pose.position.y, self.level[i],
                cfg.p_th, cfg.energy.c_max)
            keys.append(key)
            if not busy:
                self._key_cache[i] = key
        if self.learn and self.last_keys is not None and t > self.window_start:
            width = t - self.window_start
            r = self.sim.epoch_reward(self.window_delta.take(t), n, width,
                                      self.window_cov.take(t),
                                      self.window_errors, self.alpha,
                                      cfg.weights)
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
        hold = True
        for i in range(n):
            want, rot = ACTIONS[actions[i]]
            if rot != 0:
                new_pose, steps = rotate_pose(self.poses[i], rot)
                cost = steps * cfg.energy.p_rot_bin
                if self.level[i] >= cost:
                    self.level[i] -= cost
                    self.consumed["rot"][i] += cost
                    self.poses[i] = new_pose
                    self._key_cache[i] = None
                    hold = False
            if want == 1 and self.delta[i] == 0:
                if self.level[i] >= cfg.energy.p_wur:
                    self.level[i] -= cfg.energy.p_wur
                    self.consumed["wur"][i] += cfg.energy.p_wur
                    self.delta[i] = 1
                    self.active_since[i] = t
                    self._key_cache[i] = None
                    hold = False
            elif want == 0 and self.delta[i] == 1:
                self.delta[i] = 0
                self._key_cache[i] = None
                hold = False
        self.last_keys = keys
        self.last_actions = actions
        self.window_delta.advance(t, float(sum(self.delta)))
        self.window_cov.advance(t, self._coverage())

        # schedule the next decision; skip quiet epochs when nothing can
        # change the observable state before the next queued event
        next_t = t + cfg.tau
        can_skip = (not self.learn and self.policy.epsilon == 0.0 and hold
                    and not any(obj.fused_tti is None
                                for obj in self.live.values())
                    and (cfg.energy.p_sense == 0.0
                         or not any(self.delta)))
        if can_skip:
            if not self.heap:
                return
            t_next_event = self.heap[0][0]
            if t_next_event % cfg.tau == 0:
                next_t = max(next_t, t_next_event)
            else:
                next_t = max(next_t,
                             (t_next_event // cfg.tau + 1) * cfg.tau)
        self.window_end = min(next_t, cfg.horizon_ttis)
        self._push(next_t, P_DECIDE, 0, "decide")
        for oid in sorted(self.live):
            obj = self.live[oid]
            if obj.fused_tti is not None and cfg.suppress_after_fusion:
                continue
            for i in range(n):
                if self.delta[i] == 1:
                    self._compute_candidates(oid, i, t, self.window_end)

    # -- main loop ------------------------------------------------------

    def run(self):
        cfg = self.cfg
        heap = self.heap
        while heap:
            t, prio, tie, _, kind, payload = heapq.heappop(heap)
            if t >= cfg.horizon_ttis:
                break
            if kind == "cand":
                self._on_candidate(t, payload[0], payload[1])
            elif kind == "harvest":
                self._on_harvest(t)
            elif kind == "status":
                self._on_status(t)
            elif kind == "spawn":
                self._on_spawn(t, payload)
            elif kind == "fgs":
                self._on_fgs(t)
            elif kind == "despawn":
                self._on_despawn(t, payload)
            elif kind == "decide":
                self._on_decide(t)
            elif kind == "wakeup":
                self._on_wakeup(t, payload)
            else:
                self._on_snapshot(t)
        self._integrate_all(cfg.horizon_ttis)
        energy = {
            "initial": list(self.initial_levels),
            "harvested": list(self.harvested),
            "consumed_tx": list(self.consumed["tx"]),
            "consumed_wur": list(self.consumed["wur"]),
            "consumed_rot": list(self.consumed["rot"]),
            "consumed_sense": list(self.consumed["sense"]),
            "final": list(self.level),
        }
        metrics = self.sim.summarize_outcomes(self.outcomes, cfg, self.alpha,
                                              list(self.snapshots), energy)
        return metrics, self.events


def run_event(config, policy: Optional[QPolicy], learn: bool):
    if config.policy_kind == "grid" and config.wakeups_on():
        raise ValueError("event engine does not support grid with wake-ups; "
                         "use engine='reference'")
    return EventEngine(config, policy, learn).run()
