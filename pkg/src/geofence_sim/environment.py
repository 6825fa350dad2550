"""Monitored-area geometry, intruder arrivals and trajectories.

Two concentric axis-aligned squares: the protected area (inner) and the
outer zone around it. Intruders spawn on the outer boundary, walk a
straight two-leg path through a point on the protected boundary, and
despawn when the path ends on the outer boundary again.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .sensing import Vec2

SECONDS_PER_DAY = 86_400.0

# Side order walking counter-clockwise from the south-side midpoint,
# with the outward normal azimuth of each side in degrees.
_SIDE_NORMALS = (270.0, 0.0, 90.0, 180.0, 270.0)


@dataclass(frozen=True)
class GeofenceLayout:
    protected_half_width: float = 3.5
    outer_half_width: float = 4.0
    center: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))

    def __post_init__(self):
        if not 0.0 < self.protected_half_width < self.outer_half_width:
            raise ValueError(
                "require 0 < protected_half_width < outer_half_width")

    @property
    def protected_perimeter(self) -> float:
        return 8.0 * self.protected_half_width

    @property
    def outer_perimeter(self) -> float:
        return 8.0 * self.outer_half_width


def perimeter_point(center: Vec2, half_width: float, s: float) -> Vec2:
    """Point at arc length ``s`` along a square boundary.

    Arc length 0 is the midpoint of the bottom side; the walk is
    counter-clockwise.
    """
    hw = half_width
    s = s % (8.0 * hw)
    cx, cy = center.x, center.y
    if s < hw:
        return Vec2(cx + s, cy - hw)
    if s < 3.0 * hw:
        return Vec2(cx + hw, cy - hw + (s - hw))
    if s < 5.0 * hw:
        return Vec2(cx + hw - (s - 3.0 * hw), cy + hw)
    if s < 7.0 * hw:
        return Vec2(cx - hw, cy + hw - (s - 5.0 * hw))
    return Vec2(cx - hw + (s - 7.0 * hw), cy - hw)


def perimeter_normal_deg(half_width: float, s: float) -> float:
    """Outward normal azimuth (degrees) at arc length ``s``."""
    hw = half_width
    s = s % (8.0 * hw)
    if s < hw:
        idx = 0
    elif s < 3.0 * hw:
        idx = 1
    elif s < 5.0 * hw:
        idx = 2
    elif s < 7.0 * hw:
        idx = 3
    else:
        idx = 4
    return _SIDE_NORMALS[idx]


@dataclass(frozen=True)
class ArrivalProfile:
    """Time-varying arrival intensity in arrivals per hour."""

    day_rate: float = 10.0
    night_rate: float = 0.5
    day_start_hour: float = 6.0
    day_end_hour: float = 18.0
    origin_hour: float = 0.0  # wall-clock time of simulation TTI 0

    def __post_init__(self):
        if self.day_rate < 0.0 or self.night_rate < 0.0:
            raise ValueError("arrival rates must be >= 0")
        if not self.day_start_hour < self.day_end_hour:
            raise ValueError("day_start_hour must precede day_end_hour")

    def rate_at_hour(self, tod_hours: float) -> float:
        tod = tod_hours % 24.0
        if self.day_start_hour <= tod < self.day_end_hour:
            return self.day_rate
        return self.night_rate

    def mean_rate_per_hour(self) -> float:
        day_len = self.day_end_hour - self.day_start_hour
        return (self.day_rate * day_len
                + self.night_rate * (24.0 - day_len)) / 24.0

    def alpha_per_tti(self, tti_duration: float) -> float:
        """Mean expected intruders per TTI over a full day."""
        return self.mean_rate_per_hour() / 3600.0 * tti_duration


@dataclass(frozen=True)
class IntruderTrajectory:
    """Straight two-leg path: outer boundary -> protected boundary -> out."""

    id: int
    t_spawn: int
    entry_point: Vec2
    via_point: Vec2
    exit_point: Vec2
    speed: float = 1.0

    def __post_init__(self):
        if self.speed <= 0.0:
            raise ValueError("speed must be > 0")

    @property
    def leg_lengths(self) -> tuple[float, float]:
        l1 = math.hypot(self.via_point.x - self.entry_point.x,
                        self.via_point.y - self.entry_point.y)
        l2 = math.hypot(self.exit_point.x - self.via_point.x,
                        self.exit_point.y - self.via_point.y)
        return l1, l2

    @property
    def path_length(self) -> float:
        l1, l2 = self.leg_lengths
        return l1 + l2


def _boundary_ttis(profile: ArrivalProfile, horizon_ttis: int,
                   tti_duration: float) -> list[int]:
    """TTIs where the arrival rate changes, plus 0 and the horizon."""
    bounds = {0, horizon_ttis}
    horizon_s = horizon_ttis * tti_duration
    origin_s = profile.origin_hour * 3600.0
    for target_h in (profile.day_start_hour, profile.day_end_hour):
        first = (target_h * 3600.0 - origin_s) % SECONDS_PER_DAY
        b = first
        while b < horizon_s:
            tti = int(math.ceil(b / tti_duration - 1e-9))
            if 0 < tti < horizon_ttis:
                bounds.add(tti)
            b += SECONDS_PER_DAY
    return sorted(bounds)


def sample_arrivals(profile: ArrivalProfile, horizon_ttis: int,
                    tti_duration: float,
                    rng: np.random.Generator) -> list[int]:
    """Spawn TTIs from per-TTI Bernoulli thinning of the rate profile.

    Within each constant-rate stretch the gaps between successes are
    sampled geometrically, which is distribution-identical to drawing
    one Bernoulli per TTI.
    """
    if horizon_ttis < 0:
        raise ValueError("horizon_ttis must be >= 0")
    if tti_duration <= 0.0:
        raise ValueError("tti_duration must be > 0")
    arrivals: list[int] = []
    bounds = _boundary_ttis(profile, horizon_ttis, tti_duration)
    origin_s = profile.origin_hour * 3600.0
    for t0, t1 in zip(bounds[:-1], bounds[1:]):
        mid_s = origin_s + (t0 + 0.5) * tti_duration
        rate = profile.rate_at_hour((mid_s / 3600.0) % 24.0)
        p = rate / 3600.0 * tti_duration
        if p > 0.1:
            raise ValueError(
                "rate * tti_duration exceeds 0.1; thinning approximation "
                "invalid")
        if p <= 0.0:
            continue
        cur = t0
        while True:
            gap = int(rng.geometric(p))
            t = cur + gap - 1
            if t >= t1:
                break
            arrivals.append(t)
            cur = t + 1
    return arrivals


def spawn_trajectory(layout: GeofenceLayout, t_spawn: int,
                     rng: np.random.Generator, traj_id: int = 0,
                     speed: float = 1.0) -> IntruderTrajectory:
    """Draw a trajectory: uniform entry/exit on the outer boundary and a
    uniform via point on the protected boundary, resampled while any leg
    is degenerate."""
    outer_p = layout.outer_perimeter
    prot_p = layout.protected_perimeter
    while True:
        entry = perimeter_point(layout.center, layout.outer_half_width,
                                rng.uniform(0.0, outer_p))
        via = perimeter_point(layout.center, layout.protected_half_width,
                              rng.uniform(0.0, prot_p))
        exit_ = perimeter_point(layout.center, layout.outer_half_width,
                                rng.uniform(0.0, outer_p))
        if (entry.x, entry.y) != (via.x, via.y) and \
                (via.x, via.y) != (exit_.x, exit_.y):
            return IntruderTrajectory(traj_id, t_spawn, entry, via, exit_,
                                      speed)


def position_at(traj: IntruderTrajectory, t: int,
                tti_duration: float):
    """Position at TTI ``t``, or None before spawn / after the path ends."""
    if t < traj.t_spawn:
        return None
    s = (t - traj.t_spawn) * tti_duration * traj.speed
    l1, l2 = traj.leg_lengths
    total = l1 + l2
    if s > total + 1e-12:
        return None
    if s <= l1:
        f = s / l1 if l1 > 0.0 else 0.0
        return Vec2(traj.entry_point.x + f * (traj.via_point.x - traj.entry_point.x),
                    traj.entry_point.y + f * (traj.via_point.y - traj.entry_point.y))
    f = (s - l1) / l2
    return Vec2(traj.via_point.x + f * (traj.exit_point.x - traj.via_point.x),
                traj.via_point.y + f * (traj.exit_point.y - traj.via_point.y))


def _segment_rect_entry(ax: float, ay: float, bx: float, by: float,
                        cx: float, cy: float, hw: float):
    """Arc length along segment a->b of first contact with the closed
    square |x-cx|<=hw, |y-cy|<=hw; None if the segment misses it."""
    length = math.hypot(bx - ax, by - ay)
    if length == 0.0:
        inside = abs(ax - cx) <= hw and abs(ay - cy) <= hw
        return 0.0 if inside else None
    ux = (bx - ax) / length
    uy = (by - ay) / length
    lo, hi = 0.0, length
    for a0, u in ((ax - cx, ux), (ay - cy, uy)):
        if u == 0.0:
            if abs(a0) > hw:
                return None
            continue
        s0 = (-hw - a0) / u
        s1 = (hw - a0) / u
        if s0 > s1:
            s0, s1 = s1, s0
        lo = max(lo, s0)
        hi = min(hi, s1)
    if lo > hi:
        return None
    return lo


def first_protected_entry_arclen(traj: IntruderTrajectory,
                                 layout: GeofenceLayout) -> float:
    """Continuous arc length at which the path first touches the closed
    protected square. Always defined: the via point lies on it."""
    hw = layout.protected_half_width
    cx, cy = layout.center.x, layout.center.y
    l1, _ = traj.leg_lengths
    s = _segment_rect_entry(traj.entry_point.x, traj.entry_point.y,
                            traj.via_point.x, traj.via_point.y, cx, cy, hw)
    if s is not None:
        return s
    s = _segment_rect_entry(traj.via_point.x, traj.via_point.y,
                            traj.exit_point.x, traj.exit_point.y, cx, cy, hw)
    if s is None:  # the via point itself is on the boundary
        return l1
    return l1 + s


def crossing_times(traj: IntruderTrajectory, layout: GeofenceLayout,
                   tti_duration: float) -> tuple[int, int, int]:
    """(entry TTI, protected-boundary crossing TTI, first absent TTI).

    The crossing TTI is the continuous first-contact time rounded up onto
    the TTI grid, which matches a per-TTI point-in-square scan whenever a
    sample lands inside and stays defined for tangential grazes.
    """
    step = traj.speed * tti_duration
    s_cross = first_protected_entry_arclen(traj, layout)
    t_g = traj.t_spawn + max(1, int(math.ceil(s_cross / step - 1e-9)))
    t_exit = traj.t_spawn + int(math.floor(traj.path_length / step + 1e-9)) + 1
    if t_g >= t_exit:
        t_g = t_exit - 1
    return traj.t_spawn, t_g, t_exit


def export_traces(trajectories, tti_duration: float, path) -> None:
    """Write per-TTI positions of the given trajectories as CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "tti", "x", "y"])
        for traj in trajectories:
            t = traj.t_spawn
            while True:
                pos = position_at(traj, t, tti_duration)
                if pos is None:
                    break
                writer.writerow([traj.id, t, repr(pos.x), repr(pos.y)])
                t += 1
