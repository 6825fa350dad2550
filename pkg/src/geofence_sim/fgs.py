"""Fusion and control logic hosted at the access point.

Collects detection reports, declares a detection on the first valid one,
extrapolates intruder motion, picks sleeping devices worth waking, and
measures how much of the protected boundary the active devices cover.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .environment import GeofenceLayout, perimeter_point
from .sensing import SensorPose, Vec2, sensing_power


@dataclass(frozen=True)
class DetectionReport:
    device_id: int
    tti: int
    confidence: float
    observed_position: Vec2
    class_label: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class TrackEstimate:
    last_position: Vec2
    velocity: Vec2  # m/s
    last_tti: int


@dataclass(frozen=True)
class WakeUpRequest:
    device_id: int
    issue_tti: int


@dataclass(frozen=True)
class EventRecord:
    """One line of the run event log."""

    tti: int
    event_kind: str  # report | fusion | wakeup
    device_id: Optional[int] = None
    object_id: Optional[int] = None
    value: Optional[float] = None

    def to_json_line(self) -> str:
        return json.dumps(
            {"tti": self.tti, "event_kind": self.event_kind,
             "device_id": self.device_id, "object_id": self.object_id,
             "value": self.value},
            sort_keys=True)


def validate_report(confidence: float, p_th: float) -> bool:
    """A report is valid when its confidence reaches the threshold."""
    return confidence >= p_th


def fuse(reports: Iterable[DetectionReport], p_th: float) -> Optional[int]:
    """TTI of the earliest valid report (ties by device id), or None."""
    best: Optional[tuple[int, int]] = None
    for rep in reports:
        if not validate_report(rep.confidence, p_th):
            continue
        key = (rep.tti, rep.device_id)
        if best is None or key < best:
            best = key
    return None if best is None else best[0]


def predict(reports: Sequence[DetectionReport], center: Vec2,
            nominal_speed: float, tti_duration: float) -> TrackEstimate:
    """Constant-velocity estimate from the last two distinct-TTI reports.

    With a single report the velocity points from it toward the layout
    center at nominal speed. Speed is clamped to twice the nominal.
    """
    if not reports:
        raise ValueError("predict requires at least one report")
    dedup: dict[int, DetectionReport] = {}
    for rep in sorted(reports, key=lambda r: (r.tti, r.device_id)):
        dedup[rep.tti] = rep  # same TTI: the later device id wins
    ordered = [dedup[t] for t in sorted(dedup)]
    last = ordered[-1]
    if len(ordered) >= 2:
        prev = ordered[-2]
        dt = (last.tti - prev.tti) * tti_duration
        vx = (last.observed_position.x - prev.observed_position.x) / dt
        vy = (last.observed_position.y - prev.observed_position.y) / dt
    else:
        dx = center.x - last.observed_position.x
        dy = center.y - last.observed_position.y
        norm = math.hypot(dx, dy)
        if norm == 0.0:
            vx = vy = 0.0
        else:
            vx = dx / norm * nominal_speed
            vy = dy / norm * nominal_speed
    speed = math.hypot(vx, vy)
    cap = 2.0 * nominal_speed
    if speed > cap:
        scale = cap / speed
        vx *= scale
        vy *= scale
    return TrackEstimate(last.observed_position, Vec2(vx, vy), last.tti)


def select_wakeups(track: TrackEstimate,
                   devices: Sequence[tuple[int, SensorPose, bool, bool]],
                   p_th: float, horizon_ttis: int, tti_duration: float,
                   sample_period_ttis: int = 50,
                   max_wakeups: Optional[int] = None) -> list[int]:
    """Sleeping, available devices whose sector the extrapolated path hits.

    ``devices`` holds (device_id, pose, sleeping, available) tuples. The
    path is sampled every ``sample_period_ttis`` over the horizon; a
    device qualifies when its sensing power reaches the threshold at any
    sample. Returns device ids sorted ascending, optionally capped.
    """
    samples = []
    k = sample_period_ttis
    while k <= horizon_ttis:
        dt = k * tti_duration
        samples.append(Vec2(track.last_position.x + track.velocity.x * dt,
                            track.last_position.y + track.velocity.y * dt))
        k += sample_period_ttis
    chosen = []
    for device_id, pose, sleeping, available in devices:
        if not (sleeping and available):
            continue
        if any(sensing_power(pose, p) >= p_th for p in samples):
            chosen.append(device_id)
    chosen.sort()
    if max_wakeups is not None:
        chosen = chosen[:max_wakeups]
    return chosen


def coverage_fraction(active_poses: Sequence[SensorPose],
                      layout: GeofenceLayout, p_th: float,
                      samples: int = 1024) -> float:
    """Fraction of protected-boundary sample points seen above threshold."""
    if samples < 4:
        raise ValueError("samples must be >= 4")
    if not active_poses:
        return 0.0
    perim = layout.protected_perimeter
    covered = 0
    for i in range(samples):
        point = perimeter_point(layout.center, layout.protected_half_width,
                                i * perim / samples)
        if any(sensing_power(pose, point) >= p_th for pose in active_poses):
            covered += 1
    return covered / samples
