"""Directional sensing model for camera-equipped devices.

Angles are degrees normalized to [0, 360); distances are meters. A target
is observable when its azimuth falls inside the camera's angular sector
and its distance is within range; confidence decays exponentially with
distance and is zero beyond the cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

ROTATION_STEP_DEG = 30.0


def normalize_deg(angle: float) -> float:
    """Map an angle in degrees onto [0, 360)."""
    a = math.fmod(angle, 360.0)
    return a + 360.0 if a < 0.0 else a


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("Vec2 components must be finite")


@dataclass(frozen=True)
class PolarOffset:
    """Range/azimuth offset of a target relative to a sensor."""

    r: float
    theta: float

    def __post_init__(self):
        if self.r < 0.0:
            raise ValueError("PolarOffset.r must be >= 0")
        if not 0.0 <= self.theta < 360.0:
            raise ValueError("PolarOffset.theta must lie in [0, 360)")


@dataclass(frozen=True)
class SensorPose:
    """Position, sector and range parameters of one camera device.

    The sector spans [theta_min, theta_min + fov] degrees (closed arc,
    wrap-around aware). ``eta`` is the exponential decay rate per meter
    and ``r_max`` the hard detection cutoff.
    """

    position: Vec2
    theta_min: float
    fov: float = 60.0
    r_max: float = 3.0
    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.fov <= 360.0:
            raise ValueError("SensorPose.fov must lie in (0, 360]")
        if self.r_max <= 0.0:
            raise ValueError("SensorPose.r_max must be > 0")
        if self.eta < 0.0:
            raise ValueError("SensorPose.eta must be >= 0")
        object.__setattr__(self, "theta_min", normalize_deg(self.theta_min))

    @property
    def theta_max(self) -> float:
        return normalize_deg(self.theta_min + self.fov)


def to_polar(sensor: SensorPose, target: Vec2) -> PolarOffset:
    """Range and azimuth of ``target`` as seen from ``sensor``.

    A target coincident with the sensor position maps to (r=0, theta=0).
    """
    dx = target.x - sensor.position.x
    dy = target.y - sensor.position.y
    r = math.hypot(dx, dy)
    if r == 0.0:
        return PolarOffset(0.0, 0.0)
    return PolarOffset(r, normalize_deg(math.degrees(math.atan2(dy, dx))))


def angular_mask(pose: SensorPose, theta_o: float) -> int:
    """1 if azimuth ``theta_o`` lies in the closed sector arc, else 0."""
    offset = normalize_deg(theta_o - pose.theta_min)
    return 1 if offset <= pose.fov else 0


def range_decay(r: float, eta: float, r_max: float) -> float:
    """Distance-dependent confidence: exp(-eta*r) for r <= r_max, else 0.

    The closed interval wins at the cutoff: range_decay(r_max) is
    exp(-eta*r_max), not 0.
    """
    if r > r_max:
        return 0.0
    return math.exp(-eta * r)


def sensing_power(pose: SensorPose, target: Vec2) -> float:
    """Single-interval detection confidence for a target position."""
    off = to_polar(pose, target)
    if not angular_mask(pose, off.theta):
        return 0.0
    return range_decay(off.r, pose.eta, pose.r_max)


def trajectory_confidence(pose, positions) -> float:
    """Max sensing power over a sampled position sequence (0 if empty)."""
    best = 0.0
    for p in positions:
        v = sensing_power(pose, p)
        if v > best:
            best = v
    return best


def rotate_pose(pose: SensorPose, steps: int) -> tuple[SensorPose, int]:
    """Rotate the sector by ``steps`` 30-degree increments.

    Returns the rotated pose and the absolute step count used for energy
    accounting.
    """
    if steps == 0:
        return pose, 0
    new_min = normalize_deg(pose.theta_min + steps * ROTATION_STEP_DEG)
    return replace(pose, theta_min=new_min), abs(steps)
