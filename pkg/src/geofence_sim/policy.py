"""Scoring, the duty-cycled grid baseline, and the tabular Q controller.

Per-intruder outcomes score 0 (early), mu1 (late) or 1 (miss). The grid
baseline places devices uniformly along the protected boundary and wakes
each one every tau TTIs. The learned controller keeps one Q table shared
by all devices, keyed on a discretized per-device state, with six actions
per decision: {sleep, activate} x {rotate -30, 0, +30 degrees}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .environment import GeofenceLayout, perimeter_normal_deg, perimeter_point
from .sensing import SensorPose, Vec2

# Fixed action order; ties in greedy selection resolve to the lowest index.
ACTIONS: tuple[tuple[int, int], ...] = (
    (0, 0), (0, -1), (0, 1), (1, 0), (1, -1), (1, 1))
N_ACTIONS = len(ACTIONS)

QTABLE_FORMAT = "qtable-v1"


@dataclass(frozen=True)
class OutcomeWeights:
    mu1: float = 0.5  # late-detection penalty, between early (0) and miss (1)
    mu2: float = 0.5  # coverage weight
    mu3: float = 1.0  # detection-error weight

    def __post_init__(self):
        if not 0.0 <= self.mu1 <= 1.0:
            raise ValueError("mu1 must lie in [0, 1]")
        if self.mu2 <= 0.0 or self.mu3 <= 0.0:
            raise ValueError("mu2 and mu3 must be > 0")


@dataclass(frozen=True)
class DeviceState:
    """Observable per-device state fed to the controller."""

    delta: int
    theta_min: float
    last_confidence: float
    position: Vec2
    buffer_level: float


@dataclass(frozen=True)
class GridConfig:
    n_devices: int
    tau: int
    phase_mode: str = "staggered"  # or "aligned"

    def __post_init__(self):
        if self.n_devices < 1:
            raise ValueError("n_devices must be >= 1")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.phase_mode not in ("staggered", "aligned"):
            raise ValueError("phase_mode must be 'staggered' or 'aligned'")


def object_error(t_det: Optional[int], t_g: int,
                 weights: OutcomeWeights) -> float:
    """0 for early detection, mu1 for late (t_det >= t_g), 1 for a miss."""
    if t_det is None:
        return 1.0
    return 0.0 if t_det < t_g else weights.mu1


def objective(errors: Sequence[float], alpha: float, t_ttis: int) -> float:
    """Mean detection error normalized by the expected intruder count."""
    if t_ttis <= 0:
        raise ValueError("t_ttis must be > 0")
    if alpha <= 0.0:
        raise ValueError("alpha must be > 0")
    return sum(errors) / (alpha * t_ttis)


def grid_placement(n: int, layout: GeofenceLayout, fov: float = 60.0,
                   r_max: float = 3.0, eta: float = 1.0) -> list[SensorPose]:
    """Equal arc-length placement on the protected boundary, starting at
    the bottom-side midpoint, each device facing the outward normal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    perim = layout.protected_perimeter
    poses = []
    for k in range(n):
        s = k * perim / n
        pos = perimeter_point(layout.center, layout.protected_half_width, s)
        normal = perimeter_normal_deg(layout.protected_half_width, s)
        poses.append(SensorPose(position=pos, theta_min=normal - fov / 2.0,
                                fov=fov, r_max=r_max, eta=eta))
    return poses


def staggered_orientation_placement(n: int, layout: GeofenceLayout,
                                    fov: float = 60.0, r_max: float = 3.0,
                                    eta: float = 1.0,
                                    phases: int = 3) -> list[SensorPose]:
    """Uniform boundary placement with home orientations cycling through
    ``phases`` 30-degree offsets around the outward normal.

    Neighboring devices then occupy distinct orientation bins in the
    controller's state key, so co-located devices stop acting in unison
    and their union wedge widens around the outward direction.
    """
    poses = grid_placement(n, layout, fov=fov, r_max=r_max, eta=eta)
    out = []
    for k, pose in enumerate(poses):
        offset = (k % phases - phases // 2) * 30.0
        out.append(SensorPose(position=pose.position,
                              theta_min=pose.theta_min + offset,
                              fov=fov, r_max=r_max, eta=eta))
    return out


def grid_phase(device_index: int, config: GridConfig) -> int:
    if config.phase_mode == "aligned":
        return 0
    return (device_index * (config.tau // config.n_devices)) % config.tau


def grid_schedule(device_index: int, t: int, config: GridConfig) -> int:
    """1 when the device's periodic wake slot lands on TTI ``t``."""
    return 1 if (t - grid_phase(device_index, config)) % config.tau == 0 else 0


def encode_fields(delta: int, theta_min: float, confidence: float, x: float,
                  y: float, level: float, p_th: float, c_max: float,
                  position_cell_m: float = 1.0) -> tuple:
    """Discretize raw device-state fields into a hashable Q-table key.

    Bins: activation bit, 30-degree orientation bin, confidence in
    {zero, sub-threshold, valid}, ceil(c_max) energy levels, and a
    coarse position cell.
    """
    orient_bin = int(theta_min // 30.0) % 12
    if confidence <= 0.0:
        conf_bin = 0
    elif confidence < p_th:
        conf_bin = 1
    else:
        conf_bin = 2
    n_energy_bins = int(math.ceil(c_max))
    energy_bin = min(int(level * n_energy_bins / c_max), n_energy_bins - 1)
    cell = (int(math.floor(x / position_cell_m)),
            int(math.floor(y / position_cell_m)))
    return (delta, orient_bin, conf_bin, energy_bin, cell)


def encode_state(state: DeviceState, p_th: float, c_max: float,
                 position_cell_m: float = 1.0) -> tuple:
    """Discretize a device state into a hashable Q-table key."""
    return encode_fields(state.delta, state.theta_min, state.last_confidence,
                         state.position.x, state.position.y,
                         state.buffer_level, p_th, c_max, position_cell_m)


def reward(delta_vec: Sequence[int], cov: float, error_events: float,
           alpha: float, weights: OutcomeWeights, n: int) -> float:
    """Per-step reward: idle fraction, plus weighted coverage, minus the
    weighted detection errors resolved at this step."""
    return (1.0 - sum(delta_vec) / n) + weights.mu2 * cov \
        - alpha * weights.mu3 * error_events


@dataclass
class QPolicy:
    """Tabular action values with epsilon-greedy selection."""

    epsilon: float = 0.1
    alpha_lr: float = 0.1
    gamma: float = 0.9
    table: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")

    def action_values(self, key) -> np.ndarray:
        vals = self.table.get(key)
        if vals is None:
            return np.zeros(N_ACTIONS)
        return vals

    def greedy_action(self, key) -> int:
        cache = self.__dict__.setdefault("_greedy_cache", {})
        idx = cache.get(key)
        if idx is None:
            vals = self.table.get(key)
            idx = 0 if vals is None else int(np.argmax(vals))
            cache[key] = idx
        return idx

    def select_action(self, key, rng: np.random.Generator,
                      allow_rotation: bool = True) -> int:
        """Epsilon-greedy action index; greedy ties break by action order."""
        if self.epsilon > 0.0 and rng.random() < self.epsilon:
            idx = int(rng.integers(N_ACTIONS))
        else:
            idx = self.greedy_action(key)
        if not allow_rotation and ACTIONS[idx][1] != 0:
            idx = 0 if ACTIONS[idx][0] == 0 else 3  # coerce to zero rotation
        return idx

    def q_update(self, key, action_idx: int, reward_value: float,
                 next_key) -> None:
        if not math.isfinite(reward_value):
            raise ValueError("reward must be finite")
        vals = self.table.get(key)
        if vals is None:
            vals = np.zeros(N_ACTIONS)
            self.table[key] = vals
        target = reward_value + self.gamma * float(
            np.max(self.action_values(next_key)))
        vals[action_idx] += self.alpha_lr * (target - vals[action_idx])
        self.__dict__.setdefault("_greedy_cache", {}).pop(key, None)

    def save(self, path) -> None:
        entries = [{"key": _key_to_json(k), "q": [float(v) for v in vals]}
                   for k, vals in sorted(self.table.items())]
        doc = {"format": QTABLE_FORMAT,
               "actions": [list(a) for a in ACTIONS],
               "epsilon": self.epsilon, "alpha_lr": self.alpha_lr,
               "gamma": self.gamma, "entries": entries}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "QPolicy":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("format") != QTABLE_FORMAT:
            raise ValueError(f"unsupported q-table format: {doc.get('format')}")
        policy = cls(epsilon=doc["epsilon"], alpha_lr=doc["alpha_lr"],
                     gamma=doc["gamma"])
        for entry in doc["entries"]:
            policy.table[_key_from_json(entry["key"])] = np.array(
                entry["q"], dtype=float)
        return policy


def _key_to_json(key) -> list:
    return [key[0], key[1], key[2], key[3], [key[4][0], key[4][1]]]


def _key_from_json(raw) -> tuple:
    return (raw[0], raw[1], raw[2], raw[3], (raw[4][0], raw[4][1]))


@dataclass(frozen=True)
class IntruderOutcome:
    """Resolved scoring record for one intruder."""

    object_id: int
    t_in: int
    t_g: int
    t_det: Optional[int]

    @property
    def detected(self) -> bool:
        return self.t_det is not None

    @property
    def early(self) -> bool:
        return self.t_det is not None and self.t_det < self.t_g


def metrics(outcomes: Sequence[IntruderOutcome],
            tti_duration: float) -> dict:
    """P_det, P_early and mean detection delay in seconds (None if no
    intruder was detected)."""
    if not outcomes:
        raise ValueError("metrics requires at least one intruder outcome")
    total = len(outcomes)
    detected = [o for o in outcomes if o.detected]
    early = sum(1 for o in outcomes if o.early)
    if detected:
        mean_t_det = sum((o.t_det - o.t_in) for o in detected) \
            * tti_duration / len(detected)
    else:
        mean_t_det = None
    return {"p_det": len(detected) / total, "p_early": early / total,
            "mean_t_det_s": mean_t_det}


def export_placement_csv(poses: Sequence[SensorPose], path) -> None:
    """Write a placement as CSV rows device_id,x,y,theta_min."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("device_id,x,y,theta_min\n")
        for i, pose in enumerate(poses):
            fh.write(f"{i},{pose.position.x!r},{pose.position.y!r},"
                     f"{pose.theta_min!r}\n")
