"""Normalized discrete energy model per device.

A buffer holds at most ``c_max`` units. Harvest ticks add ``p_b`` units
with probability ``lam`` (overflow discarded). Actions consume fixed
amounts; an unaffordable action fails and leaves the buffer untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnergyParams:
    c_max: float = 10.0
    p_b: float = 1.0
    lam: float = 0.1
    p_tx: float = 1.0
    p_wur: float = 0.01
    p_rot_bin: float = 0.1
    p_sense: float = 0.0
    harvest_period_ttis: int = 60_000
    availability_threshold: float = 0.15

    def __post_init__(self):
        if self.c_max <= 0.0:
            raise ValueError("c_max must be > 0")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        for name in ("p_b", "p_tx", "p_wur", "p_rot_bin", "p_sense"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.harvest_period_ttis < 1:
            raise ValueError("harvest_period_ttis must be >= 1")


@dataclass(frozen=True)
class EnergyBuffer:
    level: float = 0.0


def harvest_step(buffer: EnergyBuffer, params: EnergyParams,
                 rng: np.random.Generator) -> EnergyBuffer:
    """One harvest tick: with probability lam add p_b, capped at c_max."""
    if rng.random() < params.lam:
        return EnergyBuffer(min(buffer.level + params.p_b, params.c_max))
    return buffer


def try_consume(buffer: EnergyBuffer, cost: float) -> tuple[bool, EnergyBuffer]:
    """Spend ``cost`` units if affordable.

    Failure is an in-band outcome: returns (False, unchanged buffer).
    """
    if buffer.level >= cost:
        return True, EnergyBuffer(buffer.level - cost)
    return False, buffer


def is_available(buffer: EnergyBuffer, params: EnergyParams) -> bool:
    """True when the fill fraction reaches the availability threshold."""
    return buffer.level / params.c_max >= params.availability_threshold
