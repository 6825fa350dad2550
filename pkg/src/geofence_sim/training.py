"""Episodic training of the tabular controller.

Each episode simulates one intruder transit plus a quiet lead-in and a
settling margin, with learning updates at every decision epoch.
Exploration and the learning rate anneal over episodes; initial buffer
levels are drawn from a seeded stream weighted toward the full-buffer
conditions evaluation runs spend most time in.

Under the plain per-TTI weighting a missed intruder is worth about
1.5e-6 reward units at the default arrival intensity, which no
activation schedule can sense, so training scales the error weight to a
per-miss penalty of several reward units. Detection knowledge then
reaches the policy through two channels: sub-threshold sensor contact
(the confidence bin of the state) makes "stay active while something is
in view" quickly learnable, and the discounted miss penalty prices the
ambient wake duty while nothing is in view.

The "reliability" preset disables orientation moves: the home outward
orientations already face approaching intruders, and rotation
exploration multiplies the visited state space without a coverage
payoff (an outward wedge on the boundary covers no boundary points).
The "frugal" preset keeps the configured coverage weight and a small
miss penalty, leaving the sleep-leaning equilibrium that conserves
energy.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

import numpy as np

from .environment import crossing_times, spawn_trajectory
from .policy import QPolicy
from .simulate import SimConfig, run

MISS_PENALTY = 16.0        # per-miss reward charge, reliability emphasis
FRUGAL_MISS_PENALTY = 2.0  # small enough that quiet-time sleep stays
                           # optimal; contact states still favor sensing
TRAIN_GAMMA = 0.95


def training_config(base: SimConfig, emphasis: str = "reliability",
                    miss_penalty: float = None) -> SimConfig:
    if emphasis not in ("reliability", "frugal"):
        raise ValueError("emphasis must be 'reliability' or 'frugal'")
    if miss_penalty is None:
        miss_penalty = MISS_PENALTY if emphasis == "reliability" \
            else FRUGAL_MISS_PENALTY
    alpha = base.effective_alpha()
    weights = replace(base.weights, mu3=miss_penalty / alpha)
    # orientation moves are left out of both presets: coverage of the
    # boundary is insensitive to them here, and rotation exploration
    # multiplies the visited state space and burns rotation energy on
    # argmax noise; explicit configs can still enable them
    return replace(base, policy_kind="rl", weights=weights,
                   rl_gamma=TRAIN_GAMMA, rotation_enabled=False)


def eval_config(base: SimConfig, emphasis: str = "reliability") -> SimConfig:
    """Evaluation twin of training_config: the policy must be scored under
    the same action coercions it was trained with."""
    return replace(base, policy_kind="rl", rotation_enabled=False)


def train_rl_policy(base: SimConfig, episodes: int = 1200,
                    policy: Optional[QPolicy] = None,
                    emphasis: str = "reliability",
                    miss_penalty: float = None,
                    warmup_epochs: int = 6, margin_epochs: int = 2,
                    intruders_per_episode: int = 2,
                    epsilon_start: float = 0.6,
                    epsilon_final: float = None,
                    lr_start: float = 0.3, lr_final: float = 0.05) -> QPolicy:
    """Train a Q policy for the given configuration and return it frozen
    (epsilon 0) for greedy evaluation.

    The frugal preset keeps exploration up through the end: its decisive
    signal (the idle dividend) is tiny, and early-noise lock-in would
    otherwise freeze active habits that drain the fleet.
    """
    cfg = training_config(base, emphasis, miss_penalty)
    if epsilon_final is None:
        epsilon_final = 0.2 if emphasis == "frugal" else 0.02
    if policy is None:
        policy = QPolicy(epsilon=epsilon_start, alpha_lr=lr_start,
                         gamma=cfg.rl_gamma)
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=(cfg.seed, 0x77A1)))
    warmup = warmup_epochs * cfg.tau
    for ep in range(episodes):
        frac = ep / max(1, episodes - 1)
        policy.epsilon = epsilon_start + (epsilon_final - epsilon_start) * frac
        policy.alpha_lr = lr_start + (lr_final - lr_start) * frac
        trajs = []
        t_last = 0
        for j in range(intruders_per_episode):
            spawn = warmup + j * int(rng.integers(0, 4 * cfg.tau))
            traj = spawn_trajectory(cfg.layout, spawn, rng, traj_id=j,
                                    speed=cfg.intruder_speed)
            _, _, t_exit = crossing_times(traj, cfg.layout, cfg.tti_duration)
            t_last = max(t_last, t_exit)
            trajs.append(traj)
        horizon = t_last + margin_epochs * cfg.tau
        horizon += cfg.tau - horizon % cfg.tau  # end on an epoch boundary
        if emphasis == "reliability":
            # the bins evaluation visits: episodes are shorter than a
            # status period so the level stays near its starting bin
            init = float(rng.uniform(0.75, 1.0) * cfg.energy.c_max)
        elif rng.random() < 0.7:
            init = cfg.energy.c_max
        else:
            init = float(rng.uniform(0.3, 1.0) * cfg.energy.c_max)
        ep_cfg = replace(cfg, seed=cfg.seed + 1 + ep, trajectories=trajs,
                         horizon_ttis=horizon, initial_level=init,
                         snapshot_hours=())
        run(ep_cfg, policy=policy, learn=True)
    policy.epsilon = 0.0
    return policy
