"""Shaped braking reward.

Braking costs ``(alpha * rel_x**2 + beta) * decel``, so braking far from the
pedestrian is expensive and braking close is cheap. A collision costs
``eta * v**2 + lambda``, growing with impact speed so the agent still slows
down when a crash cannot be avoided.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["RewardParams", "reward"]


@dataclass(frozen=True)
class RewardParams:
    alpha: float = 0.001
    beta: float = 0.1
    eta: float = 0.01
    lam: float = 100.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.eta, self.lam) <= 0:
            raise ValueError("reward weights must all be strictly positive")

    @classmethod
    def from_config(cls, cfg) -> "RewardParams":
        return cls(cfg.reward_alpha, cfg.reward_beta, cfg.reward_eta, cfg.reward_lambda)


def reward(rel_x: float, v_prev: float, v_cur: float, bumped: bool,
           p: RewardParams = RewardParams()) -> float:
    """Reward for one step.

    ``rel_x`` is the true pedestrian-minus-vehicle distance at the start of the
    step; ``decel = v_prev - v_cur`` is non-negative since the vehicle never
    accelerates.
    """
    decel = v_prev - v_cur
    r = -(p.alpha * rel_x * rel_x + p.beta) * decel
    if bumped:
        r -= p.eta * v_cur * v_cur + p.lam
    return r
