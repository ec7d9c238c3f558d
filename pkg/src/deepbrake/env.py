"""Fixed-step simulation of a braking vehicle approaching a pedestrian.

The vehicle drives along +x in the lane centred on y = 0. The pedestrian
stands beside the road at ``x = detection_horizon * v_init`` and, in the
crossing scenario, starts walking to the opposite curb once the vehicle
passes the trigger point ``(detection_horizon - ttc) * v_init``.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .config import Config, ConfigError
from .reward import RewardParams, reward

__all__ = [
    "Action", "Side", "Scenario", "PedestrianMode", "EpisodeEvent",
    "VehicleState", "PedestrianState", "ScenarioParams", "EpisodeFinished",
    "BrakingEnv", "update_vehicle", "update_pedestrian", "classify_event",
    "HISTORY", "OBS_SIZE",
]

HISTORY = 5
OBS_SIZE = 3 * HISTORY
_V_REST = 1e-9  # m/s; float residue below this counts as standing still


class Action(enum.IntEnum):
    """Brake commands, strongest first; tie-breaking favours lower indices."""
    HIGH = 0
    MID = 1
    LOW = 2
    NOTHING = 3


class Side(enum.Enum):
    NEAR = "near"
    FAR = "far"


class Scenario(enum.Enum):
    CROSS = "cross"
    STAY = "stay"


class PedestrianMode(enum.Enum):
    NOBODY = "nobody"
    STAY = "stay"
    CROSS = "cross"
    CROSSED = "crossed"


class EpisodeEvent(enum.Enum):
    STOP = "Stop"
    BUMP = "Bump"
    PASS = "Pass"
    CROSS = "Cross"


class EpisodeFinished(RuntimeError):
    """Raised when stepping an episode that has already terminated."""


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    v: float


@dataclass(frozen=True)
class PedestrianState:
    x: float
    y: float
    v_ped: float
    mode: PedestrianMode
    side: Side


@dataclass(frozen=True)
class ScenarioParams:
    v_init: float
    ttc: float
    side: Side
    scenario: Scenario
    v_ped: float
    ped_x: float
    p_trig: float
    l: float
    dt: float
    curb: float = 3.5
    ped_y0: float | None = None   # lateral start; defaults to the curb on `side`

    @classmethod
    def build(cls, cfg: Config, v_init, ttc, side=Side.NEAR, scenario=Scenario.CROSS,
              v_ped=None, ped_y0=None) -> "ScenarioParams":
        if v_ped is None:
            v_ped = 0.5 * (cfg.v_ped_min + cfg.v_ped_max)
        return cls(
            v_init=float(v_init), ttc=float(ttc), side=Side(side),
            scenario=Scenario(scenario), v_ped=float(v_ped),
            ped_x=cfg.detection_horizon * v_init,
            p_trig=(cfg.detection_horizon - ttc) * v_init,
            l=cfg.safety_line, dt=cfg.dt, curb=cfg.curb_offset, ped_y0=ped_y0,
        )

    def validate(self):
        if not (self.v_init > 0 and np.isfinite(self.v_init)):
            raise ConfigError(f"v_init must be positive and finite, got {self.v_init}")
        if self.v_ped <= 0:
            raise ConfigError(f"v_ped must be positive, got {self.v_ped}")
        if self.dt <= 0 or self.l < 0 or self.curb <= 0:
            raise ConfigError("dt > 0, l >= 0 and curb > 0 required")
        if self.ped_x <= 0:
            raise ConfigError("pedestrian must start ahead of the vehicle")

    @property
    def start_y(self) -> float:
        if self.ped_y0 is not None:
            return self.ped_y0
        return -self.curb if self.side is Side.NEAR else self.curb

    @property
    def target_y(self) -> float:
        """Curb opposite the pedestrian's starting side."""
        return self.curb if self.side is Side.NEAR else -self.curb


def update_vehicle(s: VehicleState, accel: float, dt: float) -> VehicleState:
    """Advance under constant acceleration; speed clamps at zero.

    When the vehicle comes to rest inside the step, the travelled distance is
    the exact stopping distance ``v**2 / (2 |a|)``.
    """
    v_next = s.v + accel * dt
    if v_next > _V_REST:
        dx = 0.5 * (s.v + v_next) * dt
    elif accel < 0:
        v_next = 0.0
        dx = s.v * s.v / (-2.0 * accel)
    else:
        v_next, dx = 0.0, 0.0
    return VehicleState(s.x + dx, s.y, v_next)


def update_pedestrian(p: PedestrianState, veh: VehicleState,
                      params: ScenarioParams) -> PedestrianState:
    """Trigger and move the pedestrian for one step.

    The pedestrian starts walking on the step in which the vehicle reaches the
    trigger point and covers ``v_ped * dt`` on that same step.
    """
    if p.mode is PedestrianMode.STAY:
        if params.scenario is not Scenario.CROSS or veh.x < params.p_trig:
            return p
        p = replace(p, mode=PedestrianMode.CROSS)
    if p.mode is PedestrianMode.CROSS:
        target = params.target_y
        direction = 1.0 if target > p.y else -1.0
        y = p.y + direction * p.v_ped * params.dt
        if (y - target) * direction >= 0:
            return replace(p, y=target, mode=PedestrianMode.CROSSED)
        return replace(p, y=y)
    return p


def classify_event(veh: VehicleState, ped: PedestrianState,
                   params: ScenarioParams) -> EpisodeEvent | None:
    """Terminal event for the post-step state; Bump > Stop > Cross > Pass."""
    if ped.mode is PedestrianMode.CROSS and veh.x >= ped.x - params.l:
        return EpisodeEvent.BUMP
    if veh.v == 0:
        return EpisodeEvent.STOP
    if ped.mode is PedestrianMode.CROSSED:
        return EpisodeEvent.CROSS
    if veh.x > ped.x:
        return EpisodeEvent.PASS
    return None


class BrakingEnv:
    """One episode at a time; state is mutated in place by :meth:`step`.

    Each instance owns its noise generator, so instances can run side by
    side without sharing state.
    """

    def __init__(self, cfg: Config | None = None):
        self.cfg = cfg or Config()
        self.accels = self.cfg.brake_accels
        self.reward_params = RewardParams.from_config(self.cfg)
        self._scale = np.array([self.cfg.norm_speed, self.cfg.norm_rel_x,
                                self.cfg.norm_rel_y])
        self.params = None
        self.vehicle = None
        self.pedestrian = None
        self.history = deque(maxlen=HISTORY)
        self.steps = 0
        self.done = True
        self.truncated = False
        self.event = None

    def reset(self, params: ScenarioParams, rng: np.random.Generator,
              sensor_noise: float | None = None) -> np.ndarray:
        params.validate()
        self.params = params
        self.rng = rng
        self.sigma = self.cfg.sensor_noise if sensor_noise is None else sensor_noise
        self.vehicle = VehicleState(0.0, 0.0, params.v_init)
        self.pedestrian = PedestrianState(params.ped_x, params.start_y, params.v_ped,
                                          PedestrianMode.STAY, params.side)
        self.history.clear()
        self.steps = 0
        self.done = False
        self.truncated = False
        self.event = None
        frame = self._frame()
        for _ in range(HISTORY):
            self.history.append(frame)
        return self.observation()

    def _frame(self) -> np.ndarray:
        veh, ped = self.vehicle, self.pedestrian
        frame = np.array([veh.v, ped.x - veh.x, ped.y - veh.y])
        if self.sigma > 0:
            frame[1:] += self.rng.normal(0.0, self.sigma, size=2)
        return frame

    def observe(self) -> np.ndarray:
        """Push a fresh sensor frame and return the stacked observation."""
        self.history.append(self._frame())
        return self.observation()

    def observation(self) -> np.ndarray:
        return (np.stack(self.history) / self._scale).ravel()

    def step(self, action) -> tuple[np.ndarray, float, EpisodeEvent | None]:
        if self.done:
            raise EpisodeFinished("episode already terminated; call reset()")
        action = Action(action)
        veh0 = self.vehicle
        rel_x = self.pedestrian.x - veh0.x
        self.vehicle = update_vehicle(veh0, self.accels[action], self.params.dt)
        self.pedestrian = update_pedestrian(self.pedestrian, self.vehicle, self.params)
        event = classify_event(self.vehicle, self.pedestrian, self.params)
        r = reward(rel_x, veh0.v, self.vehicle.v, event is EpisodeEvent.BUMP,
                   self.reward_params)
        self.steps += 1
        self.event = event
        if event is not None:
            self.done = True
        elif self.steps >= self.cfg.max_steps:
            self.done = True
            self.truncated = True
        return self.observe(), r, event

    @property
    def gap(self) -> float:
        """Longitudinal distance from the vehicle to the pedestrian."""
        return self.pedestrian.x - self.vehicle.x
