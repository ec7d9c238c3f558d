"""Run configuration: every tunable constant of the simulator, reward, network
and agent, with a flat ``key = value`` text format.

Defaults reproduce the published simulation setup and DQN configuration.
Values that the original setup leaves open are marked ``# chosen``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

__all__ = ["Config", "ConfigError", "parse_config", "format_config", "load_config"]


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values and violated constraints."""


@dataclass(frozen=True)
class Config:
    # -- scenario sampling ----------------------------------------------------
    v_init_min: float = 2.78          # m/s, 10 km/h
    v_init_max: float = 16.67         # m/s, 60 km/h
    v_ped_min: float = 2.0            # m/s
    v_ped_max: float = 4.0            # m/s
    ttc_min: float = 1.5              # s
    ttc_max: float = 4.0              # s
    cross_probability: float = 0.5    # Scenario 1 (cross) vs Scenario 2 (stay)
    far_side_probability: float = 0.5
    detection_horizon: float = 5.0    # s; pedestrian placed at horizon * v_init

    # -- simulator ------------------------------------------------------------
    safety_line: float = 3.0          # m
    dt: float = 0.1                   # s
    accel_high: float = -9.8          # m/s^2
    accel_mid: float = -5.9
    accel_low: float = -2.9
    curb_offset: float = 3.5          # m, chosen: 7 m two-lane road
    sensor_noise: float = 0.1         # m, chosen
    max_steps: int = 600              # chosen safety net, never an event
    norm_speed: float = 16.67         # chosen observation scales
    norm_rel_x: float = 100.0
    norm_rel_y: float = 10.0

    # -- reward ---------------------------------------------------------------
    reward_alpha: float = 0.001
    reward_beta: float = 0.1
    reward_eta: float = 0.01
    reward_lambda: float = 100.0

    # -- network / optimizer --------------------------------------------------
    hidden_sizes: tuple[int, ...] = (100, 70, 50, 70, 100)
    leaky_slope: float = 0.01         # chosen
    learning_rate: float = 0.0005
    rmsprop_decay: float = 0.9        # chosen
    rmsprop_eps: float = 1e-8         # chosen

    # -- agent ----------------------------------------------------------------
    replay_capacity: int = 10_000
    trauma_capacity: int = 1_000
    replay_batch: int = 32
    trauma_batch: int = 10
    gamma: float = 0.99               # chosen
    epsilon_start: float = 1.0        # chosen
    epsilon_end: float = 0.05         # chosen
    epsilon_decay_episodes: int = 1500  # chosen
    target_sync: int = 500            # training steps, chosen
    min_replay: int = 500             # chosen
    updates_per_step: int = 1         # chosen
    trauma: bool = True

    # -- run ------------------------------------------------------------------
    episodes: int = 3000
    seed: int = 15                    # documented acceptance seed

    def __post_init__(self):
        def require(ok, constraint):
            if not ok:
                raise ConfigError(f"constraint violated: {constraint}")

        require(0 < self.v_init_min <= self.v_init_max, "0 < v_init_min <= v_init_max")
        require(0 < self.v_ped_min <= self.v_ped_max, "0 < v_ped_min <= v_ped_max")
        require(0 < self.ttc_min <= self.ttc_max, "0 < ttc_min <= ttc_max")
        require(self.ttc_max < self.detection_horizon, "ttc_max < detection_horizon")
        require(0 <= self.cross_probability <= 1, "0 <= cross_probability <= 1")
        require(0 <= self.far_side_probability <= 1, "0 <= far_side_probability <= 1")
        require(self.safety_line >= 0, "safety_line >= 0")
        require(self.dt > 0, "dt > 0")
        require(self.accel_high < 0 and self.accel_mid < 0 and self.accel_low < 0,
                "brake accelerations < 0")
        require(self.curb_offset > 0, "curb_offset > 0")
        require(self.sensor_noise >= 0, "sensor_noise >= 0")
        require(self.max_steps > 0, "max_steps > 0")
        require(min(self.norm_speed, self.norm_rel_x, self.norm_rel_y) > 0,
                "normalization scales > 0")
        require(min(self.reward_alpha, self.reward_beta, self.reward_eta,
                    self.reward_lambda) > 0, "reward weights > 0")
        require(len(self.hidden_sizes) > 0 and all(h > 0 for h in self.hidden_sizes),
                "hidden_sizes non-empty and positive")
        require(0 <= self.leaky_slope < 1, "0 <= leaky_slope < 1")
        require(self.learning_rate > 0, "learning_rate > 0")
        require(0 <= self.rmsprop_decay < 1, "0 <= rmsprop_decay < 1")
        require(self.rmsprop_eps > 0, "rmsprop_eps > 0")
        require(self.replay_capacity > 0 and self.trauma_capacity > 0, "capacities > 0")
        require(0 < self.replay_batch <= self.replay_capacity,
                "0 < replay_batch <= replay_capacity")
        require(0 <= self.trauma_batch <= self.trauma_capacity,
                "0 <= trauma_batch <= trauma_capacity")
        require(0 < self.gamma < 1, "0 < gamma < 1")
        require(0 <= self.epsilon_end <= self.epsilon_start <= 1,
                "0 <= epsilon_end <= epsilon_start <= 1")
        require(self.epsilon_decay_episodes >= 0, "epsilon_decay_episodes >= 0")
        require(self.target_sync > 0, "target_sync > 0")
        require(self.replay_batch <= self.min_replay <= self.replay_capacity,
                "replay_batch <= min_replay <= replay_capacity")
        require(self.updates_per_step >= 1, "updates_per_step >= 1")
        require(self.episodes >= 0, "episodes >= 0")
        require(self.seed >= 0, "seed >= 0")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (15, *self.hidden_sizes, 4)

    @property
    def brake_accels(self) -> tuple[float, float, float, float]:
        """Accelerations indexed by :class:`deepbrake.env.Action`."""
        return (self.accel_high, self.accel_mid, self.accel_low, 0.0)

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in fields(Config)}


def _convert(key, raw):
    kind = _FIELDS[key].type
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw.replace("_", ""))
        if kind == "float":
            return float(raw)
        if kind.startswith("tuple"):
            parts = [p for p in raw.strip("[]() ").split(",") if p.strip()]
            return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r} (expected {kind})") from None
    raise AssertionError(f"unhandled field type {kind}")


def parse_config(text: str, base: Config | None = None) -> Config:
    """Parse a flat ``key = value`` document; missing keys keep their defaults.

    ``#`` starts a comment. Unknown or repeated keys are rejected.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip().strip('"')
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r} (line {lineno})")
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (line {lineno})")
        values[key] = _convert(key, raw)
    return dataclasses.replace(base or Config(), **values)


def format_config(cfg: Config) -> str:
    """Render every field; ``parse_config(format_config(c)) == c`` exactly."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ", ".join(str(v) for v in value)
        else:
            text = repr(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
