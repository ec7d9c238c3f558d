"""Autonomous emergency braking learned with a deep Q-network."""

from .config import Config, ConfigError, parse_config
from .env import Action, BrakingEnv, EpisodeEvent, Scenario, ScenarioParams, Side
from .trainer import GreedyPolicy, train

__version__ = "0.1.0"
