"""Episode loop, scenario sampling and the training driver."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .config import Config
from .dqn import DQNAgent, Transition, epsilon_at
from .env import Action, BrakingEnv, EpisodeEvent, Scenario, ScenarioParams, Side
from .net import QNetworkParams, forward

__all__ = [
    "EpisodeLog", "GreedyPolicy", "ConstantPolicy", "sample_scenario",
    "run_episode", "train", "TrainResult", "moving_average",
]

log = logging.getLogger(__name__)


@dataclass
class EpisodeLog:
    index: int
    outcome: str            # Stop / Bump / Pass / Cross, or "Timeout" if the cap was hit
    ret: float              # undiscounted return
    discounted_ret: float
    steps: int
    v_init: float
    ttc: float
    scenario: str
    side: str
    final_gap: float
    epsilon: float
    truncated: bool = False

    def row(self) -> dict:
        return asdict(self)


class GreedyPolicy:
    """Argmax-Q policy over frozen parameters; safe to share read-only."""

    def __init__(self, params: QNetworkParams, slope: float = 0.01):
        self.params = params
        self.slope = slope

    def __call__(self, obs) -> Action:
        return Action(int(np.argmax(forward(self.params, obs, self.slope))))


class ConstantPolicy:
    def __init__(self, action):
        self.action = Action(action)

    def __call__(self, obs) -> Action:
        return self.action


def sample_scenario(cfg: Config, rng: np.random.Generator, ttc: float | None = None,
                    scenario: Scenario | None = None) -> ScenarioParams:
    """Draw one training scenario; ``ttc``/``scenario`` pin a draw for evaluation.

    Draw order is fixed (v_init, v_ped, ttc, side, scenario) so pinning a
    value does not shift the random stream of the others.
    """
    v_init = rng.uniform(cfg.v_init_min, cfg.v_init_max)
    v_ped = rng.uniform(cfg.v_ped_min, cfg.v_ped_max)
    ttc_draw = rng.uniform(cfg.ttc_min, cfg.ttc_max)
    side = Side.FAR if rng.random() < cfg.far_side_probability else Side.NEAR
    scen = Scenario.CROSS if rng.random() < cfg.cross_probability else Scenario.STAY
    return ScenarioParams.build(
        cfg, v_init, ttc_draw if ttc is None else ttc, side,
        scen if scenario is None else scenario, v_ped)


def run_episode(env: BrakingEnv, params: ScenarioParams, rng: np.random.Generator,
                agent: DQNAgent | None = None, policy=None, epsilon: float = 0.0,
                index: int = 0, sensor_noise: float | None = None,
                on_step=None) -> EpisodeLog:
    """Play one episode.

    With ``agent`` set this is a training episode: epsilon-greedy actions,
    one transition stored and one learning step attempted per env step.
    Otherwise ``policy`` (obs -> Action) acts greedily and nothing is stored.
    ``on_step(env, action, reward)`` is called after every step.
    """
    if (agent is None) == (policy is None):
        raise ValueError("pass exactly one of agent or policy")
    obs = env.reset(params, rng, sensor_noise)
    ret = disc = 0.0
    discount = 1.0
    gamma = env.cfg.gamma
    while not env.done:
        a = agent.act(obs, epsilon) if agent is not None else policy(obs)
        obs_next, r, event = env.step(a)
        if agent is not None:
            agent.remember(Transition(obs, int(a), r, obs_next, event is not None,
                                      event is EpisodeEvent.BUMP))
            for _ in range(agent.cfg.updates_per_step):
                agent.learn()
        if on_step is not None:
            on_step(env, a, r)
        ret += r
        disc += discount * r
        discount *= gamma
        obs = obs_next
    if env.truncated:
        log.warning("episode %d hit the %d-step cap", index, env.cfg.max_steps)
    return EpisodeLog(
        index=index,
        outcome=env.event.value if env.event is not None else "Timeout",
        ret=ret, discounted_ret=disc, steps=env.steps, v_init=params.v_init,
        ttc=params.ttc, scenario=params.scenario.value, side=params.side.value,
        final_gap=env.gap, epsilon=epsilon, truncated=env.truncated,
    )


@dataclass
class TrainResult:
    agent: DQNAgent
    logs: list[EpisodeLog]

    @property
    def params(self) -> QNetworkParams:
        return self.agent.net


def train(cfg: Config, progress=None) -> TrainResult:
    """Run ``cfg.episodes`` training episodes from ``cfg.seed``.

    Independent generators drive scenario draws, sensor noise, exploration,
    batch sampling and initialization, all spawned from the seed.
    """
    root = np.random.default_rng(cfg.seed)
    scen_rng, noise_rng, agent_rng = root.spawn(3)
    agent = DQNAgent(cfg, agent_rng)
    env = BrakingEnv(cfg)
    logs = []
    for k in range(cfg.episodes):
        params = sample_scenario(cfg, scen_rng)
        ep = run_episode(env, params, noise_rng, agent=agent,
                         epsilon=epsilon_at(k, cfg), index=k)
        logs.append(ep)
        if progress is not None:
            progress(ep, agent)
    return TrainResult(agent, logs)


def moving_average(values, window: int = 200) -> np.ndarray:
    """Trailing mean; the first ``window - 1`` entries average what is available."""
    values = np.asarray(values, dtype=np.float64)
    csum = np.cumsum(np.insert(values, 0, 0.0))
    idx = np.arange(1, len(values) + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)
