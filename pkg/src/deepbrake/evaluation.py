"""Evaluation of a braking policy: TTC collision sweep, stopping gaps,
stay-scenario liveness, trajectory traces and a simplified Euro NCAP
pedestrian AEB harness (CVFA / CVNA).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .env import Action, BrakingEnv, EpisodeEvent, PedestrianMode, Scenario, ScenarioParams, Side
from .trainer import run_episode, sample_scenario

__all__ = [
    "SweepResult", "NcapCase", "GapStats", "LivenessResult", "TABLE1_TTCS",
    "NCAP_SPEEDS_KMH", "NCAP_POINTS", "NCAP_PED_SPEED_KMH",
    "min_brake_feasible", "infeasible_fraction", "ttc_sweep", "trace_episode",
    "stopping_gap_stats", "stay_liveness", "ncap_params", "ncap_run", "ncap_score",
    "ncap_suite",
]

TABLE1_TTCS = tuple(round(0.9 + 0.2 * k, 1) for k in range(16))
NCAP_SPEEDS_KMH = (20, 25, 30, 35, 40, 45, 50, 55, 60)
NCAP_POINTS = dict(zip(NCAP_SPEEDS_KMH, (1, 2, 2, 3, 3, 3, 2, 1, 1)))
NCAP_PED_SPEED_KMH = {"CVFA": 8.0, "CVNA": 5.0}
NCAP_TTC = 4.0


def kmh(v: float) -> float:
    return v / 3.6


@dataclass
class SweepResult:
    ttc: float
    trials: int
    collisions: int
    rate: float
    infeasible: int = 0          # trials that full braking at the trigger cannot save
    outcomes: dict = field(default_factory=dict)

    def row(self) -> dict:
        row = {"ttc": self.ttc, "trials": self.trials, "collisions": self.collisions,
               "rate_pct": round(100.0 * self.rate, 4), "infeasible": self.infeasible}
        for ev in EpisodeEvent:
            row[ev.value.lower()] = self.outcomes.get(ev.value, 0)
        row["timeout"] = self.outcomes.get("Timeout", 0)
        return row


def min_brake_feasible(v: float, ttc: float, l: float = 3.0, a_max: float = 9.8) -> bool:
    """True iff full braking from the trigger instant stops short of the safety line.

    At the trigger the vehicle is ``ttc * v`` from the pedestrian.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    return ttc * v >= v * v / (2.0 * a_max) + l


def infeasible_fraction(ttc: float, cfg: Config, rng: np.random.Generator,
                        draws: int = 100_000) -> float:
    """Monte-Carlo fraction of training-distribution speeds that cannot be saved."""
    v = rng.uniform(cfg.v_init_min, cfg.v_init_max, size=draws)
    ok = ttc * v >= v * v / (2.0 * -cfg.accel_high) + cfg.safety_line
    return float(np.mean(~ok))


def ttc_sweep(policy, ttc_values, trials: int, cfg: Config,
              rng: np.random.Generator) -> list[SweepResult]:
    """Crossing-scenario collision rate at each fixed TTC.

    Speed, pedestrian speed and side follow the training distribution; one
    stream serves scenario draws and sensor noise, in TTC order.
    """
    env = BrakingEnv(cfg)
    results = []
    for ttc in ttc_values:
        counts = Counter()
        infeasible = 0
        for _ in range(trials):
            params = sample_scenario(cfg, rng, ttc=ttc, scenario=Scenario.CROSS)
            infeasible += not min_brake_feasible(params.v_init, ttc, cfg.safety_line,
                                                 -cfg.accel_high)
            counts[run_episode(env, params, rng, policy=policy).outcome] += 1
        bumps = counts.get(EpisodeEvent.BUMP.value, 0)
        results.append(SweepResult(float(ttc), trials, bumps, bumps / trials,
                                   infeasible, dict(counts)))
    return results


def trace_episode(policy, params: ScenarioParams, cfg: Config,
                  rng: np.random.Generator | None = None,
                  sensor_noise: float | None = 0.0) -> list[dict]:
    """Per-step trajectory rows every ``dt``, starting with the initial state."""
    rows = [{"t": 0.0, "veh_x": 0.0, "ped_x": params.ped_x, "ped_y": params.start_y,
             "v": params.v_init, "action": "", "accel": "", "reward": 0.0,
             "ped_mode": PedestrianMode.STAY.value, "event": ""}]

    def record(env, action, r):
        rows.append({
            "t": round(env.steps * params.dt, 10), "veh_x": env.vehicle.x,
            "ped_x": env.pedestrian.x, "ped_y": env.pedestrian.y, "v": env.vehicle.v,
            "action": Action(action).name, "accel": cfg.brake_accels[action],
            "reward": r, "ped_mode": env.pedestrian.mode.value,
            "event": env.event.value if env.event else "",
        })

    rng = rng if rng is not None else np.random.default_rng(0)
    run_episode(BrakingEnv(cfg), params, rng, policy=policy, sensor_noise=sensor_noise,
                on_step=record)
    return rows


@dataclass
class GapStats:
    gaps: np.ndarray             # final vehicle-to-pedestrian gap of every Stop episode
    crossing_gaps: np.ndarray    # subset where the pedestrian was still crossing
    episodes: int
    outcomes: dict

    @property
    def summary(self) -> dict:
        if len(self.gaps) == 0:
            return {"stops": 0, "episodes": self.episodes}
        return {"stops": len(self.gaps), "episodes": self.episodes,
                "min": float(self.gaps.min()), "median": float(np.median(self.gaps)),
                "max": float(self.gaps.max())}

    def histogram(self, bin_width: float = 1.0):
        if len(self.gaps) == 0:
            return np.zeros(0, dtype=int), np.zeros(1)
        edges = np.arange(0.0, np.ceil(self.gaps.max() / bin_width) * bin_width
                          + bin_width, bin_width)
        return np.histogram(self.gaps, bins=edges)


def stopping_gap_stats(policy, trials: int, cfg: Config, rng: np.random.Generator,
                       ttc: float | None = None) -> GapStats:
    """Gaps left by crossing-scenario episodes that end in Stop."""
    env = BrakingEnv(cfg)
    gaps, crossing, counts = [], [], Counter()
    for _ in range(trials):
        params = sample_scenario(cfg, rng, ttc=ttc, scenario=Scenario.CROSS)
        ep = run_episode(env, params, rng, policy=policy)
        counts[ep.outcome] += 1
        if ep.outcome == EpisodeEvent.STOP.value:
            gaps.append(ep.final_gap)
            if env.pedestrian.mode is PedestrianMode.CROSS:
                crossing.append(ep.final_gap)
    return GapStats(np.array(gaps), np.array(crossing), trials, dict(counts))


@dataclass
class LivenessResult:
    episodes: int
    passes: int
    full_stops: int
    outcomes: dict

    @property
    def pass_rate(self) -> float:
        return self.passes / self.episodes


def stay_liveness(policy, trials: int, cfg: Config,
                  rng: np.random.Generator) -> LivenessResult:
    """Stay-scenario episodes: how many pass without ever stopping."""
    env = BrakingEnv(cfg)
    counts = Counter()
    for _ in range(trials):
        params = sample_scenario(cfg, rng, scenario=Scenario.STAY)
        counts[run_episode(env, params, rng, policy=policy).outcome] += 1
    return LivenessResult(trials, counts.get(EpisodeEvent.PASS.value, 0),
                          counts.get(EpisodeEvent.STOP.value, 0), dict(counts))


# -- Euro NCAP pedestrian AEB (simplified) -------------------------------------

@dataclass
class NcapCase:
    test: str
    v_test_kmh: float
    collided: bool
    v_impact: float
    points_available: float
    points_awarded: float
    outcome: str
    final_gap: float

    def row(self) -> dict:
        return {"test": self.test, "v_test_kmh": self.v_test_kmh,
                "collided": self.collided, "v_impact": self.v_impact,
                "outcome": self.outcome, "final_gap": self.final_gap,
                "points_available": self.points_available,
                "points_awarded": self.points_awarded}


def ncap_params(test: str, v_test_kmh: float, cfg: Config) -> ScenarioParams:
    """Crossing scenario timed so an unbraked vehicle meets the pedestrian.

    The pedestrian starts ``v_ped * ttc`` from the lane centre, so it reaches
    the vehicle's path exactly when an unbraked vehicle reaches it. CVFA
    runs in from the far side, CVNA walks in from the near side.
    """
    if test not in NCAP_PED_SPEED_KMH:
        raise ValueError(f"unknown NCAP test {test!r}")
    v_ped = kmh(NCAP_PED_SPEED_KMH[test])
    side = Side.FAR if test == "CVFA" else Side.NEAR
    y0 = v_ped * NCAP_TTC * (1.0 if side is Side.FAR else -1.0)
    return ScenarioParams.build(cfg, kmh(v_test_kmh), NCAP_TTC, side, Scenario.CROSS,
                                v_ped, ped_y0=y0)


def ncap_score(case: NcapCase) -> float:
    """Full points if avoided, else the fraction of speed shed before impact."""
    if case.v_test_kmh not in NCAP_POINTS:
        raise ValueError(f"{case.v_test_kmh} km/h is not an NCAP test speed")
    available = NCAP_POINTS[case.v_test_kmh]
    if not case.collided:
        return float(available)
    return available * max(0.0, 1.0 - case.v_impact / kmh(case.v_test_kmh))


def ncap_run(policy, test: str, v_test_kmh: float, cfg: Config) -> NcapCase:
    """One deterministic noise-free NCAP run."""
    if v_test_kmh not in NCAP_POINTS:
        raise ValueError(f"{v_test_kmh} km/h is not an NCAP test speed")
    env = BrakingEnv(cfg)
    params = ncap_params(test, v_test_kmh, cfg)
    ep = run_episode(env, params, np.random.default_rng(0), policy=policy, sensor_noise=0.0)
    collided = ep.outcome == EpisodeEvent.BUMP.value
    case = NcapCase(test, v_test_kmh, collided, env.vehicle.v if collided else 0.0,
                    float(NCAP_POINTS[v_test_kmh]), 0.0, ep.outcome, ep.final_gap)
    case.points_awarded = ncap_score(case)
    return case


def ncap_suite(policy, cfg: Config) -> list[NcapCase]:
    return [ncap_run(policy, test, v, cfg) for test in ("CVFA", "CVNA")
            for v in NCAP_SPEEDS_KMH]
