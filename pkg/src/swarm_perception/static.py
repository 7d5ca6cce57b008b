"""Round-synchronous swarm over a fixed communication graph.

Motion is abstracted away: every observation is an ``f``-weighted coin flip
for the tile color followed by the noisy sensor. Robots take ``R`` readings,
then exchange ``(local estimate, confidence)`` with their graph neighbors.

:func:`step_observation` and :func:`communication_round` are the per-robot
form of the algorithm. :func:`run_static_trial` computes the same thing for
the whole swarm at once with numpy, consuming the per-robot random streams in
the same order.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from . import seeding
from .estimation import (
    DEFAULT_ALPHA_MAX,
    NEUTRAL,
    EstimatePair,
    ObservationTally,
    SensorAccuracy,
    fisher_confidence,
    fuse_arrays,
    fuse_social,
    informed_estimate,
    local_pair,
    mle_fill_ratio,
    sample_reading,
)
from .metrics import TrialRecord
from .topology import KINDS, TopologyGraph, build_topology


def _check_accuracy(accuracy, heterogeneous):
    if heterogeneous is not None:
        lo, hi = heterogeneous
        if not 0.5 < lo <= hi <= 1.0:
            raise ValueError(f"heterogeneous bounds must satisfy 0.5 < lo <= hi <= 1, got {heterogeneous}")
    elif not 0.5 < accuracy <= 1.0:
        raise ValueError(f"homogeneous accuracy must lie in (0.5, 1], got {accuracy}")


def draw_accuracies(seed: int, n_robots: int, accuracy: float,
                    heterogeneous: tuple[float, float] | None) -> tuple[np.ndarray, np.ndarray]:
    """Per-robot ``(b, w)``; heterogeneous robots get one uniform draw used for both."""
    if heterogeneous is None:
        b = np.full(n_robots, float(accuracy))
    else:
        lo, hi = heterogeneous
        b = np.array([g.uniform(lo, hi) for g in
                      seeding.robot_streams(seed, n_robots, seeding.ROBOT_ACCURACY)])
    return b, b.copy()


@dataclass(frozen=True)
class StaticTrialConfig:
    n_robots: int = 100
    fill_ratio: float = 0.55
    topology: str | TopologyGraph = "scale_free"
    scale_free_m: int = 2
    accuracy: float = 0.75
    heterogeneous: tuple[float, float] | None = None
    rounds: int = 1000
    observations_per_round: int = 10
    seed: int = 0
    per_step: bool = False
    alpha_max: float = DEFAULT_ALPHA_MAX
    delta: float = 0.01
    bins: int = 10

    def __post_init__(self):
        if self.n_robots < 1:
            raise ValueError("need at least one robot")
        if not 0.0 <= self.fill_ratio <= 1.0:
            raise ValueError(f"fill ratio {self.fill_ratio} outside [0, 1]")
        if isinstance(self.topology, TopologyGraph):
            if self.topology.n_nodes != self.n_robots:
                raise ValueError("custom topology size does not match n_robots")
        elif self.topology not in KINDS:
            raise ValueError(f"unknown topology {self.topology!r}")
        _check_accuracy(self.accuracy, self.heterogeneous)
        if self.rounds < 1 or self.observations_per_round < 1:
            raise ValueError("rounds and observations_per_round must be positive")
        if self.alpha_max <= 0 or self.delta <= 0 or self.bins < 1:
            raise ValueError("alpha_max, delta and bins must be positive")

    @property
    def total_steps(self) -> int:
        return self.rounds * self.observations_per_round

    def snapshot(self) -> dict:
        d = asdict(self)
        if isinstance(self.topology, TopologyGraph):
            d["topology"] = {"nodes": self.topology.n_nodes, "edges": self.topology.edges()}
        if self.heterogeneous is not None:
            d["heterogeneous"] = list(self.heterogeneous)
        d["mode"] = "static"
        return d


@dataclass(slots=True)
class RobotState:
    """The constant-size state one robot carries between steps."""

    accuracy: SensorAccuracy
    tally: ObservationTally
    local: EstimatePair
    social: EstimatePair
    informed: EstimatePair

    @classmethod
    def initial(cls, accuracy: SensorAccuracy) -> "RobotState":
        return cls(accuracy, ObservationTally(), NEUTRAL, NEUTRAL, NEUTRAL)


def step_observation(state: RobotState, f: float, rng: np.random.Generator,
                     alpha_max: float = DEFAULT_ALPHA_MAX) -> RobotState:
    """One tile encounter: color draw, sensor draw, tally and local re-estimation.

    The informed estimate is refreshed against the robot's current (possibly
    stale) social estimate.
    """
    black = bool(rng.random() < f)
    reading = sample_reading(black, state.accuracy, rng)
    tally = state.tally.record(reading)
    local = local_pair(tally, state.accuracy, alpha_max)
    return replace(state, tally=tally, local=local, informed=informed_estimate(local, state.social))


def communication_round(states: Sequence[RobotState], g: TopologyGraph) -> list[RobotState]:
    """Synchronous exchange: every robot fuses its neighbors' pre-round local estimates."""
    out = []
    for i, s in enumerate(states):
        nbrs = g.neighbors(i)
        social = s.social
        if nbrs:
            social = fuse_social(states[j].local for j in sorted(nbrs))
        out.append(replace(s, social=social, informed=informed_estimate(s.local, social)))
    return out


def _fuse_arrays(local, alpha, adjacency):
    """Social and informed values for every sample row given a fixed adjacency."""
    beta = alpha @ adjacency.T
    weighted = (alpha * local) @ adjacency.T
    with np.errstate(divide="ignore", invalid="ignore"):
        social = np.where(beta > 0, weighted / beta, 0.0)
    social = np.clip(social, 0.0, 1.0)
    return social, beta, fuse_arrays(local, alpha, social, beta)


def run_static_trial(cfg: StaticTrialConfig) -> TrialRecord:
    """Run ``C`` rounds of ``R`` observations followed by one exchange.

    With ``cfg.per_step`` the record holds every time step, mixing the fresh
    local estimate with the social estimate of the last completed round;
    otherwise it holds one sample per communication round.
    """
    n_rob, f = cfg.n_robots, cfg.fill_ratio
    R = cfg.observations_per_round
    T = cfg.total_steps
    if isinstance(cfg.topology, TopologyGraph):
        graph = cfg.topology
    else:
        graph = build_topology(cfg.topology, n_rob, cfg.scale_free_m,
                               seeding.stream(cfg.seed, seeding.TOPOLOGY))
    b, w = draw_accuracies(cfg.seed, n_rob, cfg.accuracy, cfg.heterogeneous)

    readings = np.empty((T, n_rob), dtype=np.int64)
    for i, g in enumerate(seeding.robot_streams(cfg.seed, n_rob)):
        u = g.random((T, 2))
        black = u[:, 0] < f
        readings[:, i] = np.where(black, u[:, 1] < b[i], u[:, 1] < 1.0 - w[i])
    n_all = np.cumsum(readings, axis=0)
    t_all = np.arange(1, T + 1)[:, None] * np.ones(n_rob, dtype=np.int64)

    ends = np.arange(R - 1, T, R)
    n_rnd, t_rnd = n_all[ends], t_all[ends]
    local_rnd = mle_fill_ratio(n_rnd, t_rnd, b, w)
    alpha_rnd = fisher_confidence(n_rnd, t_rnd, b, w, cfg.alpha_max)
    adjacency = graph.adjacency_matrix()
    social_rnd, beta_rnd, informed_rnd = _fuse_arrays(local_rnd, alpha_rnd, adjacency)
    # isolated robots keep the neutral social pair they start with
    if not cfg.per_step:
        return TrialRecord(cfg.snapshot(), b, w, n_rnd, t_rnd, local_rnd, alpha_rnd,
                           social_rnd, beta_rnd, informed_rnd)

    local = mle_fill_ratio(n_all, t_all, b, w)
    alpha = fisher_confidence(n_all, t_all, b, w, cfg.alpha_max)
    # step s sees the social pair of the last exchange at or before it
    last_round = (np.arange(T) + 1) // R - 1
    social = np.zeros((T, n_rob))
    beta = np.zeros((T, n_rob))
    has = last_round >= 0
    social[has] = social_rnd[last_round[has]]
    beta[has] = beta_rnd[last_round[has]]
    informed = fuse_arrays(local, alpha, social, beta)
    return TrialRecord(cfg.snapshot(), b, w, n_all, t_all, local, alpha, social, beta, informed)


def run_reference_trial(cfg: StaticTrialConfig) -> list[list[RobotState]]:
    """Robot-by-robot execution of the same trial; returns states after every round.

    Slow; exists to cross-check :func:`run_static_trial`.
    """
    if isinstance(cfg.topology, TopologyGraph):
        graph = cfg.topology
    else:
        graph = build_topology(cfg.topology, cfg.n_robots, cfg.scale_free_m,
                               seeding.stream(cfg.seed, seeding.TOPOLOGY))
    b, w = draw_accuracies(cfg.seed, cfg.n_robots, cfg.accuracy, cfg.heterogeneous)
    rngs = seeding.robot_streams(cfg.seed, cfg.n_robots)
    states = [RobotState.initial(SensorAccuracy(float(b[i]), float(w[i]))) for i in range(cfg.n_robots)]
    history = []
    for _ in range(cfg.rounds):
        for _ in range(cfg.observations_per_round):
            states = [step_observation(s, cfg.fill_ratio, rngs[i], cfg.alpha_max)
                      for i, s in enumerate(states)]
        states = communication_round(states, graph)
        history.append(states)
    return history
