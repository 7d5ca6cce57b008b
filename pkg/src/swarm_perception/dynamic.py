"""Robots diffusing in a square tiled arena and talking to whoever is in range.

Each time step every robot moves, reads the tile under it, re-estimates
locally, and fuses the local estimates of all robots within ``comm_range``.
Robots are points; the random walk goes straight and redraws a uniform
heading with probability ``p_turn`` per step, and a move that would leave the
arena is replaced by one along a random inward heading.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import seeding
from .estimation import DEFAULT_ALPHA_MAX, fisher_confidence, fuse_arrays, mle_fill_ratio
from .metrics import TrialRecord
from .static import _check_accuracy, draw_accuracies

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ArenaConfig:
    n_robots: int = 25
    density: float = 1.0
    comm_range: float = 0.7
    speed: float = 0.14
    dt: float = 0.1
    tile_side: float | None = None
    fill_ratio: float = 0.55
    total_steps: int = 10_000
    seed: int = 0
    accuracy: float = 0.75
    heterogeneous: tuple[float, float] | None = None
    p_turn: float = 0.1
    alpha_max: float = DEFAULT_ALPHA_MAX
    delta: float = 0.01
    bins: int = 10

    def __post_init__(self):
        if self.n_robots < 1:
            raise ValueError("need at least one robot")
        if self.density <= 0:
            raise ValueError(f"density must be positive, got {self.density}")
        if self.comm_range <= 0:
            raise ValueError(f"communication range must be positive, got {self.comm_range}")
        if self.speed < 0 or self.dt <= 0:
            raise ValueError("speed must be >= 0 and dt > 0")
        if not 0.0 <= self.p_turn <= 1.0:
            raise ValueError("p_turn must be a probability")
        if not 0.0 <= self.fill_ratio <= 1.0:
            raise ValueError(f"fill ratio {self.fill_ratio} outside [0, 1]")
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")
        _check_accuracy(self.accuracy, self.heterogeneous)
        if self.tile <= 0:
            raise ValueError("tile side must be positive (set tile_side when speed is 0)")
        if self.arena_side < self.tile:
            raise ValueError(f"arena side {self.arena_side:.4g} m is smaller than one tile")
        if self.alpha_max <= 0 or self.delta <= 0 or self.bins < 1:
            raise ValueError("alpha_max, delta and bins must be positive")

    @property
    def arena_side(self) -> float:
        return math.sqrt(self.n_robots * math.pi * self.comm_range**2 / self.density)

    @property
    def tile(self) -> float:
        """Tile side; by default a robot crosses one tile diagonal per step."""
        if self.tile_side is not None:
            return self.tile_side
        return self.speed * self.dt / math.sqrt(2.0)

    def snapshot(self) -> dict:
        d = asdict(self)
        if self.heterogeneous is not None:
            d["heterogeneous"] = list(self.heterogeneous)
        d["mode"] = "dynamic"
        return d


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float


@dataclass(frozen=True)
class TileGrid:
    """``colors[row, col]`` is True for a black tile; row follows y, col follows x."""

    side_count: int
    tile_side: float
    colors: np.ndarray

    @property
    def black_fraction(self) -> float:
        return float(self.colors.mean())

    def cell_of(self, x, y):
        col = np.minimum((np.asarray(x) // self.tile_side).astype(int), self.side_count - 1)
        row = np.minimum((np.asarray(y) // self.tile_side).astype(int), self.side_count - 1)
        return row, col


def build_arena(cfg: ArenaConfig, rng: np.random.Generator) -> tuple[TileGrid, list[Pose]]:
    """Tile grid with exactly ``round(f * cells)`` black cells plus uniform initial poses."""
    L, tile = cfg.arena_side, cfg.tile
    side = math.ceil(L / tile)
    cells = side * side
    n_black = math.floor(cfg.fill_ratio * cells + 0.5)
    flat = np.zeros(cells, dtype=bool)
    flat[rng.choice(cells, size=n_black, replace=False)] = True
    grid = TileGrid(side, tile, flat.reshape(side, side))
    xy = rng.uniform(0.0, L, size=(cfg.n_robots, 2))
    headings = rng.uniform(0.0, TWO_PI, size=cfg.n_robots)
    poses = [Pose(float(x), float(y), float(h)) for (x, y), h in zip(xy, headings)]
    return grid, poses


def _advance(x, y, h, u_turn, u_head, u_wall, step, L, p_turn):
    """Random-walk kernel shared by the scalar and the vectorized paths."""
    h = np.where(u_turn < p_turn, TWO_PI * u_head, h)
    nx = x + step * np.cos(h)
    ny = y + step * np.sin(h)
    # inward normal of every wall the move would cross
    cx = (nx < 0).astype(float) - (nx > L)
    cy = (ny < 0).astype(float) - (ny > L)
    crossing = (cx != 0) | (cy != 0)
    if np.any(crossing):
        center = np.arctan2(cy, cx)
        half = np.where((cx != 0) & (cy != 0), math.pi / 4, math.pi / 2)
        redrawn = np.mod(center + (2.0 * u_wall - 1.0) * half, TWO_PI)
        h = np.where(crossing, redrawn, h)
        nx = np.where(crossing, x + step * np.cos(h), nx)
        ny = np.where(crossing, y + step * np.sin(h), ny)
    return np.clip(nx, 0.0, L), np.clip(ny, 0.0, L), h


def step_motion(pose: Pose, cfg: ArenaConfig, rng: np.random.Generator) -> Pose:
    u = rng.random(3)
    x, y, h = _advance(pose.x, pose.y, pose.heading, u[0], u[1], u[2],
                       cfg.speed * cfg.dt, cfg.arena_side, cfg.p_turn)
    return Pose(float(x), float(y), float(h))


def sense_tile(pose: Pose, grid: TileGrid) -> bool:
    row, col = grid.cell_of(pose.x, pose.y)
    return bool(grid.colors[row, col])


def _range_adjacency(x, y, r):
    """Boolean ``[..., i, j]`` adjacency for positions shaped ``[..., robots]``."""
    dist = np.hypot(x[..., :, None] - x[..., None, :], y[..., :, None] - y[..., None, :])
    adj = dist <= r
    n = x.shape[-1]
    adj[..., np.arange(n), np.arange(n)] = False
    return adj


def range_neighbors(poses: Sequence[Pose], r: float) -> list[set[int]]:
    x = np.array([p.x for p in poses], dtype=float)
    y = np.array([p.y for p in poses], dtype=float)
    adj = _range_adjacency(x, y, r)
    return [set(np.flatnonzero(row).tolist()) for row in adj]


def _forward_fill(values, has):
    """Replace rows where ``has`` is False with the last row where it was True (else 0)."""
    S, N = has.shape
    idx = np.where(has, np.arange(S)[:, None], -1)
    idx = np.maximum.accumulate(idx, axis=0)
    cols = np.broadcast_to(np.arange(N), (S, N))
    return np.where(idx >= 0, values[np.maximum(idx, 0), cols], 0.0)


def run_dynamic_trial(cfg: ArenaConfig, chunk: int = 1000) -> TrialRecord:
    """Move, sense, estimate and exchange every step; one record sample per step.

    Each robot consumes four uniforms per step from its own stream: turn
    decision, new heading, inward heading, sensor noise.
    """
    S, N = cfg.total_steps, cfg.n_robots
    L, step = cfg.arena_side, cfg.speed * cfg.dt
    grid, poses = build_arena(cfg, seeding.stream(cfg.seed, seeding.ARENA))
    b, w = draw_accuracies(cfg.seed, N, cfg.accuracy, cfg.heterogeneous)
    u = np.stack([g.random((S, 4)) for g in seeding.robot_streams(cfg.seed, N)], axis=1)

    xs = np.empty((S, N))
    ys = np.empty((S, N))
    x = np.array([p.x for p in poses])
    y = np.array([p.y for p in poses])
    h = np.array([p.heading for p in poses])
    for s in range(S):
        x, y, h = _advance(x, y, h, u[s, :, 0], u[s, :, 1], u[s, :, 2], step, L, cfg.p_turn)
        xs[s], ys[s] = x, y

    row, col = grid.cell_of(xs, ys)
    black = grid.colors[row, col]
    readings = np.where(black, u[:, :, 3] < b, u[:, :, 3] < 1.0 - w)
    n = np.cumsum(readings, axis=0)
    t = np.arange(1, S + 1)[:, None] * np.ones(N, dtype=np.int64)
    local = mle_fill_ratio(n, t, b, w)
    alpha = fisher_confidence(n, t, b, w, cfg.alpha_max)

    beta_raw = np.empty((S, N))
    weighted = np.empty((S, N))
    has = np.empty((S, N), dtype=bool)
    for lo in range(0, S, chunk):
        sl = slice(lo, min(lo + chunk, S))
        adj = _range_adjacency(xs[sl], ys[sl], cfg.comm_range).astype(float)
        beta_raw[sl] = np.einsum("sij,sj->si", adj, alpha[sl])
        weighted[sl] = np.einsum("sij,sj->si", adj, alpha[sl] * local[sl])
        has[sl] = adj.any(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        social_raw = np.clip(np.where(beta_raw > 0, weighted / beta_raw, 0.0), 0.0, 1.0)
    # robots without neighbors keep their previous social pair
    social = _forward_fill(social_raw, has)
    beta = _forward_fill(beta_raw, has)
    informed = fuse_arrays(local, alpha, social, beta)
    positions = np.stack([xs, ys], axis=2)
    return TrialRecord(cfg.snapshot(), b, w, n, t, local, alpha, social, beta, informed, positions)


def write_trajectory(record: TrialRecord, path) -> None:
    """Line-delimited JSON dump: one ``{step, robot, x, y, informed}`` object per line."""
    if record.positions is None:
        raise ValueError("record carries no positions")
    with open(path, "w") as fh:
        for s in range(record.length):
            for i in range(record.n_robots):
                x, y = record.positions[s, i]
                fh.write(json.dumps({"step": s + 1, "robot": i, "x": float(x), "y": float(y),
                                     "informed": float(record.informed[s, i])}) + "\n")
