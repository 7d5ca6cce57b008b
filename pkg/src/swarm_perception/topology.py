"""Static communication graphs: fully connected, ring, line and scale-free."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

KINDS = ("full", "ring", "line", "scale_free")


@dataclass(frozen=True)
class TopologyGraph:
    """Undirected, loop-free neighbor structure over ``n_nodes`` robots."""

    n_nodes: int
    adjacency: tuple[frozenset[int], ...]

    def __post_init__(self):
        if len(self.adjacency) != self.n_nodes:
            raise ValueError("adjacency must list one neighbor set per node")
        for i, nbrs in enumerate(self.adjacency):
            if i in nbrs:
                raise ValueError(f"self-loop at node {i}")
            for j in nbrs:
                if not 0 <= j < self.n_nodes or i not in self.adjacency[j]:
                    raise ValueError(f"edge {i}-{j} is not symmetric or out of range")

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[tuple[int, int]]) -> "TopologyGraph":
        nbrs = [set() for _ in range(n_nodes)]
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            nbrs[i].add(j)
            nbrs[j].add(i)
        return cls(n_nodes, tuple(frozenset(s) for s in nbrs))

    def neighbors(self, i: int) -> frozenset[int]:
        if not 0 <= i < self.n_nodes:
            raise IndexError(f"robot id {i} out of range for {self.n_nodes} nodes")
        return self.adjacency[i]

    def edges(self) -> list[tuple[int, int]]:
        return sorted((i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j)

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.adjacency) // 2

    def degrees(self) -> np.ndarray:
        return np.array([len(s) for s in self.adjacency], dtype=int)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n_nodes, self.n_nodes))
        for i, j in self.edges():
            a[i, j] = a[j, i] = 1.0
        return a

    def is_connected(self) -> bool:
        seen = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for j in self.adjacency[i]:
                if j not in seen:
                    seen.add(j)
                    frontier.append(j)
        return len(seen) == self.n_nodes

    def to_edge_list(self) -> str:
        lines = [f"nodes {self.n_nodes}"]
        lines += [f"{i} {j}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "TopologyGraph":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("nodes "):
            raise ValueError("edge list must start with a 'nodes N' header")
        n = int(lines[0].split()[1])
        edges = []
        for ln in lines[1:]:
            i, j = ln.split()
            edges.append((int(i), int(j)))
        return cls.from_edges(n, edges)


def neighbors(g: TopologyGraph, i: int) -> frozenset[int]:
    return g.neighbors(i)


def generate_fully_connected(n: int) -> TopologyGraph:
    if n < 2:
        raise ValueError("a fully connected graph needs n >= 2")
    return TopologyGraph.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))


def generate_ring(n: int) -> TopologyGraph:
    if n < 3:
        raise ValueError("a ring needs n >= 3")
    return TopologyGraph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def generate_line(n: int) -> TopologyGraph:
    if n < 2:
        raise ValueError("a line needs n >= 2")
    return TopologyGraph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def generate_scale_free(n: int, m: int, rng: np.random.Generator) -> TopologyGraph:
    """Barabási-Albert preferential attachment grown from an ``m + 1`` node clique.

    Each new node links to ``m`` distinct existing nodes; targets are drawn one
    at a time proportionally to current degree and duplicates are redrawn.
    """
    if m < 1 or m >= n:
        raise ValueError(f"scale-free graph needs 1 <= m < n, got m={m}, n={n}")
    edges = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    # each node appears once per incident edge, so uniform picks are degree-weighted
    stubs = [v for e in edges for v in e]
    for new in range(m + 1, n):
        targets: list[int] = []
        while len(targets) < m:
            cand = stubs[int(rng.integers(len(stubs)))]
            if cand not in targets:
                targets.append(cand)
        for t in targets:
            edges.append((t, new))
            stubs.extend((t, new))
    return TopologyGraph.from_edges(n, edges)


def build_topology(kind: str, n: int, m: int = 2, rng: np.random.Generator | None = None) -> TopologyGraph:
    if kind == "full":
        return generate_fully_connected(n)
    if kind == "ring":
        return generate_ring(n)
    if kind == "line":
        return generate_line(n)
    if kind == "scale_free":
        if rng is None:
            raise ValueError("scale-free generation needs a random stream")
        return generate_scale_free(n, m, rng)
    raise ValueError(f"unknown topology {kind!r}; expected one of {KINDS}")
