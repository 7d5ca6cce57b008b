"""Convergence, accuracy and best-of-B consensus metrics, plus sweep aggregation.

Summary tables are tab-separated with a header row. Column order of the
summary table is fixed by :data:`SUMMARY_COLUMNS`:

    mode, n_robots, accuracy, layout, fill_ratio, rounds, obs_per_round,
    trials, samples, conv_q1, conv_median, conv_q3, err_q1, err_median,
    err_q3, non_converged, consensus_round

Convergence values are 1-based round numbers (a robot that never settles
before the last sample is reported at the series length). ``consensus_round``
is the first round at which every robot of every trial in the cell picks the
correct bin, or ``never``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

SUMMARY_COLUMNS = (
    "mode", "n_robots", "accuracy", "layout", "fill_ratio", "rounds", "obs_per_round",
    "trials", "samples", "conv_q1", "conv_median", "conv_q3",
    "err_q1", "err_median", "err_q3", "non_converged", "consensus_round",
)
CONSENSUS_COLUMNS = (
    "mode", "n_robots", "accuracy", "layout", "fill_ratio", "rounds", "obs_per_round",
    "round", "fraction_correct",
)


def convergence_round(series, delta: float = 0.01) -> int:
    """Smallest index K with ``|series[K] - series[k]| < delta`` for every ``k >= K``.

    Works column-wise on 2-D input (rounds x robots) and then returns an array.
    """
    x = np.asarray(series, dtype=float)
    if x.shape[0] == 0:
        raise ValueError("convergence needs a non-empty series")
    if delta <= 0:
        raise ValueError("delta must be positive")
    suffix_max = np.maximum.accumulate(x[::-1], axis=0)[::-1]
    suffix_min = np.minimum.accumulate(x[::-1], axis=0)[::-1]
    ok = (suffix_max - x < delta) & (x - suffix_min < delta)
    k = np.argmax(ok, axis=0)
    return int(k) if x.ndim == 1 else k


def accuracy(series, k, f: float):
    """Absolute error of the series value at index ``k`` (column-wise for 2-D input)."""
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        if not -len(x) <= k < len(x):
            raise IndexError(f"index {k} out of range for series of length {len(x)}")
        return abs(float(x[k]) - f)
    k = np.asarray(k)
    return np.abs(x[k, np.arange(x.shape[1])] - f)


def decide_bin(estimate, bins: int = 10):
    """1-based bin index; bins are ``[(k-1)/B, k/B)`` with the last one closed.

    The floor is corrected against the float boundaries ``k / B`` so that an
    estimate equal to a boundary always lands in the upper bin.
    """
    if bins < 1:
        raise ValueError("need at least one bin")
    e = np.asarray(estimate, dtype=float)
    if np.any((e < 0) | (e > 1)) or np.any(np.isnan(e)):
        raise ValueError("estimates must lie in [0, 1]")
    k = np.floor(e * bins)
    k = np.where((k + 1) / bins <= e, k + 1, k)
    k = np.where(k / bins > e, k - 1, k)
    out = np.minimum(k, bins - 1).astype(int) + 1
    return int(out) if out.ndim == 0 else out


def consensus_fraction(estimates, f: float, bins: int = 10) -> float:
    e = np.asarray(estimates, dtype=float)
    if e.size == 0:
        raise ValueError("consensus needs at least one estimate")
    return float(np.mean(decide_bin(e, bins) == decide_bin(f, bins)))


def accuracy_label(config: dict) -> str:
    het = config.get("heterogeneous")
    if het:
        return f"het({het[0]:g},{het[1]:g})"
    return f"{config['accuracy']:g}"


def cell_key(config: dict) -> tuple:
    if config["mode"] == "static":
        topo = config["topology"]
        layout = topo if isinstance(topo, str) else "custom"
        return ("static", config["n_robots"], accuracy_label(config), layout,
                config["fill_ratio"], config["rounds"], config["observations_per_round"])
    return ("dynamic", config["n_robots"], accuracy_label(config), f"D={config['density']:g}",
            config["fill_ratio"], config["total_steps"], 1)


@dataclass
class TrialRecord:
    """Everything one trial produced: per-robot series of the stored state plus metrics.

    Arrays indexed ``[sample, robot]``; a sample is a communication round in
    static mode (or a time step with ``per_step``) and a time step in dynamic mode.
    """

    config: dict[str, Any]
    b: np.ndarray
    w: np.ndarray
    n: np.ndarray
    t: np.ndarray
    local: np.ndarray
    alpha: np.ndarray
    social: np.ndarray
    beta: np.ndarray
    informed: np.ndarray
    positions: np.ndarray | None = None
    convergence: np.ndarray = field(init=False)
    error: np.ndarray = field(init=False)
    bin: np.ndarray = field(init=False)

    def __post_init__(self):
        f = self.config["fill_ratio"]
        self.convergence = np.atleast_1d(convergence_round(self.informed, self.config["delta"]))
        self.error = np.atleast_1d(accuracy(self.informed, self.convergence, f))
        final = self.informed[self.convergence, np.arange(self.n_robots)]
        self.bin = np.atleast_1d(decide_bin(final, self.config["bins"]))

    @property
    def n_robots(self) -> int:
        return self.informed.shape[1]

    @property
    def length(self) -> int:
        return self.informed.shape[0]

    def consensus_series(self) -> np.ndarray:
        """Fraction of robots picking the correct bin after every sample."""
        bins = self.config["bins"]
        correct = decide_bin(self.informed, bins) == decide_bin(self.config["fill_ratio"], bins)
        return correct.mean(axis=1)

    def digest(self) -> "TrialDigest":
        bins = self.config["bins"]
        correct = decide_bin(self.informed, bins) == decide_bin(self.config["fill_ratio"], bins)
        return TrialDigest(
            key=cell_key(self.config),
            n_robots=self.n_robots,
            length=self.length,
            convergence=self.convergence + 1,
            error=self.error.copy(),
            non_converged=int(np.sum(self.convergence == self.length - 1)),
            correct_per_round=correct.sum(axis=1),
        )


@dataclass
class TrialDigest:
    """The part of a trial record that aggregation needs."""

    key: tuple
    n_robots: int
    length: int
    convergence: np.ndarray
    error: np.ndarray
    non_converged: int
    correct_per_round: np.ndarray


def _group(items: Iterable[TrialRecord | TrialDigest]) -> dict[tuple, list[TrialDigest]]:
    groups: dict[tuple, list[TrialDigest]] = {}
    modes = set()
    for item in items:
        d = item.digest() if isinstance(item, TrialRecord) else item
        modes.add(d.key[0])
        cell = groups.setdefault(d.key, [])
        if cell and (cell[0].n_robots, cell[0].length) != (d.n_robots, d.length):
            raise ValueError(f"records of cell {d.key} have mismatched shapes")
        cell.append(d)
    if len(modes) > 1:
        raise ValueError("cannot aggregate static and dynamic records together")
    return groups


def aggregate(records: Iterable[TrialRecord | TrialDigest]) -> list[dict[str, Any]]:
    """Per-cell medians and quartiles over all robots of all trials."""
    rows = []
    for key, cell in sorted(_group(records).items(), key=lambda kv: _sort_key(kv[0])):
        conv = np.concatenate([d.convergence for d in cell])
        err = np.concatenate([d.error for d in cell])
        correct = np.sum([d.correct_per_round for d in cell], axis=0)
        total = sum(d.n_robots for d in cell)
        full = np.flatnonzero(correct == total)
        cq1, cmed, cq3 = np.percentile(conv, [25, 50, 75])
        eq1, emed, eq3 = np.percentile(err, [25, 50, 75])
        rows.append(dict(zip(SUMMARY_COLUMNS, (
            *key, len(cell), conv.size, float(cq1), float(cmed), float(cq3),
            float(eq1), float(emed), float(eq3), sum(d.non_converged for d in cell),
            int(full[0]) + 1 if full.size else "never",
        ))))
    return rows


def consensus_table(records: Iterable[TrialRecord | TrialDigest]) -> list[dict[str, Any]]:
    """Pooled fraction of robots choosing the correct bin, per round, per cell."""
    rows = []
    for key, cell in sorted(_group(records).items(), key=lambda kv: _sort_key(kv[0])):
        correct = np.sum([d.correct_per_round for d in cell], axis=0)
        total = sum(d.n_robots for d in cell)
        for k, c in enumerate(correct):
            rows.append(dict(zip(CONSENSUS_COLUMNS, (*key, k + 1, float(c) / total))))
    return rows


def _sort_key(key: tuple):
    return tuple(str(v) if isinstance(v, str) else f"{v:020.10f}" for v in key)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def format_table(rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> str:
    lines = ["\t".join(columns)]
    lines += ["\t".join(_fmt(row[c]) for c in columns) for row in rows]
    return "\n".join(lines) + "\n"
