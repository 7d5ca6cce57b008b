"""Sweep configuration, orchestration and analysis.

A sweep is the cartesian product of its axes (robot counts, sensor
accuracies, fill ratios, and either topologies x (C, R) pairs or densities x
step counts) repeated ``trials`` times. Every (cell, trial) gets its own seed
derived from ``(base_seed, cell index, trial index)``, so outputs do not depend
on scheduling.
"""
from __future__ import annotations

import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any

import yaml

from . import seeding
from .dynamic import ArenaConfig, run_dynamic_trial
from .metrics import (
    CONSENSUS_COLUMNS,
    SUMMARY_COLUMNS,
    aggregate,
    consensus_table,
    format_table,
)
from .recordio import IntegrityError, RecordError, read_record, sha256_bytes, sha256_file, write_record
from .static import StaticTrialConfig, run_static_trial
from .topology import KINDS

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
SUMMARY = "summary.tsv"
CONSENSUS = "consensus.tsv"
DEFAULT_ACCURACIES = tuple(round(0.525 + 0.05 * i, 3) for i in range(10))


class ConfigError(ValueError):
    """Invalid sweep configuration."""


@dataclass(frozen=True)
class SweepSpec:
    mode: str = "static"
    n_robots: tuple[int, ...] | None = None
    accuracies: tuple[float, ...] = DEFAULT_ACCURACIES
    heterogeneous: tuple[float, float] | None = (0.525, 0.975)
    fill_ratios: tuple[float, ...] = (0.55, 0.95)
    topologies: tuple[str, ...] = KINDS
    comm: tuple[tuple[int, int], ...] = ((1000, 10),)
    densities: tuple[float, ...] = (1.0, 10.0)
    steps: tuple[int, ...] = (10_000,)
    trials: int = 30
    base_seed: int = 0
    output_dir: str | None = None
    scale_free_m: int = 2
    delta: float = 0.01
    bins: int = 10
    alpha_max: float = 1e12
    comm_range: float = 0.7
    speed: float = 0.14
    dt: float = 0.1
    p_turn: float = 0.1
    tile_side: float | None = None

    def __post_init__(self):
        if self.n_robots is None:
            object.__setattr__(self, "n_robots", (100,) if self.mode == "static" else (25,))
        _validate(self)

    @property
    def accuracy_axis(self) -> list[tuple[float, tuple[float, float] | None]]:
        axis = [(a, None) for a in self.accuracies]
        if self.heterogeneous is not None:
            axis.append((0.75, tuple(self.heterogeneous)))
        return axis

    def cells(self) -> list[dict[str, Any]]:
        if self.mode == "static":
            layouts = [{"topology": k, "rounds": c, "observations_per_round": r}
                       for k, (c, r) in itertools.product(self.topologies, self.comm)]
        else:
            layouts = [{"density": d, "total_steps": s}
                       for d, s in itertools.product(self.densities, self.steps)]
        out = []
        for n, (acc, het), f, lay in itertools.product(
                self.n_robots, self.accuracy_axis, self.fill_ratios, layouts):
            out.append({"n_robots": n, "accuracy": acc, "heterogeneous": het, "fill_ratio": f, **lay})
        return out

    @property
    def n_runs(self) -> int:
        return len(self.cells()) * self.trials

    def trial_config(self, cell: dict[str, Any], cell_index: int, trial: int):
        seed = seeding.trial_seed(self.base_seed, cell_index, trial)
        common = dict(seed=seed, alpha_max=self.alpha_max, delta=self.delta, bins=self.bins, **cell)
        if self.mode == "static":
            return StaticTrialConfig(scale_free_m=self.scale_free_m, **common)
        return ArenaConfig(comm_range=self.comm_range, speed=self.speed, dt=self.dt,
                           p_turn=self.p_turn, tile_side=self.tile_side, **common)

    def resolved(self) -> dict[str, Any]:
        """Every parameter of the sweep except where its outputs go."""
        d = asdict(self)
        d.pop("output_dir")
        return json.loads(json.dumps(d))


def _validate(spec: SweepSpec) -> None:
    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}")

    if spec.mode not in ("static", "dynamic"):
        fail("mode", f"must be 'static' or 'dynamic', got {spec.mode!r}")
    axes = ["n_robots", "fill_ratios"]
    axes += ["topologies", "comm"] if spec.mode == "static" else ["densities", "steps"]
    for key in axes:
        if not getattr(spec, key):
            fail(key, "axis must not be empty")
    if not spec.accuracies and spec.heterogeneous is None:
        fail("accuracies", "need at least one homogeneous accuracy or heterogeneous bounds")
    for a in spec.accuracies:
        if not 0.5 < a <= 1.0:
            fail("accuracies", f"{a} is not an informative sensor accuracy (need 0.5 < a <= 1)")
    if spec.heterogeneous is not None:
        if len(spec.heterogeneous) != 2 or not 0.5 < spec.heterogeneous[0] <= spec.heterogeneous[1] <= 1.0:
            fail("heterogeneous", "bounds must be [lo, hi] with 0.5 < lo <= hi <= 1")
    for f in spec.fill_ratios:
        if not 0.0 <= f <= 1.0:
            fail("fill_ratios", f"{f} outside [0, 1]")
    for n in spec.n_robots:
        if not isinstance(n, int) or n < 1:
            fail("n_robots", f"{n} is not a positive integer")
    for k in spec.topologies:
        if k not in KINDS:
            fail("topologies", f"unknown topology {k!r}; expected one of {list(KINDS)}")
    for pair in spec.comm:
        if len(pair) != 2 or min(pair) < 1:
            fail("comm", f"{pair} must be a pair [C, R] of positive integers")
    if any(d <= 0 for d in spec.densities):
        fail("densities", "densities must be positive")
    if any(s < 1 for s in spec.steps):
        fail("steps", "step counts must be positive")
    if spec.trials < 1:
        fail("trials", "must be positive")
    if not 0 <= spec.base_seed < 2**64:
        fail("base_seed", "must be a 64-bit unsigned integer")
    if spec.mode == "static":
        for n in spec.n_robots:
            if "ring" in spec.topologies and n < 3:
                fail("n_robots", "a ring needs at least 3 robots")
            if any(k != "ring" for k in spec.topologies) and n < 2:
                fail("n_robots", "static topologies need at least 2 robots")
            if "scale_free" in spec.topologies and not 1 <= spec.scale_free_m < n:
                fail("scale_free_m", f"need 1 <= m < n_robots, got m={spec.scale_free_m}, n={n}")
    # the per-trial config classes catch everything else (arena too small, ...)
    for i, cell in enumerate(spec.cells()):
        try:
            spec.trial_config(cell, i, 0)
        except ValueError as exc:
            fail("cell", f"{cell}: {exc}")


_TUPLE_KEYS = {"n_robots", "accuracies", "heterogeneous", "fill_ratios", "topologies", "densities", "steps"}


_FLOAT_KEYS = {"delta", "alpha_max", "comm_range", "speed", "dt", "p_turn", "tile_side"}
_INT_KEYS = {"trials", "base_seed", "scale_free_m", "bins"}


def _coerce(key, value, kind):
    # YAML 1.1 reads "1e12" as a string
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if kind is int and out != float(value):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return out


def spec_from_mapping(data: dict[str, Any]) -> SweepSpec:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of keys to values")
    known = set(SweepSpec.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _TUPLE_KEYS and value is not None:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key}: expected a list")
            value = tuple(value)
        elif key == "comm":
            if not isinstance(value, (list, tuple)):
                raise ConfigError("comm: expected a list of [C, R] pairs")
            value = tuple(tuple(p) for p in value)
        elif key in _FLOAT_KEYS and value is not None:
            value = _coerce(key, value, float)
        elif key in _INT_KEYS:
            value = _coerce(key, value, int)
        kwargs[key] = value
    try:
        return SweepSpec(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SweepSpec:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return spec_from_mapping(data or {})


def _record_name(cell: int, trial: int) -> str:
    return f"records/cell{cell:04d}_trial{trial:03d}.jsonl"


def _run_task(task):
    cell_index, trial, cfg, out_dir = task
    name = _record_name(cell_index, trial)
    try:
        record = run_static_trial(cfg) if isinstance(cfg, StaticTrialConfig) else run_dynamic_trial(cfg)
    except Exception as exc:  # recorded per cell, the sweep carries on
        return name, None, None, f"{type(exc).__name__}: {exc}"
    digest = write_record(record, Path(out_dir) / name)
    return name, digest, record.digest(), None


def run_sweep(spec: SweepSpec, parallelism: int = 1, output_dir=None) -> dict[str, Any]:
    """Run every (cell, trial), write records, a summary table and a manifest.

    Returns the manifest. Output bytes are a function of ``spec`` alone.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be positive")
    target = output_dir or spec.output_dir
    if not target:
        raise ConfigError("output_dir: no output directory given")
    out = Path(target)
    (out / "records").mkdir(parents=True, exist_ok=True)
    tasks = []
    for ci, cell in enumerate(spec.cells()):
        for trial in range(spec.trials):
            tasks.append((ci, trial, spec.trial_config(cell, ci, trial), str(out)))
    log.info("running %d trials with parallelism %d", len(tasks), parallelism)
    if parallelism == 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=1))

    records, errors, digests = [], [], []
    for (ci, trial, cfg, _), (name, sha, digest, err) in zip(tasks, results):
        if err is not None:
            log.warning("cell %d trial %d failed: %s", ci, trial, err)
            errors.append({"cell": ci, "trial": trial, "error": err})
            continue
        records.append({"file": name, "cell": ci, "trial": trial, "seed": cfg.seed, "sha256": sha})
        digests.append(digest)
    summary = format_table(aggregate(digests), SUMMARY_COLUMNS).encode()
    (out / SUMMARY).write_bytes(summary)
    manifest = {
        "format": "swarm-perception.manifest",
        "version": 1,
        "spec": spec.resolved(),
        "runs": len(tasks),
        "records": records,
        "errors": errors,
        "summary": {"file": SUMMARY, "sha256": sha256_bytes(summary)},
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def read_manifest(result_dir) -> dict[str, Any]:
    path = Path(result_dir) / MANIFEST
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise RecordError(f"no {MANIFEST} in {result_dir}") from None
    except json.JSONDecodeError as exc:
        raise RecordError(f"corrupt {MANIFEST}: {exc}") from exc


def verify(result_dir) -> dict[str, Any]:
    """Check every manifest entry exists and matches its hash; returns the manifest."""
    manifest = read_manifest(result_dir)
    for entry in manifest["records"]:
        path = Path(result_dir) / entry["file"]
        if not path.exists():
            raise RecordError(f"missing record file: {entry['file']}")
        if sha256_file(path) != entry["sha256"]:
            raise IntegrityError(f"hash mismatch for record file: {entry['file']}")
    return manifest


def analyze(result_dir, output_dir=None) -> list[Path]:
    """Re-aggregate a finished sweep from its record files."""
    manifest = verify(result_dir)
    digests = [read_record(Path(result_dir) / e["file"]).digest() for e in manifest["records"]]
    out = Path(output_dir or result_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_path, consensus_path = out / SUMMARY, out / CONSENSUS
    summary_path.write_text(format_table(aggregate(digests), SUMMARY_COLUMNS))
    consensus_path.write_text(format_table(consensus_table(digests), CONSENSUS_COLUMNS))
    return [summary_path, consensus_path]


def with_overrides(spec: SweepSpec, **changes) -> SweepSpec:
    changes = {k: v for k, v in changes.items() if v is not None}
    try:
        return replace(spec, **changes) if changes else spec
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
