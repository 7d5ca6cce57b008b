"""Derivation of independent random streams from a single trial seed."""
from __future__ import annotations

import numpy as np

# spawn-key namespaces
ROBOT_OBSERVATIONS = 0
TOPOLOGY = 1
ARENA = 2
ROBOT_ACCURACY = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def robot_streams(seed: int, n_robots: int, namespace: int = ROBOT_OBSERVATIONS):
    """One generator per robot; robot ``i`` sees the same stream whatever ``n_robots`` is."""
    return [stream(seed, namespace, i) for i in range(n_robots)]


def trial_seed(base_seed: int, cell: int, trial: int) -> int:
    ss = np.random.SeedSequence([base_seed, cell, trial])
    return int(ss.generate_state(1, np.uint64)[0])
